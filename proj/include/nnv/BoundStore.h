#pragma once

#include "nnv/Types.h"

#include <optional>
#include <vector>

namespace nnv {

enum class TightenOutcome { Tightened, NoChange, Infeasible };

// Variable bounds with a context trail. Every tightening performed above level 0
// is recorded so that pop() restores the exact state of an earlier level.
class BoundStore
{
public:
    BoundStore() = default;
    explicit BoundStore( unsigned numVariables );

    VariableId addVariable( double lower = -kInfinity, double upper = kInfinity );
    unsigned size() const
    {
        return static_cast<unsigned>( _lower.size() );
    }

    double lower( VariableId variable ) const
    {
        return _lower[variable];
    }
    double upper( VariableId variable ) const
    {
        return _upper[variable];
    }
    double bound( VariableId variable, Side side ) const
    {
        return side == Side::Lower ? _lower[variable] : _upper[variable];
    }
    const std::vector<double> &lowerBounds() const
    {
        return _lower;
    }
    const std::vector<double> &upperBounds() const
    {
        return _upper;
    }

    // Unconditional assignment, permitted only at level 0 (query construction).
    void setLower( VariableId variable, double value );
    void setUpper( VariableId variable, double value );

    // Replaces the bound only if strictly tighter by more than tolerance::kTighten.
    // Loosening requests are ignored. An interval emptier than kFeasibility marks
    // the store infeasible; smaller crossings are clamped to a point.
    TightenOutcome tighten( VariableId variable, Side side, double value );
    TightenOutcome tighten( const BoundUpdate &update )
    {
        return tighten( update.variable, update.side, update.value );
    }

    unsigned push();
    void pop( unsigned targetLevel );
    unsigned level() const
    {
        return static_cast<unsigned>( _levelStarts.size() );
    }

    bool infeasible() const
    {
        return _infeasibleVariable.has_value();
    }
    std::optional<VariableId> infeasibleVariable() const
    {
        return _infeasibleVariable;
    }

    unsigned numTightenings() const
    {
        return _numTightenings;
    }

    // Compares bounds and the infeasibility flag; the trail is not part of the value.
    bool sameBounds( const BoundStore &other ) const;

private:
    struct TrailEntry
    {
        static constexpr VariableId kFlag = ~0u;
        VariableId variable;
        Side side;
        double oldValue;
        std::optional<VariableId> oldInfeasible;
    };

    void record( VariableId variable, Side side );

    std::vector<double> _lower;
    std::vector<double> _upper;
    std::vector<TrailEntry> _trail;
    std::vector<size_t> _levelStarts;
    std::optional<VariableId> _infeasibleVariable;
    unsigned _numTightenings = 0;
};

} // namespace nnv
