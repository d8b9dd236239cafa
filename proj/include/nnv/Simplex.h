#pragma once

#include "nnv/BoundStore.h"
#include "nnv/Equation.h"

#include <cstdint>
#include <vector>

namespace nnv {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpOutcome
{
    LpStatus status = LpStatus::Optimal;
    // Structural assignment (Optimal), or the point where phase one stopped.
    std::vector<double> assignment;
    double value = 0;
    // Row multipliers: the Farkas ray when Infeasible, the duals when Optimal.
    std::vector<double> rowMultipliers;
};

// Bounded-variable revised simplex over a fixed set of equality rows.
//
// Each row i carries a logical column r_i with bounds [0, 0], so the initial
// basis is the identity. The row and column sets never change after
// construction; case splits and backtracking reach the tableau only as bound
// updates. Phase one minimises the sum of bound violations of the basic
// variables; when it stalls above zero, the phase-one pricing vector is a
// Farkas ray: the row combination y'A x = y'rhs cannot be met within the bounds.
class Tableau
{
public:
    // All equations must be equalities.
    Tableau( const std::vector<Equation> &equations, const BoundStore &bounds );

    unsigned numRows() const
    {
        return _m;
    }
    unsigned numVariables() const
    {
        return _n;
    }

    void setLowerBound( VariableId variable, double value );
    void setUpperBound( VariableId variable, double value );
    void notifyBoundUpdate( VariableId variable, Side side, double value )
    {
        side == Side::Lower ? setLowerBound( variable, value ) : setUpperBound( variable, value );
    }
    // Copies every structural bound from the store.
    void syncBounds( const BoundStore &bounds );

    // Minimises the objective (constant term included in the value); an empty
    // expression makes this a pure feasibility check.
    LpOutcome solve( const LinearExpression &objective = LinearExpression() );
    LpOutcome maximize( const LinearExpression &objective );

    // Ray of the last Infeasible solve; throws UsageError otherwise.
    const std::vector<double> &farkasRay() const;

    const std::vector<double> &assignment() const
    {
        return _x;
    }
    uint64_t pivots() const
    {
        return _pivots;
    }
    void setIterationLimit( unsigned limit )
    {
        _iterationLimit = limit;
    }

private:
    enum class Rule { Dantzig, Bland };

    void refactor();
    void resetToLogicalBasis();
    void computeBasicValues();
    void placeNonbasic( unsigned column );
    void column( unsigned j, std::vector<double> &out ) const;
    double dotColumn( const std::vector<double> &y, unsigned j ) const;
    bool basicInfeasible() const;

    unsigned _m;
    unsigned _n;
    std::vector<std::vector<std::pair<unsigned, double>>> _columns;
    std::vector<double> _rhs;
    std::vector<double> _lower;
    std::vector<double> _upper;
    std::vector<double> _x;
    std::vector<unsigned> _basis;
    std::vector<int> _rowOf;
    std::vector<bool> _atUpper;
    std::vector<double> _binv;
    unsigned _pivotsSinceRefactor = 0;
    bool _valuesDirty = true;
    uint64_t _pivots = 0;
    unsigned _iterationLimit = 0;
    bool _lastInfeasible = false;
    std::vector<double> _lastRay;
};

} // namespace nnv
