#pragma once

#include "nnv/Proof.h"
#include "nnv/Query.h"

#include <vector>

namespace nnv {

// Worklist bound propagation over a query's rows and PL constraints.
//
// Rows: interval arithmetic on x_j = (rhs - sum_{i != j} a_i x_i) / a_j.
// Constraints: kind-specific interval rules, and in free mode the single
// consistent case of a constraint is applied outright.
//
// With a lemma sink the propagator runs in proof mode: only tightenings the
// checker can replay are made (row lemmas with a unit ray, ReLU R1-R4 and the
// two Max rules), and each one is appended to the sink in application order.
class BoundPropagator
{
public:
    static constexpr unsigned kMaxRounds = 100;

    explicit BoundPropagator( const Query &query );

    TightenOutcome run( BoundStore &bounds, std::vector<Lemma> *lemmas = nullptr, unsigned maxRounds = kMaxRounds );

    // Marks everything touching `variable` for the next run (bounds changed elsewhere).
    void touch( VariableId variable );
    void touchAll();

    unsigned rounds() const
    {
        return _rounds;
    }

private:
    struct Row
    {
        std::vector<std::pair<VariableId, double>> terms;
        Relation relation;
        double rhs;
    };

    bool tighten( BoundStore &bounds, VariableId variable, Side side, double value );
    bool propagateRow( BoundStore &bounds, unsigned index, std::vector<Lemma> *lemmas );
    bool propagateConstraint( BoundStore &bounds, const PLConstraint &c );
    bool propagateConstraintForProof( BoundStore &bounds, const PLConstraint &c, std::vector<Lemma> &lemmas );

    std::vector<Row> _rows;
    const std::vector<PLConstraint> &_constraints;
    std::vector<std::vector<unsigned>> _rowsOf;
    std::vector<std::vector<unsigned>> _constraintsOf;
    std::vector<char> _dirtyRow;
    std::vector<char> _dirtyConstraint;
    bool _progress = false;
    bool _infeasible = false;
    unsigned _rounds = 0;
};

} // namespace nnv
