#pragma once

#include "nnv/BoundStore.h"
#include "nnv/Equation.h"
#include "nnv/Query.h"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nnv {

// Sparse row multipliers indexed by equation position.
using SparseRay = std::vector<std::pair<unsigned, double>>;

SparseRay sparsify( const std::vector<double> &dense, double dropBelow = 0.0 );

// A claimed bound together with the row combination that implies it. An empty
// ray claims the bound is already present in the bound store.
struct BoundExplanation
{
    VariableId variable = 0;
    Side side = Side::Upper;
    double value = 0;
    SparseRay ray;

    bool operator==( const BoundExplanation & ) const = default;
};

// Row      the premise is itself the conclusion (an equation-implied bound)
// ReluR1   ub(b) <= 0          =>  ub(f) <= 0
// ReluR2   lb(b) >= 0          =>  ub(a) <= 0
// ReluR3   lb(f) > 0           =>  ub(a) <= 0
// ReluR4   ub(b) = p, p >= 0   =>  ub(f) <= p
// MaxUpper                     =>  ub(f) <= max_i ub(x_i)
// MaxLower lb(x_i) = p         =>  lb(f) >= p
enum class LemmaRule { Row, ReluR1, ReluR2, ReluR3, ReluR4, MaxUpper, MaxLower };

const char *ruleName( LemmaRule rule );
std::optional<LemmaRule> parseRule( const std::string &name );

struct Lemma
{
    // -1 for Row lemmas.
    int constraintId = -1;
    LemmaRule rule = LemmaRule::Row;
    BoundExplanation premise;
    BoundUpdate conclusion;

    bool operator==( const Lemma & ) const = default;
};

struct SplitLabel
{
    unsigned constraintId = 0;
    unsigned caseIndex = 0;

    bool operator==( const SplitLabel & ) const = default;
};

// One search state. Internal nodes hold one child per case of the split
// constraint, in case order; leaves hold a contradiction ray (possibly empty,
// meaning the bound box itself is empty).
struct ProofNode
{
    std::optional<SplitLabel> split;
    std::vector<Lemma> lemmas;
    std::vector<ProofNode> children;
    std::optional<SparseRay> contradiction;

    bool isLeaf() const
    {
        return children.empty();
    }
    size_t countNodes() const;
    size_t countInternal() const;
    size_t countLeaves() const;

    bool operator==( const ProofNode & ) const = default;
};

// Combined row sum_e ray_e * lhs_e = sum_e ray_e * rhs_e.
std::pair<LinearExpression, double> combineRows( const std::vector<Equation> &equations,
                                                 const SparseRay &ray );

// Bound on `variable` implied by the combined row under the other variables'
// bounds. Absent when the variable does not occur in the row or a needed bound
// is infinite.
std::optional<double> impliedBound( const std::vector<Equation> &equations,
                                    const BoundStore &bounds,
                                    const SparseRay &ray,
                                    VariableId variable,
                                    Side side );

bool checkBound( const std::vector<Equation> &equations,
                 const BoundStore &bounds,
                 const BoundExplanation &explanation );

// True iff the combined row cannot be met inside the bound box by more than
// tolerance::kProof. An empty ray certifies only an already-empty box.
bool checkContradiction( const std::vector<Equation> &equations,
                         const BoundStore &bounds,
                         const SparseRay &ray );

struct CheckOutcome
{
    bool certified = false;
    // Child indices from the root to the offending node, e.g. "0.1.0".
    std::string path;
    std::string reason;
};

// Replays the tree on a fresh copy of the query's bounds and certifies every
// lemma and leaf. The query must be the aux-normalized query the proof refers to.
CheckOutcome checkProofTree( const Query &query, const ProofNode &root );

void writeProof( std::ostream &out, const ProofNode &root );
std::string writeProof( const ProofNode &root );
// Throws ParseError on malformed input.
ProofNode parseProof( std::istream &in );
ProofNode parseProof( const std::string &text );

} // namespace nnv
