#pragma once

#include "nnv/BoundStore.h"
#include "nnv/Types.h"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nnv {

enum class PLKind { Relu, LeakyRelu, Abs, Sign, Max, Disjunction };

const char *kindName( PLKind kind );

// Two-sided bound on one variable inside a disjunct; infinite sides are absent.
struct DisjunctBound
{
    VariableId variable = 0;
    double lower = -kInfinity;
    double upper = kInfinity;

    bool operator==( const DisjunctBound & ) const = default;
};

using Disjunct = std::vector<DisjunctBound>;

enum class PhaseStatus { Unfixed, Fixed, Infeasible };

struct Phase
{
    PhaseStatus status = PhaseStatus::Unfixed;
    unsigned fixedCase = 0;
};

// A piecewise-linear constraint f = g(b) (or f = max(inputs), or an explicit
// disjunction of bound conjunctions). After normalization every case is a
// pure bound conjunction over f, b and the aux variables:
//
//   ReLU       aux a = f - b              active {a <= 0}           inactive {f <= 0}
//   LeakyReLU  aux a = f - b, c = f - ab  active {a <= 0, b >= 0}   inactive {c <= 0, b <= 0}
//   Abs        aux p = f - b, n = f + b   positive {p <= 0}         negative {n <= 0}
//   Sign       no aux, f in [-1, 1]       positive {f >= 1, b >= 0} negative {f <= -1, b <= -margin}
//   Max        aux a_i = f - x_i          case i {a_i <= 0}
//   Disjunction                           case i = disjunct i
struct PLConstraint
{
    unsigned id = 0;
    PLKind kind = PLKind::Relu;
    VariableId f = 0;
    VariableId b = 0;
    double alpha = 0;
    std::vector<VariableId> inputs;
    std::vector<Disjunct> disjuncts;
    std::vector<VariableId> aux;
    bool normalized = false;

    static PLConstraint relu( VariableId f, VariableId b );
    static PLConstraint leakyRelu( VariableId f, VariableId b, double alpha );
    static PLConstraint abs( VariableId f, VariableId b );
    static PLConstraint sign( VariableId f, VariableId b );
    static PLConstraint max( VariableId f, std::vector<VariableId> inputs );
    static PLConstraint disjunction( std::vector<Disjunct> disjuncts );

    unsigned numCases() const;

    // Throws UsageError when the constraint has not been normalized.
    std::vector<CaseSplit> cases() const;
    CaseSplit caseSplit( unsigned caseIndex ) const;

    // Exact semantics within tolerance; sign(0) = +1.
    bool satisfiedBy( std::span<const double> values,
                      double tolerance = tolerance::kFeasibility ) const;
    // Distance between the assignment and the constraint's semantics.
    double violation( std::span<const double> values ) const;

    // Variables the semantics refer to (excludes aux).
    std::vector<VariableId> semanticVariables() const;
    // Semantic variables followed by aux variables.
    std::vector<VariableId> allVariables() const;

    Phase phase( const BoundStore &bounds ) const;
    // Some case is already implied by the bounds, so the constraint holds for any
    // assignment within bounds that satisfies the aux equations.
    bool satisfiedByBounds( const BoundStore &bounds ) const;

    // Takes part in the sum-of-infeasibilities objective.
    bool supportsSoI() const
    {
        return kind != PLKind::Sign && kind != PLKind::Disjunction;
    }

    void renameVariables( const std::vector<VariableId> &newIndex );

    bool operator==( const PLConstraint & ) const = default;
};

bool caseConsistent( const CaseSplit &split, const BoundStore &bounds );
bool caseEntailed( const CaseSplit &split, const BoundStore &bounds );

} // namespace nnv
