#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace nnv {

using VariableId = unsigned;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

namespace tolerance {
// Semantic feasibility of assignments and infeasibility detection in bound stores.
inline constexpr double kFeasibility = 1e-6;
// Minimum improvement for a bound update to count as a tightening.
inline constexpr double kTighten = 1e-9;
// Strict margin demanded by the proof checker.
inline constexpr double kProof = 1e-6;
// Primal feasibility inside the LP engine.
inline constexpr double kLp = 1e-7;
// Smallest acceptable pivot element.
inline constexpr double kPivot = 1e-9;
// The negative phase of a Sign constraint requires b <= -kSignMargin, since sign(0) = +1.
inline constexpr double kSignMargin = 1e-6;
} // namespace tolerance

enum class Side { Lower, Upper };

enum class Relation { Eq, Le, Ge };

struct BoundUpdate
{
    VariableId variable = 0;
    Side side = Side::Lower;
    double value = 0;

    bool operator==( const BoundUpdate & ) const = default;
};

// A case split is a conjunction of bound updates; it never carries equations.
using CaseSplit = std::vector<BoundUpdate>;

inline const char *sideName( Side side )
{
    return side == Side::Lower ? "l" : "u";
}

} // namespace nnv
