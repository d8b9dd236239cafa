#pragma once

#include "nnv/BoundStore.h"
#include "nnv/Equation.h"
#include "nnv/PLConstraint.h"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nnv {

// A satisfiability query: bounded variables, linear (in)equations and
// piecewise-linear constraints. Variables are indexed 0..numVariables-1.
struct Query
{
    BoundStore bounds;
    std::vector<Equation> equations;
    std::vector<PLConstraint> constraints;
    std::vector<VariableId> inputVariables;
    std::vector<VariableId> outputVariables;

    unsigned numVariables() const
    {
        return bounds.size();
    }

    VariableId addVariable( double lower = -kInfinity, double upper = kInfinity )
    {
        return bounds.addVariable( lower, upper );
    }

    void addEquation( Equation equation )
    {
        equations.push_back( std::move( equation ) );
    }

    // Assigns the next constraint id and returns it.
    unsigned addConstraint( PLConstraint constraint );

    // Throws UsageError if any reference is out of range.
    void validate() const;

    bool operator==( const Query &other ) const;
};

using Assignment = std::vector<double>;

// Human-readable description of the first violated bound, equation or constraint.
std::optional<std::string> findViolation( const Query &query,
                                          std::span<const double> values,
                                          double tolerance = tolerance::kFeasibility );

inline bool satisfies( const Query &query,
                       std::span<const double> values,
                       double tolerance = tolerance::kFeasibility )
{
    return !findViolation( query, values, tolerance ).has_value();
}

} // namespace nnv
