#pragma once

#include "nnv/LinearExpression.h"

namespace nnv {

// lhs (relation) rhs, where lhs has no constant term.
struct Equation
{
    LinearExpression lhs;
    Relation relation = Relation::Eq;
    double rhs = 0;

    Equation() = default;
    Equation( Relation relation, double rhs )
        : relation( relation )
        , rhs( rhs )
    {
    }

    void addTerm( VariableId variable, double coefficient )
    {
        lhs.addTerm( variable, coefficient );
    }

    // lhs(values) - rhs
    double residual( std::span<const double> values ) const
    {
        return lhs.evaluate( values ) - rhs;
    }

    bool satisfiedBy( std::span<const double> values, double tolerance ) const;

    bool operator==( const Equation & ) const = default;
};

} // namespace nnv
