#include "nnv/LinearExpression.h"
#include "nnv/Equation.h"

#include <cmath>

namespace nnv {

void LinearExpression::addTerm( VariableId variable, double coefficient )
{
    if ( coefficient == 0 )
        return;
    auto [it, inserted] = _terms.try_emplace( variable, coefficient );
    if ( !inserted )
    {
        it->second += coefficient;
        if ( it->second == 0 )
            _terms.erase( it );
    }
}

void LinearExpression::setCoefficient( VariableId variable, double coefficient )
{
    if ( coefficient == 0 )
        _terms.erase( variable );
    else
        _terms[variable] = coefficient;
}

double LinearExpression::coefficient( VariableId variable ) const
{
    auto it = _terms.find( variable );
    return it == _terms.end() ? 0.0 : it->second;
}

double LinearExpression::evaluate( std::span<const double> values ) const
{
    double sum = _constant;
    for ( const auto &[variable, coefficient] : _terms )
        sum += coefficient * values[variable];
    return sum;
}

LinearExpression &LinearExpression::operator+=( const LinearExpression &other )
{
    for ( const auto &[variable, coefficient] : other._terms )
        addTerm( variable, coefficient );
    _constant += other._constant;
    return *this;
}

LinearExpression &LinearExpression::operator*=( double factor )
{
    if ( factor == 0 )
    {
        _terms.clear();
        _constant = 0;
        return *this;
    }
    for ( auto &entry : _terms )
        entry.second *= factor;
    _constant *= factor;
    return *this;
}

bool Equation::satisfiedBy( std::span<const double> values, double tolerance ) const
{
    double r = residual( values );
    switch ( relation )
    {
    case Relation::Eq:
        return std::fabs( r ) <= tolerance;
    case Relation::Le:
        return r <= tolerance;
    case Relation::Ge:
        return r >= -tolerance;
    }
    return false;
}

} // namespace nnv
