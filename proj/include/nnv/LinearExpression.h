#pragma once

#include "nnv/Types.h"

#include <map>
#include <span>

namespace nnv {

// Sum of coefficient * variable plus a constant. Zero coefficients are never stored.
class LinearExpression
{
public:
    LinearExpression() = default;
    explicit LinearExpression( double constant )
        : _constant( constant )
    {
    }

    void addTerm( VariableId variable, double coefficient );
    void setCoefficient( VariableId variable, double coefficient );
    double coefficient( VariableId variable ) const;
    void addConstant( double value )
    {
        _constant += value;
    }
    void setConstant( double value )
    {
        _constant = value;
    }

    double constant() const
    {
        return _constant;
    }
    const std::map<VariableId, double> &terms() const
    {
        return _terms;
    }
    bool empty() const
    {
        return _terms.empty();
    }
    bool isZero() const
    {
        return _terms.empty() && _constant == 0;
    }

    double evaluate( std::span<const double> values ) const;

    LinearExpression &operator+=( const LinearExpression &other );
    LinearExpression &operator*=( double factor );

    bool operator==( const LinearExpression & ) const = default;

private:
    std::map<VariableId, double> _terms;
    double _constant = 0;
};

} // namespace nnv
