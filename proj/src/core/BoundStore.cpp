#include "nnv/BoundStore.h"
#include "nnv/Error.h"

namespace nnv {

BoundStore::BoundStore( unsigned numVariables )
    : _lower( numVariables, -kInfinity )
    , _upper( numVariables, kInfinity )
{
}

VariableId BoundStore::addVariable( double lower, double upper )
{
    if ( level() != 0 )
        throw UsageError( "variables can only be added at context level 0" );
    _lower.push_back( lower );
    _upper.push_back( upper );
    return size() - 1;
}

void BoundStore::setLower( VariableId variable, double value )
{
    if ( level() != 0 )
        throw UsageError( "unconditional bound assignment above context level 0" );
    _lower[variable] = value;
}

void BoundStore::setUpper( VariableId variable, double value )
{
    if ( level() != 0 )
        throw UsageError( "unconditional bound assignment above context level 0" );
    _upper[variable] = value;
}

void BoundStore::record( VariableId variable, Side side )
{
    if ( _levelStarts.empty() )
        return;
    _trail.push_back( { variable, side, bound( variable, side ), std::nullopt } );
}

TightenOutcome BoundStore::tighten( VariableId variable, Side side, double value )
{
    if ( side == Side::Lower )
    {
        if ( !( value > _lower[variable] + tolerance::kTighten ) )
            return TightenOutcome::NoChange;
        record( variable, side );
        if ( value > _upper[variable] && value <= _upper[variable] + tolerance::kFeasibility )
            value = _upper[variable];
        _lower[variable] = value;
    }
    else
    {
        if ( !( value < _upper[variable] - tolerance::kTighten ) )
            return TightenOutcome::NoChange;
        record( variable, side );
        if ( value < _lower[variable] && value >= _lower[variable] - tolerance::kFeasibility )
            value = _lower[variable];
        _upper[variable] = value;
    }
    ++_numTightenings;

    if ( _lower[variable] > _upper[variable] + tolerance::kFeasibility )
    {
        if ( !_infeasibleVariable )
        {
            if ( !_levelStarts.empty() )
                _trail.push_back( { TrailEntry::kFlag, Side::Lower, 0, _infeasibleVariable } );
            _infeasibleVariable = variable;
        }
        return TightenOutcome::Infeasible;
    }
    return TightenOutcome::Tightened;
}

unsigned BoundStore::push()
{
    _levelStarts.push_back( _trail.size() );
    return level();
}

void BoundStore::pop( unsigned targetLevel )
{
    if ( targetLevel > level() )
        throw UsageError( "pop target " + std::to_string( targetLevel ) +
                          " is above the current level " + std::to_string( level() ) );
    if ( targetLevel == level() )
        return;

    size_t keep = _levelStarts[targetLevel];
    while ( _trail.size() > keep )
    {
        const TrailEntry &entry = _trail.back();
        if ( entry.variable == TrailEntry::kFlag )
            _infeasibleVariable = entry.oldInfeasible;
        else if ( entry.side == Side::Lower )
            _lower[entry.variable] = entry.oldValue;
        else
            _upper[entry.variable] = entry.oldValue;
        _trail.pop_back();
    }
    _levelStarts.resize( targetLevel );
}

bool BoundStore::sameBounds( const BoundStore &other ) const
{
    return _lower == other._lower && _upper == other._upper &&
           _infeasibleVariable.has_value() == other._infeasibleVariable.has_value();
}

} // namespace nnv
