#include "nnv/BoundPropagator.h"

#include <algorithm>
#include <cmath>

namespace nnv {

namespace {

constexpr double kMinCoefficient = 1e-9;

// Extreme of sum_{i != skip} a_i x_i over the box; nullopt if unbounded.
std::optional<double> restExtreme( const std::vector<std::pair<VariableId, double>> &terms,
                                   const BoundStore &bounds,
                                   size_t skip,
                                   bool maximize )
{
    double sum = 0;
    for ( size_t i = 0; i < terms.size(); ++i )
    {
        if ( i == skip )
            continue;
        auto [v, a] = terms[i];
        double x = ( a > 0 ) == maximize ? bounds.upper( v ) : bounds.lower( v );
        if ( std::isinf( x ) )
            return std::nullopt;
        sum += a * x;
    }
    return sum;
}

double leakyForward( double alpha, double x )
{
    return x >= 0 ? x : alpha * x;
}

double leakyInverse( double alpha, double y )
{
    return y >= 0 ? y : y / alpha;
}

} // namespace

BoundPropagator::BoundPropagator( const Query &query )
    : _constraints( query.constraints )
    , _rowsOf( query.numVariables() )
    , _constraintsOf( query.numVariables() )
{
    for ( const Equation &e : query.equations )
    {
        Row row{ {}, e.relation, e.rhs - e.lhs.constant() };
        for ( const auto &[v, a] : e.lhs.terms() )
        {
            row.terms.push_back( { v, a } );
            _rowsOf[v].push_back( static_cast<unsigned>( _rows.size() ) );
        }
        _rows.push_back( std::move( row ) );
    }
    for ( unsigned i = 0; i < _constraints.size(); ++i )
        for ( VariableId v : _constraints[i].allVariables() )
            _constraintsOf[v].push_back( i );
    _dirtyRow.assign( _rows.size(), 1 );
    _dirtyConstraint.assign( _constraints.size(), 1 );
}

void BoundPropagator::touch( VariableId variable )
{
    for ( unsigned r : _rowsOf[variable] )
        _dirtyRow[r] = 1;
    for ( unsigned c : _constraintsOf[variable] )
        _dirtyConstraint[c] = 1;
}

void BoundPropagator::touchAll()
{
    std::fill( _dirtyRow.begin(), _dirtyRow.end(), 1 );
    std::fill( _dirtyConstraint.begin(), _dirtyConstraint.end(), 1 );
}

bool BoundPropagator::tighten( BoundStore &bounds, VariableId variable, Side side, double value )
{
    if ( std::isnan( value ) )
        return true;
    switch ( bounds.tighten( variable, side, value ) )
    {
    case TightenOutcome::NoChange:
        return true;
    case TightenOutcome::Tightened:
        _progress = true;
        touch( variable );
        return true;
    case TightenOutcome::Infeasible:
        _infeasible = true;
        return false;
    }
    return true;
}

TightenOutcome BoundPropagator::run( BoundStore &bounds, std::vector<Lemma> *lemmas, unsigned maxRounds )
{
    _infeasible = bounds.infeasible();
    _rounds = 0;
    bool changed = false;
    while ( !_infeasible && _rounds < maxRounds )
    {
        _progress = false;
        std::vector<char> rows;
        std::vector<char> constraints;
        rows.swap( _dirtyRow );
        constraints.swap( _dirtyConstraint );
        _dirtyRow.assign( _rows.size(), 0 );
        _dirtyConstraint.assign( _constraints.size(), 0 );
        bool any = false;

        for ( unsigned r = 0; r < rows.size() && !_infeasible; ++r )
            if ( rows[r] )
            {
                any = true;
                propagateRow( bounds, r, lemmas );
            }
        for ( unsigned c = 0; c < constraints.size() && !_infeasible; ++c )
            if ( constraints[c] )
            {
                any = true;
                if ( lemmas )
                    propagateConstraintForProof( bounds, _constraints[c], *lemmas );
                else
                    propagateConstraint( bounds, _constraints[c] );
            }
        if ( !any )
            break;
        ++_rounds;
        changed = changed || _progress;
        if ( !_progress )
            break;
    }
    if ( _infeasible )
    {
        // Leave every row dirty: the caller will pop and come back with other bounds.
        touchAll();
        return TightenOutcome::Infeasible;
    }
    return changed ? TightenOutcome::Tightened : TightenOutcome::NoChange;
}

bool BoundPropagator::propagateRow( BoundStore &bounds, unsigned index, std::vector<Lemma> *lemmas )
{
    const Row &row = _rows[index];
    if ( lemmas && row.relation != Relation::Eq )
        return true;
    for ( size_t j = 0; j < row.terms.size(); ++j )
    {
        auto [v, a] = row.terms[j];
        if ( std::fabs( a ) < kMinCoefficient )
            continue;
        // a x <= rhs - min(rest)  and  a x >= rhs - max(rest)
        std::optional<double> aUpper, aLower;
        if ( row.relation != Relation::Ge )
            if ( auto rest = restExtreme( row.terms, bounds, j, false ) )
                aUpper = row.rhs - *rest;
        if ( row.relation != Relation::Le )
            if ( auto rest = restExtreme( row.terms, bounds, j, true ) )
                aLower = row.rhs - *rest;

        std::optional<double> upper = a > 0 ? aUpper : aLower;
        std::optional<double> lower = a > 0 ? aLower : aUpper;
        for ( Side side : { Side::Lower, Side::Upper } )
        {
            const std::optional<double> &raw = side == Side::Lower ? lower : upper;
            if ( !raw )
                continue;
            double value = *raw / a;
            if ( !lemmas )
            {
                if ( !tighten( bounds, v, side, value ) )
                    return false;
                continue;
            }
            TightenOutcome outcome = bounds.tighten( v, side, value );
            if ( outcome == TightenOutcome::NoChange )
                continue;
            Lemma lemma;
            lemma.constraintId = -1;
            lemma.rule = LemmaRule::Row;
            lemma.premise = { v, side, value, { { index, 1.0 } } };
            lemma.conclusion = { v, side, value };
            lemmas->push_back( lemma );
            if ( outcome == TightenOutcome::Infeasible )
            {
                _infeasible = true;
                return false;
            }
            _progress = true;
            touch( v );
        }
    }
    return true;
}

bool BoundPropagator::propagateConstraint( BoundStore &bounds, const PLConstraint &c )
{
    auto lo = [&]( VariableId v ) { return bounds.lower( v ); };
    auto hi = [&]( VariableId v ) { return bounds.upper( v ); };
    auto t = [&]( VariableId v, Side side, double value ) {
        return std::isinf( value ) || tighten( bounds, v, side, value );
    };

    bool ok = true;
    switch ( c.kind )
    {
    case PLKind::Relu:
        ok = t( c.f, Side::Lower, 0 ) && t( c.f, Side::Lower, lo( c.b ) ) && t( c.f, Side::Upper, std::max( 0.0, hi( c.b ) ) ) &&
             t( c.b, Side::Upper, hi( c.f ) );
        if ( ok && lo( c.f ) > 0 )
            ok = t( c.b, Side::Lower, lo( c.f ) );
        break;
    case PLKind::LeakyRelu:
        ok = t( c.f, Side::Lower, leakyForward( c.alpha, lo( c.b ) ) ) &&
             t( c.f, Side::Upper, leakyForward( c.alpha, hi( c.b ) ) ) &&
             t( c.b, Side::Lower, leakyInverse( c.alpha, lo( c.f ) ) ) &&
             t( c.b, Side::Upper, leakyInverse( c.alpha, hi( c.f ) ) );
        break;
    case PLKind::Abs:
    {
        double magnitude = std::max( -lo( c.b ), hi( c.b ) );
        double least = lo( c.b ) > 0 ? lo( c.b ) : hi( c.b ) < 0 ? -hi( c.b ) : 0.0;
        ok = t( c.f, Side::Lower, least ) && t( c.f, Side::Upper, magnitude ) && t( c.b, Side::Lower, -hi( c.f ) ) &&
             t( c.b, Side::Upper, hi( c.f ) );
        if ( ok && lo( c.b ) >= 0 )
            ok = t( c.b, Side::Lower, lo( c.f ) );
        if ( ok && hi( c.b ) <= 0 )
            ok = t( c.b, Side::Upper, -lo( c.f ) );
        break;
    }
    case PLKind::Sign:
        ok = t( c.f, Side::Lower, -1 ) && t( c.f, Side::Upper, 1 );
        if ( ok && lo( c.b ) >= 0 )
            ok = t( c.f, Side::Lower, 1 );
        if ( ok && hi( c.b ) < 0 )
            ok = t( c.f, Side::Upper, -1 );
        break;
    case PLKind::Max:
    {
        double bestLower = -kInfinity, bestUpper = -kInfinity;
        for ( VariableId x : c.inputs )
        {
            bestLower = std::max( bestLower, lo( x ) );
            bestUpper = std::max( bestUpper, hi( x ) );
        }
        ok = t( c.f, Side::Lower, bestLower ) && t( c.f, Side::Upper, bestUpper );
        for ( VariableId x : c.inputs )
            ok = ok && t( x, Side::Upper, hi( c.f ) );
        break;
    }
    case PLKind::Disjunction:
    {
        // Hull of the consistent disjuncts, per variable they all bound.
        std::vector<const Disjunct *> live;
        for ( unsigned i = 0; i < c.disjuncts.size(); ++i )
            if ( caseConsistent( c.caseSplit( i ), bounds ) )
                live.push_back( &c.disjuncts[i] );
        if ( live.empty() )
            break;
        for ( const DisjunctBound &candidate : *live[0] )
        {
            VariableId v = candidate.variable;
            double hullLower = kInfinity, hullUpper = -kInfinity;
            bool everywhere = true;
            for ( const Disjunct *d : live )
            {
                auto it = std::find_if( d->begin(), d->end(), [&]( const DisjunctBound &b ) { return b.variable == v; } );
                if ( it == d->end() )
                {
                    everywhere = false;
                    break;
                }
                hullLower = std::min( hullLower, std::max( lo( v ), it->lower ) );
                hullUpper = std::max( hullUpper, std::min( hi( v ), it->upper ) );
            }
            if ( everywhere )
                ok = ok && t( v, Side::Lower, hullLower ) && t( v, Side::Upper, hullUpper );
        }
        break;
    }
    }
    if ( !ok )
        return false;

    if ( !c.normalized )
        return true;
    Phase phase = c.phase( bounds );
    if ( phase.status == PhaseStatus::Unfixed )
        return true;
    unsigned caseIndex = phase.status == PhaseStatus::Fixed ? phase.fixedCase : 0;
    for ( const BoundUpdate &update : c.caseSplit( caseIndex ) )
        if ( !tighten( bounds, update.variable, update.side, update.value ) )
            return false;
    if ( phase.status == PhaseStatus::Infeasible )
    {
        _infeasible = true;
        return false;
    }
    return true;
}

bool BoundPropagator::propagateConstraintForProof( BoundStore &bounds, const PLConstraint &c, std::vector<Lemma> &lemmas )
{
    auto emit = [&]( LemmaRule rule, BoundExplanation premise, BoundUpdate conclusion ) {
        TightenOutcome outcome = bounds.tighten( conclusion );
        if ( outcome == TightenOutcome::NoChange )
            return true;
        lemmas.push_back( Lemma{ static_cast<int>( c.id ), rule, premise, conclusion } );
        if ( outcome == TightenOutcome::Infeasible )
        {
            _infeasible = true;
            return false;
        }
        _progress = true;
        touch( conclusion.variable );
        return true;
    };

    if ( c.kind == PLKind::Relu && c.normalized )
    {
        VariableId a = c.aux[0];
        double ub = bounds.upper( c.b );
        if ( ub <= 0 && !emit( LemmaRule::ReluR1, { c.b, Side::Upper, ub, {} }, { c.f, Side::Upper, 0 } ) )
            return false;
        double lb = bounds.lower( c.b );
        if ( lb >= 0 && !emit( LemmaRule::ReluR2, { c.b, Side::Lower, lb, {} }, { a, Side::Upper, 0 } ) )
            return false;
        double lf = bounds.lower( c.f );
        if ( lf > 0 && !emit( LemmaRule::ReluR3, { c.f, Side::Lower, lf, {} }, { a, Side::Upper, 0 } ) )
            return false;
        ub = bounds.upper( c.b );
        if ( ub >= 0 && std::isfinite( ub ) &&
             !emit( LemmaRule::ReluR4, { c.b, Side::Upper, ub, {} }, { c.f, Side::Upper, ub } ) )
            return false;
    }
    else if ( c.kind == PLKind::Max )
    {
        double bestUpper = -kInfinity;
        VariableId bestInput = c.inputs.front();
        for ( VariableId x : c.inputs )
        {
            bestUpper = std::max( bestUpper, bounds.upper( x ) );
            if ( bounds.lower( x ) > bounds.lower( bestInput ) )
                bestInput = x;
        }
        if ( std::isfinite( bestUpper ) &&
             !emit( LemmaRule::MaxUpper, { c.f, Side::Upper, bestUpper, {} }, { c.f, Side::Upper, bestUpper } ) )
            return false;
        double lower = bounds.lower( bestInput );
        if ( std::isfinite( lower ) &&
             !emit( LemmaRule::MaxLower, { bestInput, Side::Lower, lower, {} }, { c.f, Side::Lower, lower } ) )
            return false;
    }
    return true;
}

} // namespace nnv
