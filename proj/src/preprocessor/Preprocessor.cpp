#include "nnv/Preprocessor.h"

#include "nnv/BoundPropagator.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nnv {

namespace {

Equation makeRow( std::initializer_list<std::pair<VariableId, double>> terms, double rhs = 0 )
{
    Equation e;
    for ( auto [v, a] : terms )
        e.addTerm( v, a );
    e.rhs = rhs;
    return e;
}

} // namespace

Query normalize( const Query &query )
{
    Query q;
    q.bounds = query.bounds;
    q.inputVariables = query.inputVariables;
    q.outputVariables = query.outputVariables;

    for ( const Equation &original : query.equations )
    {
        Equation e = original;
        e.rhs -= e.lhs.constant();
        e.lhs.setConstant( 0 );
        if ( e.relation != Relation::Eq )
        {
            VariableId slack = q.addVariable( 0, kInfinity );
            e.addTerm( slack, e.relation == Relation::Le ? 1.0 : -1.0 );
            e.relation = Relation::Eq;
        }
        q.addEquation( std::move( e ) );
    }

    for ( PLConstraint c : query.constraints )
    {
        if ( c.normalized )
        {
            q.addConstraint( std::move( c ) );
            continue;
        }
        c.aux.clear();
        switch ( c.kind )
        {
        case PLKind::Relu:
        {
            q.bounds.tighten( c.f, Side::Lower, 0 );
            VariableId a = q.addVariable( 0, kInfinity );
            q.addEquation( makeRow( { { c.f, 1 }, { c.b, -1 }, { a, -1 } } ) );
            c.aux = { a };
            break;
        }
        case PLKind::LeakyRelu:
        {
            VariableId a = q.addVariable( 0, kInfinity );
            VariableId s = q.addVariable( 0, kInfinity );
            q.addEquation( makeRow( { { c.f, 1 }, { c.b, -1 }, { a, -1 } } ) );
            q.addEquation( makeRow( { { c.f, 1 }, { c.b, -c.alpha }, { s, -1 } } ) );
            c.aux = { a, s };
            break;
        }
        case PLKind::Abs:
        {
            q.bounds.tighten( c.f, Side::Lower, 0 );
            VariableId p = q.addVariable( 0, kInfinity );
            VariableId n = q.addVariable( 0, kInfinity );
            q.addEquation( makeRow( { { c.f, 1 }, { c.b, -1 }, { p, -1 } } ) );
            q.addEquation( makeRow( { { c.f, 1 }, { c.b, 1 }, { n, -1 } } ) );
            c.aux = { p, n };
            break;
        }
        case PLKind::Sign:
            q.bounds.tighten( c.f, Side::Lower, -1 );
            q.bounds.tighten( c.f, Side::Upper, 1 );
            break;
        case PLKind::Max:
            for ( VariableId x : c.inputs )
            {
                VariableId a = q.addVariable( 0, kInfinity );
                q.addEquation( makeRow( { { c.f, 1 }, { x, -1 }, { a, -1 } } ) );
                c.aux.push_back( a );
            }
            break;
        case PLKind::Disjunction:
            break;
        }
        c.normalized = true;
        q.addConstraint( std::move( c ) );
    }
    return q;
}

namespace {

class Simplifier
{
public:
    Simplifier( Query query, PreprocessReport &report )
        : _q( std::move( query ) )
        , _report( report )
        , _parent( _q.numVariables() )
        , _removed( _q.numVariables(), false )
    {
        std::iota( _parent.begin(), _parent.end(), 0u );
    }

    Query run( unsigned maxPasses )
    {
        for ( unsigned pass = 0; pass < maxPasses; ++pass )
        {
            bool changed = false;
            BoundPropagator propagator( _q );
            TightenOutcome outcome = propagator.run( _q.bounds );
            _report.fixpointRounds += propagator.rounds();
            if ( outcome == TightenOutcome::Infeasible )
                return infeasible();
            changed = outcome == TightenOutcome::Tightened;

            std::optional<bool> collapsed = collapse();
            if ( !collapsed )
                return infeasible();
            std::optional<bool> merged = merge();
            if ( !merged )
                return infeasible();
            std::optional<bool> eliminated = eliminate();
            if ( !eliminated )
                return infeasible();
            if ( !( changed || *collapsed || *merged || *eliminated ) )
                break;
        }
        return reindex();
    }

private:
    VariableId find( VariableId v )
    {
        while ( _parent[v] != v )
            v = _parent[v] = _parent[_parent[v]];
        return v;
    }

    Query infeasible()
    {
        _report.infeasible = true;
        _report.indexMapping.clear();
        for ( VariableId v = 0; v < _q.numVariables(); ++v )
            _report.indexMapping.push_back( v );
        _report.eliminatedVariables.clear();
        _report.mergedVariables.clear();
        return std::move( _q );
    }

    std::optional<bool> collapse()
    {
        bool changed = false;
        std::vector<PLConstraint> kept;
        for ( PLConstraint &c : _q.constraints )
        {
            Phase phase = c.phase( _q.bounds );
            if ( phase.status == PhaseStatus::Infeasible )
                return std::nullopt;
            if ( phase.status == PhaseStatus::Fixed )
            {
                for ( const BoundUpdate &update : c.caseSplit( phase.fixedCase ) )
                    if ( _q.bounds.tighten( update ) == TightenOutcome::Infeasible )
                        return std::nullopt;
                ++_report.collapsedConstraints;
                changed = true;
                continue;
            }
            if ( c.satisfiedByBounds( _q.bounds ) )
            {
                ++_report.collapsedConstraints;
                changed = true;
                continue;
            }
            kept.push_back( std::move( c ) );
        }
        _q.constraints = std::move( kept );
        for ( unsigned i = 0; i < _q.constraints.size(); ++i )
            _q.constraints[i].id = i;
        return changed;
    }

    // Rewrites every occurrence of `from` as `to`.
    void substitute( VariableId from, VariableId to )
    {
        for ( Equation &e : _q.equations )
        {
            double a = e.lhs.coefficient( from );
            if ( a == 0 )
                continue;
            e.lhs.setCoefficient( from, 0 );
            e.lhs.addTerm( to, a );
        }
        std::vector<VariableId> rename( _q.numVariables() );
        std::iota( rename.begin(), rename.end(), 0u );
        rename[from] = to;
        for ( PLConstraint &c : _q.constraints )
            c.renameVariables( rename );
        for ( auto *list : { &_q.inputVariables, &_q.outputVariables } )
        {
            std::vector<VariableId> updated;
            for ( VariableId v : *list )
            {
                VariableId r = v == from ? to : v;
                if ( std::find( updated.begin(), updated.end(), r ) == updated.end() )
                    updated.push_back( r );
            }
            *list = std::move( updated );
        }
    }

    std::optional<bool> merge()
    {
        bool changed = false;
        for ( Equation &e : _q.equations )
        {
            if ( e.relation != Relation::Eq || e.rhs != 0 || e.lhs.terms().size() != 2 )
                continue;
            auto first = *e.lhs.terms().begin();
            auto second = *e.lhs.terms().rbegin();
            if ( std::fabs( first.second ) != 1 || first.second != -second.second )
                continue;
            VariableId keep = first.first, drop = second.first;
            double lo = std::max( _q.bounds.lower( keep ), _q.bounds.lower( drop ) );
            double hi = std::min( _q.bounds.upper( keep ), _q.bounds.upper( drop ) );
            if ( lo > hi + tolerance::kFeasibility )
                return std::nullopt;
            _q.bounds.setLower( keep, std::min( lo, hi ) );
            _q.bounds.setUpper( keep, hi );
            substitute( drop, keep );
            _parent[drop] = keep;
            _removed[drop] = true;
            changed = true;
        }
        if ( changed )
            return dropTrivialRows() ? std::optional<bool>( true ) : std::nullopt;
        return false;
    }

    bool referencedByConstraint( VariableId v ) const
    {
        for ( const PLConstraint &c : _q.constraints )
            for ( VariableId u : c.allVariables() )
                if ( u == v )
                    return true;
        return false;
    }

    std::optional<bool> eliminate()
    {
        bool changed = false;
        for ( VariableId v = 0; v < _q.numVariables(); ++v )
        {
            if ( _removed[v] )
                continue;
            double lo = _q.bounds.lower( v ), hi = _q.bounds.upper( v );
            if ( !std::isfinite( lo ) || hi - lo > tolerance::kTighten || referencedByConstraint( v ) )
                continue;
            for ( Equation &e : _q.equations )
            {
                double a = e.lhs.coefficient( v );
                if ( a == 0 )
                    continue;
                e.lhs.setCoefficient( v, 0 );
                e.rhs -= a * lo;
            }
            _report.eliminatedVariables[v] = lo;
            _removed[v] = true;
            changed = true;
        }
        if ( changed && !dropTrivialRows() )
            return std::nullopt;
        return changed;
    }

    // Removes rows without terms; false if one of them is violated.
    bool dropTrivialRows()
    {
        std::vector<Equation> kept;
        for ( Equation &e : _q.equations )
        {
            if ( !e.lhs.terms().empty() )
            {
                kept.push_back( std::move( e ) );
                continue;
            }
            bool ok = e.relation == Relation::Eq   ? std::fabs( e.rhs ) <= tolerance::kFeasibility
                    : e.relation == Relation::Le ? 0 <= e.rhs + tolerance::kFeasibility
                                                  : 0 >= e.rhs - tolerance::kFeasibility;
            if ( !ok )
                return false;
        }
        _q.equations = std::move( kept );
        return true;
    }

    Query reindex()
    {
        unsigned n = _q.numVariables();
        std::vector<VariableId> newIndex( n, 0 );
        _report.indexMapping.assign( n, std::nullopt );
        Query result;
        for ( VariableId v = 0; v < n; ++v )
        {
            if ( _removed[v] )
                continue;
            newIndex[v] = result.addVariable( _q.bounds.lower( v ), _q.bounds.upper( v ) );
            _report.indexMapping[v] = newIndex[v];
        }
        for ( const Equation &e : _q.equations )
        {
            Equation renamed;
            renamed.relation = e.relation;
            renamed.rhs = e.rhs;
            for ( const auto &[v, a] : e.lhs.terms() )
                renamed.addTerm( newIndex[v], a );
            result.addEquation( std::move( renamed ) );
        }
        for ( PLConstraint c : _q.constraints )
        {
            c.renameVariables( newIndex );
            result.addConstraint( std::move( c ) );
        }
        for ( VariableId v : _q.inputVariables )
            if ( !_removed[v] )
                result.inputVariables.push_back( newIndex[v] );
        for ( VariableId v : _q.outputVariables )
            if ( !_removed[v] )
                result.outputVariables.push_back( newIndex[v] );

        for ( VariableId v = 0; v < n; ++v )
            if ( _parent[v] != v )
                _report.mergedVariables[v] = find( v );
        return result;
    }

    Query _q;
    PreprocessReport &_report;
    std::vector<VariableId> _parent;
    std::vector<bool> _removed;
};

} // namespace

PreprocessResult preprocess( const Query &query, const PreprocessOptions &options )
{
    PreprocessResult result;
    result.report.originalVariables = query.numVariables();
    Query normalized = normalize( query );
    if ( !options.simplify )
    {
        for ( VariableId v = 0; v < normalized.numVariables(); ++v )
            result.report.indexMapping.push_back( v );
        result.query = std::move( normalized );
        return result;
    }
    result.query = Simplifier( std::move( normalized ), result.report ).run( options.maxPasses );
    return result;
}

Assignment lift( const PreprocessReport &report, const Assignment &preprocessed )
{
    Assignment original( report.originalVariables, 0.0 );
    for ( VariableId v = 0; v < report.originalVariables; ++v )
    {
        VariableId root = v;
        if ( auto it = report.mergedVariables.find( v ); it != report.mergedVariables.end() )
            root = it->second;
        if ( auto it = report.eliminatedVariables.find( root ); it != report.eliminatedVariables.end() )
            original[v] = it->second;
        else if ( root < report.indexMapping.size() && report.indexMapping[root] )
            original[v] = preprocessed[*report.indexMapping[root]];
    }
    return original;
}

} // namespace nnv
