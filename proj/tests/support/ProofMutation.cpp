#include "ProofMutation.h"

#include "EnumerationOracle.h"
#include "ReferenceLp.h"

#include <cmath>

namespace nnv::testing {

const char *mutationName( MutationKind kind )
{
    switch ( kind )
    {
    case MutationKind::DropChild:
        return "drop-child";
    case MutationKind::SwapChildren:
        return "swap-children";
    case MutationKind::RelabelChildCase:
        return "relabel-child-case";
    case MutationKind::RetargetChild:
        return "retarget-child";
    case MutationKind::PruneSubtree:
        return "prune-subtree";
    case MutationKind::EmptyLeafRay:
        return "empty-leaf-ray";
    case MutationKind::NegateRayEntry:
        return "negate-ray-entry";
    case MutationKind::ScaleRayEntry:
        return "scale-ray-entry";
    case MutationKind::DropRayEntry:
        return "drop-ray-entry";
    case MutationKind::ShiftRayEntry:
        return "shift-ray-entry";
    case MutationKind::TightenLemma:
        return "tighten-lemma";
    case MutationKind::FlipLemmaSide:
        return "flip-lemma-side";
    case MutationKind::RetargetLemma:
        return "retarget-lemma";
    case MutationKind::DropLemma:
        return "drop-lemma";
    }
    return "?";
}

namespace {

constexpr double kMargin = 1e-4;

unsigned below( Rng &rng, size_t n )
{
    return static_cast<unsigned>( rng() % n );
}

void collectPaths( const ProofNode &node, std::vector<unsigned> &path, std::vector<std::vector<unsigned>> &out )
{
    out.push_back( path );
    for ( unsigned i = 0; i < node.children.size(); ++i )
    {
        path.push_back( i );
        collectPaths( node.children[i], path, out );
        path.pop_back();
    }
}

const ProofNode &firstLeaf( const ProofNode &node )
{
    return node.children.empty() ? node : firstLeaf( node.children.front() );
}

Side opposite( Side side )
{
    return side == Side::Lower ? Side::Upper : Side::Lower;
}

void apply( MutationKind kind, ProofNode &node, const Query &query, Rng &rng )
{
    std::uniform_real_distribution<double> unit( 0, 1 );
    switch ( kind )
    {
    case MutationKind::DropChild:
        node.children.erase( node.children.begin() + below( rng, node.children.size() ) );
        return;
    case MutationKind::SwapChildren:
    {
        unsigned i = below( rng, node.children.size() );
        unsigned j = ( i + 1 + below( rng, node.children.size() - 1 ) ) % node.children.size();
        std::swap( node.children[i], node.children[j] );
        return;
    }
    case MutationKind::RelabelChildCase:
    {
        SplitLabel &label = *node.children[below( rng, node.children.size() )].split;
        unsigned n = static_cast<unsigned>( node.children.size() );
        label.caseIndex = ( label.caseIndex + 1 + below( rng, n - 1 ) ) % n;
        return;
    }
    case MutationKind::RetargetChild:
    {
        SplitLabel &label = *node.children[below( rng, node.children.size() )].split;
        unsigned n = static_cast<unsigned>( query.constraints.size() );
        label.constraintId = ( label.constraintId + 1 + below( rng, n - 1 ) ) % n;
        return;
    }
    case MutationKind::PruneSubtree:
    {
        SparseRay ray = *firstLeaf( node ).contradiction;
        node.children.clear();
        node.contradiction = std::move( ray );
        return;
    }
    case MutationKind::EmptyLeafRay:
        node.contradiction->clear();
        return;
    case MutationKind::NegateRayEntry:
    {
        auto &entry = ( *node.contradiction )[below( rng, node.contradiction->size() )];
        entry.second = -entry.second;
        return;
    }
    case MutationKind::ScaleRayEntry:
    {
        auto &entry = ( *node.contradiction )[below( rng, node.contradiction->size() )];
        double factor = 1;
        while ( std::fabs( factor - 1 ) < 0.2 )
            factor = -3 + 6 * unit( rng );
        entry.second *= factor;
        return;
    }
    case MutationKind::DropRayEntry:
        node.contradiction->erase( node.contradiction->begin() + below( rng, node.contradiction->size() ) );
        return;
    case MutationKind::ShiftRayEntry:
    {
        auto &entry = ( *node.contradiction )[below( rng, node.contradiction->size() )];
        double shift = ( 0.5 + unit( rng ) ) * ( 1 + std::fabs( entry.second ) );
        entry.second += rng() % 2 ? shift : -shift;
        return;
    }
    case MutationKind::TightenLemma:
    {
        Lemma &lemma = node.lemmas[below( rng, node.lemmas.size() )];
        double delta = 0.5 * ( 1 + std::fabs( lemma.conclusion.value ) );
        lemma.conclusion.value += lemma.conclusion.side == Side::Upper ? -delta : delta;
        if ( lemma.rule == LemmaRule::Row )
            lemma.premise.value = lemma.conclusion.value;
        return;
    }
    case MutationKind::FlipLemmaSide:
    {
        Lemma &lemma = node.lemmas[below( rng, node.lemmas.size() )];
        lemma.conclusion.side = opposite( lemma.conclusion.side );
        if ( lemma.rule == LemmaRule::Row )
            lemma.premise.side = lemma.conclusion.side;
        return;
    }
    case MutationKind::RetargetLemma:
    {
        Lemma &lemma = node.lemmas[below( rng, node.lemmas.size() )];
        unsigned n = query.numVariables();
        lemma.conclusion.variable = ( lemma.conclusion.variable + 1 + below( rng, n - 1 ) ) % n;
        if ( lemma.rule == LemmaRule::Row )
            lemma.premise.variable = lemma.conclusion.variable;
        return;
    }
    case MutationKind::DropLemma:
        node.lemmas.erase( node.lemmas.begin() + below( rng, node.lemmas.size() ) );
        return;
    }
}

std::vector<MutationKind> applicable( const ProofNode &node, const Query &query )
{
    std::vector<MutationKind> kinds;
    if ( !node.children.empty() )
    {
        kinds.insert( kinds.end(), { MutationKind::DropChild, MutationKind::RelabelChildCase, MutationKind::PruneSubtree } );
        if ( node.children.size() >= 2 )
            kinds.push_back( MutationKind::SwapChildren );
        if ( query.constraints.size() >= 2 )
            kinds.push_back( MutationKind::RetargetChild );
    }
    else if ( node.contradiction && !node.contradiction->empty() )
    {
        kinds.insert( kinds.end(),
                      { MutationKind::EmptyLeafRay, MutationKind::ScaleRayEntry, MutationKind::ShiftRayEntry } );
        if ( node.contradiction->size() >= 2 )
            kinds.insert( kinds.end(), { MutationKind::NegateRayEntry, MutationKind::DropRayEntry } );
    }
    if ( !node.lemmas.empty() )
        kinds.insert( kinds.end(), { MutationKind::TightenLemma, MutationKind::FlipLemmaSide,
                                     MutationKind::RetargetLemma, MutationKind::DropLemma } );
    return kinds;
}

RowRelation relationOf( Relation r )
{
    return r == Relation::Eq ? RowRelation::Eq : r == Relation::Le ? RowRelation::Le : RowRelation::Ge;
}

class Judge
{
public:
    Judge( const Query &query, JudgeCache *cache )
        : _query( query )
        , _bounds( query.bounds )
        , _cache( cache )
    {
    }

    std::optional<std::string> run( const ProofNode &root )
    {
        if ( root.split )
            return "root carries a split label";
        return visit( root );
    }

private:
    std::optional<std::string> visit( const ProofNode &node )
    {
        _bounds.push();
        std::optional<std::string> finding = visitBody( node );
        _bounds.pop( _bounds.level() - 1 );
        return finding;
    }

    std::optional<std::string> visitBody( const ProofNode &node )
    {
        if ( node.split )
            for ( const BoundUpdate &u : _query.constraints[node.split->constraintId].caseSplit( node.split->caseIndex ) )
                _bounds.tighten( u );

        for ( const Lemma &lemma : node.lemmas )
        {
            if ( auto finding = cachedRefuteLemma( lemma ) )
                return finding;
            _bounds.tighten( lemma.conclusion );
        }

        if ( node.children.empty() )
        {
            if ( !node.contradiction )
                return "leaf without a ray";
            return refuteLeaf( *node.contradiction );
        }
        if ( node.contradiction )
            return "internal node with a ray";

        const auto &first = node.children.front().split;
        if ( !first || first->constraintId >= _query.constraints.size() )
            return "child without a valid label";
        const PLConstraint &c = _query.constraints[first->constraintId];
        if ( node.children.size() != c.numCases() )
            return "children do not cover every case";
        for ( unsigned i = 0; i < node.children.size(); ++i )
        {
            const auto &label = node.children[i].split;
            if ( !label || label->constraintId != c.id || label->caseIndex != i )
                return "children are not the cases in order";
        }
        for ( const ProofNode &child : node.children )
            if ( auto finding = visit( child ) )
                return finding;
        return std::nullopt;
    }

    ReferenceProblem region() const
    {
        ReferenceProblem p;
        for ( VariableId v = 0; v < _bounds.size(); ++v )
            p.addVariable( _bounds.lower( v ), std::max( _bounds.lower( v ), _bounds.upper( v ) ) );
        for ( const Equation &e : _query.equations )
        {
            ReferenceRow row;
            for ( const auto &[v, a] : e.lhs.terms() )
                row.terms.push_back( { v, a } );
            row.relation = relationOf( e.relation );
            row.rhs = e.rhs - e.lhs.constant();
            p.rows.push_back( std::move( row ) );
        }
        return p;
    }

    // An LP point of the region (plus extra rows) that violates the update by the margin.
    bool witnessAgainst( const BoundUpdate &claim, const std::vector<ReferenceRow> &extra ) const
    {
        ReferenceProblem p = region();
        p.rows.insert( p.rows.end(), extra.begin(), extra.end() );
        p.cost.assign( p.lower.size(), 0 );
        // Push the variable past the claimed bound.
        p.cost[claim.variable] = claim.side == Side::Upper ? -1 : 1;
        ReferenceResult r = referenceSolve( p );
        if ( r.status == ReferenceStatus::Infeasible )
            return false;
        if ( r.status == ReferenceStatus::Unbounded )
            return true;
        double reach = claim.side == Side::Upper ? -r.value : r.value;
        double margin = kMargin * ( 1 + std::fabs( claim.value ) );
        return claim.side == Side::Upper ? reach > claim.value + margin : reach < claim.value - margin;
    }

    std::optional<std::string> cachedRefuteLemma( const Lemma &lemma ) const
    {
        if ( !_cache )
            return refuteLemma( lemma );
        std::string key;
        auto append = [&key]( const auto &value ) {
            key.append( reinterpret_cast<const char *>( &value ), sizeof( value ) );
        };
        for ( VariableId v = 0; v < _bounds.size(); ++v )
        {
            append( _bounds.lower( v ) );
            append( _bounds.upper( v ) );
        }
        append( lemma.rule );
        append( lemma.constraintId );
        append( lemma.premise.variable );
        append( lemma.premise.side );
        append( lemma.premise.value );
        append( lemma.conclusion.variable );
        append( lemma.conclusion.side );
        append( lemma.conclusion.value );
        auto [it, inserted] = _cache->refuted.try_emplace( key, false );
        if ( !inserted )
            return it->second ? std::optional<std::string>( "lemma violated by an LP point" ) : std::nullopt;
        std::optional<std::string> finding = refuteLemma( lemma );
        it->second = finding.has_value();
        return finding;
    }

    std::optional<std::string> refuteLemma( const Lemma &lemma ) const
    {
        const BoundUpdate &claim = lemma.conclusion;
        if ( claim.variable >= _bounds.size() || lemma.premise.variable >= _bounds.size() )
            return "lemma on an unknown variable";
        if ( _bounds.infeasible() )
            return std::nullopt;
        if ( lemma.rule == LemmaRule::Row )
        {
            if ( witnessAgainst( claim, {} ) )
                return "row lemma violated by an LP point";
            return std::nullopt;
        }
        if ( lemma.constraintId < 0 || static_cast<size_t>( lemma.constraintId ) >= _query.constraints.size() )
            return "lemma on an unknown constraint";
        const PLConstraint &c = _query.constraints[lemma.constraintId];
        bool reluRule = lemma.rule != LemmaRule::MaxUpper && lemma.rule != LemmaRule::MaxLower;
        if ( reluRule != ( c.kind == PLKind::Relu ) || ( !reluRule && c.kind != PLKind::Max ) )
            return "rule applied to the wrong constraint kind";
        for ( const std::vector<ReferenceRow> &piece : semanticPieces( c ) )
            if ( witnessAgainst( claim, piece ) )
                return "constraint lemma violated by an LP point";
        return std::nullopt;
    }

    std::optional<std::string> refuteLeaf( const SparseRay &ray ) const
    {
        if ( ray.empty() )
        {
            if ( !_bounds.infeasible() )
                return "empty ray on a non-empty box";
            return std::nullopt;
        }
        std::vector<long double> coefficient( _bounds.size(), 0 );
        std::vector<long double> scale( _bounds.size(), 0 );
        long double rhs = 0;
        for ( const auto &[index, multiplier] : ray )
        {
            if ( index >= _query.equations.size() )
                return "ray on an unknown equation";
            const Equation &e = _query.equations[index];
            if ( e.relation != Relation::Eq )
                return "ray on an inequality";
            for ( const auto &[v, a] : e.lhs.terms() )
            {
                coefficient[v] += static_cast<long double>( multiplier ) * a;
                scale[v] = std::max<long double>( scale[v], std::fabs( multiplier * a ) );
            }
            rhs += static_cast<long double>( multiplier ) * ( e.rhs - e.lhs.constant() );
        }
        long double lo = 0, hi = 0;
        for ( VariableId v = 0; v < _bounds.size(); ++v )
        {
            long double a = coefficient[v];
            if ( std::fabs( a ) <= 1e-9 * std::max<long double>( 1, scale[v] ) )
                continue;
            long double l = _bounds.lower( v ), u = _bounds.upper( v );
            lo += a > 0 ? a * l : a * u;
            hi += a > 0 ? a * u : a * l;
        }
        long double margin = kMargin * ( 1 + std::fabs( rhs ) );
        if ( !_bounds.infeasible() && lo <= rhs - margin && hi >= rhs + margin )
            return "combined row is met inside the box";
        return std::nullopt;
    }

    const Query &_query;
    BoundStore _bounds;
    JudgeCache *_cache;
};

} // namespace

std::optional<Mutant> mutate( const ProofNode &root, const Query &normalized, Rng &rng )
{
    std::vector<std::vector<unsigned>> paths;
    std::vector<unsigned> path;
    collectPaths( root, path, paths );
    const std::vector<unsigned> &chosen = paths[below( rng, paths.size() )];

    Mutant mutant{ root, MutationKind::DropChild };
    ProofNode *node = &mutant.tree;
    for ( unsigned i : chosen )
        node = &node->children[i];
    std::vector<MutationKind> kinds = applicable( *node, normalized );
    if ( kinds.empty() )
        return std::nullopt;
    mutant.kind = kinds[below( rng, kinds.size() )];
    apply( mutant.kind, *node, normalized, rng );
    return mutant;
}

std::optional<std::string> demonstrablyBroken( const Query &normalized, const ProofNode &root, JudgeCache *cache )
{
    return Judge( normalized, cache ).run( root );
}

} // namespace nnv::testing
