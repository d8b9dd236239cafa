#include "nnv/Error.h"
#include "nnv/Proof.h"

#include <cmath>
#include <map>

namespace nnv {

namespace {

// Extreme value of sum_j c_j x_j over the box, skipping `skip`. Absent when an
// infinite bound is needed.
std::optional<double> extreme( const LinearExpression &row,
                               const BoundStore &bounds,
                               bool maximize,
                               std::optional<VariableId> skip = std::nullopt )
{
    double total = 0;
    for ( const auto &[variable, coefficient] : row.terms() )
    {
        if ( skip && variable == *skip )
            continue;
        bool useUpper = ( coefficient > 0 ) == maximize;
        double value = useUpper ? bounds.upper( variable ) : bounds.lower( variable );
        if ( !std::isfinite( value ) )
            return std::nullopt;
        total += coefficient * value;
    }
    return total;
}

bool nearlyEqual( double a, double b )
{
    return std::fabs( a - b ) <= 1e-9 * std::max( 1.0, std::fabs( a ) );
}

bool sameUpdate( const BoundUpdate &a, const BoundUpdate &b )
{
    return a.variable == b.variable && a.side == b.side && nearlyEqual( a.value, b.value );
}

} // namespace

SparseRay sparsify( const std::vector<double> &dense, double dropBelow )
{
    SparseRay ray;
    for ( unsigned i = 0; i < dense.size(); ++i )
        if ( dense[i] != 0 && std::fabs( dense[i] ) > dropBelow )
            ray.emplace_back( i, dense[i] );
    return ray;
}

std::pair<LinearExpression, double> combineRows( const std::vector<Equation> &equations,
                                                 const SparseRay &ray )
{
    // Coefficients that cancel to within roundoff of their largest contribution
    // are exact zeros in real arithmetic; keeping them would pair 1e-16 with an
    // infinite bound and reject a valid certificate.
    constexpr double kCancellation = 1e-12;
    std::map<VariableId, std::pair<double, double>> sums;
    double rhs = 0;
    for ( const auto &[index, multiplier] : ray )
    {
        if ( index >= equations.size() )
            throw UsageError( "ray references equation " + std::to_string( index ) );
        for ( const auto &[variable, coefficient] : equations[index].lhs.terms() )
        {
            auto &[sum, scale] = sums[variable];
            sum += multiplier * coefficient;
            scale = std::max( scale, std::fabs( multiplier * coefficient ) );
        }
        rhs += multiplier * ( equations[index].rhs - equations[index].lhs.constant() );
    }
    LinearExpression row;
    for ( const auto &[variable, entry] : sums )
        if ( std::fabs( entry.first ) > kCancellation * entry.second )
            row.addTerm( variable, entry.first );
    return { row, rhs };
}

std::optional<double> impliedBound( const std::vector<Equation> &equations,
                                    const BoundStore &bounds,
                                    const SparseRay &ray,
                                    VariableId variable,
                                    Side side )
{
    auto [row, rhs] = combineRows( equations, ray );
    double coefficient = row.coefficient( variable );
    if ( std::fabs( coefficient ) < 1e-12 )
        return std::nullopt;
    // coefficient * x = rhs - rest, so x is largest when rest is smallest if coefficient > 0.
    bool wantMaxOfX = side == Side::Upper;
    bool restMaximize = ( coefficient > 0 ) != wantMaxOfX;
    std::optional<double> rest = extreme( row, bounds, restMaximize, variable );
    if ( !rest )
        return std::nullopt;
    return ( rhs - *rest ) / coefficient;
}

bool checkBound( const std::vector<Equation> &equations,
                 const BoundStore &bounds,
                 const BoundExplanation &explanation )
{
    if ( explanation.variable >= bounds.size() )
        return false;
    double implied;
    if ( explanation.ray.empty() )
        implied = bounds.bound( explanation.variable, explanation.side );
    else
    {
        std::optional<double> bound =
            impliedBound( equations, bounds, explanation.ray, explanation.variable, explanation.side );
        if ( !bound )
            return false;
        implied = *bound;
    }
    if ( explanation.side == Side::Upper )
        return implied <= explanation.value + tolerance::kProof;
    return implied >= explanation.value - tolerance::kProof;
}

bool checkContradiction( const std::vector<Equation> &equations,
                         const BoundStore &bounds,
                         const SparseRay &ray )
{
    if ( ray.empty() )
    {
        for ( VariableId v = 0; v < bounds.size(); ++v )
            if ( bounds.lower( v ) > bounds.upper( v ) + tolerance::kProof )
                return true;
        return false;
    }
    for ( const auto &[index, multiplier] : ray )
        if ( index >= equations.size() || !std::isfinite( multiplier ) )
            return false;

    auto [row, rhs] = combineRows( equations, ray );
    std::optional<double> high = extreme( row, bounds, true );
    if ( high && *high < rhs - tolerance::kProof )
        return true;
    std::optional<double> low = extreme( row, bounds, false );
    return low && *low > rhs + tolerance::kProof;
}

namespace {

class Checker
{
public:
    explicit Checker( const Query &query )
        : _query( query )
        , _bounds( query.bounds )
    {
    }

    CheckOutcome run( const ProofNode &root )
    {
        if ( root.split )
            return reject( "root node carries a split label" );
        if ( _bounds.level() != 0 )
            return reject( "query bound store is not at level 0" );
        if ( checkNode( root ) )
            return { true, "", "" };
        return _outcome;
    }

private:
    bool checkNode( const ProofNode &node )
    {
        unsigned level = _bounds.push();
        (void)level;
        bool ok = checkNodeBody( node );
        _bounds.pop( _bounds.level() - 1 );
        return ok;
    }

    bool checkNodeBody( const ProofNode &node )
    {
        if ( node.split )
        {
            const SplitLabel &label = *node.split;
            if ( label.constraintId >= _query.constraints.size() )
                return fail( "split references unknown constraint" );
            const PLConstraint &constraint = _query.constraints[label.constraintId];
            if ( !constraint.normalized )
                return fail( "split on a constraint that is not normalized" );
            if ( label.caseIndex >= constraint.numCases() )
                return fail( "split case index out of range" );
            for ( const BoundUpdate &update : constraint.caseSplit( label.caseIndex ) )
                _bounds.tighten( update );
        }

        for ( size_t i = 0; i < node.lemmas.size(); ++i )
        {
            if ( !checkLemma( node.lemmas[i] ) )
                return false;
            _bounds.tighten( node.lemmas[i].conclusion );
        }

        if ( node.children.empty() )
        {
            if ( !node.contradiction )
                return fail( "leaf without a contradiction" );
            if ( !checkContradiction( _query.equations, _bounds, *node.contradiction ) )
                return fail( "leaf contradiction does not hold" );
            return true;
        }

        if ( node.contradiction )
            return fail( "internal node carries a contradiction" );
        const SplitLabel *first = node.children.front().split ? &*node.children.front().split : nullptr;
        if ( !first || first->constraintId >= _query.constraints.size() )
            return fail( "child without a valid split label" );
        const PLConstraint &constraint = _query.constraints[first->constraintId];
        if ( node.children.size() != constraint.numCases() )
            return fail( "child count does not match the case count of constraint " +
                         std::to_string( constraint.id ) );
        for ( unsigned i = 0; i < node.children.size(); ++i )
        {
            const auto &label = node.children[i].split;
            if ( !label || label->constraintId != constraint.id || label->caseIndex != i )
                return fail( "child " + std::to_string( i ) + " is not case " + std::to_string( i ) +
                             " of constraint " + std::to_string( constraint.id ) );
        }
        for ( unsigned i = 0; i < node.children.size(); ++i )
        {
            _path.push_back( i );
            if ( !checkNode( node.children[i] ) )
                return false;
            _path.pop_back();
        }
        return true;
    }

    bool checkLemma( const Lemma &lemma )
    {
        const BoundExplanation &premise = lemma.premise;
        const BoundUpdate &conclusion = lemma.conclusion;
        if ( conclusion.variable >= _bounds.size() || premise.variable >= _bounds.size() )
            return fail( "lemma references unknown variable" );

        if ( lemma.rule == LemmaRule::Row )
        {
            if ( premise.ray.empty() )
                return fail( "row lemma without a ray" );
            if ( !checkBound( _query.equations, _bounds, premise ) )
                return fail( "row lemma premise is not implied" );
            if ( !sameUpdate( conclusion, { premise.variable, premise.side, premise.value } ) )
                return fail( "row lemma conclusion differs from its premise" );
            return true;
        }

        if ( lemma.constraintId < 0 ||
             static_cast<size_t>( lemma.constraintId ) >= _query.constraints.size() )
            return fail( "lemma references unknown constraint" );
        const PLConstraint &c = _query.constraints[lemma.constraintId];

        switch ( lemma.rule )
        {
        case LemmaRule::ReluR1:
        case LemmaRule::ReluR2:
        case LemmaRule::ReluR3:
        case LemmaRule::ReluR4:
        {
            if ( c.kind != PLKind::Relu || c.aux.size() != 1 )
                return fail( "relu rule applied to a non-relu constraint" );
            if ( !checkBound( _query.equations, _bounds, premise ) )
                return fail( "lemma premise is not implied" );
            BoundUpdate expected;
            if ( lemma.rule == LemmaRule::ReluR1 )
            {
                if ( premise.variable != c.b || premise.side != Side::Upper || premise.value > 0 )
                    return fail( "R1 premise must be ub(b) <= 0" );
                expected = { c.f, Side::Upper, 0 };
            }
            else if ( lemma.rule == LemmaRule::ReluR2 )
            {
                if ( premise.variable != c.b || premise.side != Side::Lower || premise.value < 0 )
                    return fail( "R2 premise must be lb(b) >= 0" );
                expected = { c.aux[0], Side::Upper, 0 };
            }
            else if ( lemma.rule == LemmaRule::ReluR3 )
            {
                if ( premise.variable != c.f || premise.side != Side::Lower || !( premise.value > 0 ) )
                    return fail( "R3 premise must be lb(f) > 0" );
                expected = { c.aux[0], Side::Upper, 0 };
            }
            else
            {
                if ( premise.variable != c.b || premise.side != Side::Upper || premise.value < 0 )
                    return fail( "R4 premise must be ub(b) >= 0" );
                expected = { c.f, Side::Upper, premise.value };
            }
            if ( !sameUpdate( conclusion, expected ) )
                return fail( std::string( ruleName( lemma.rule ) ) + " conclusion does not follow" );
            return true;
        }
        case LemmaRule::MaxUpper:
        {
            if ( c.kind != PLKind::Max )
                return fail( "max rule applied to a non-max constraint" );
            double best = -kInfinity;
            for ( VariableId input : c.inputs )
                best = std::max( best, _bounds.upper( input ) );
            if ( !std::isfinite( best ) )
                return fail( "max upper rule needs finite input bounds" );
            if ( !sameUpdate( conclusion, { c.f, Side::Upper, best } ) )
                return fail( "max upper conclusion does not follow" );
            return true;
        }
        case LemmaRule::MaxLower:
        {
            if ( c.kind != PLKind::Max )
                return fail( "max rule applied to a non-max constraint" );
            bool isInput = false;
            for ( VariableId input : c.inputs )
                isInput = isInput || input == premise.variable;
            if ( !isInput || premise.side != Side::Lower )
                return fail( "max lower premise must bound an input from below" );
            if ( !checkBound( _query.equations, _bounds, premise ) )
                return fail( "lemma premise is not implied" );
            if ( !sameUpdate( conclusion, { c.f, Side::Lower, premise.value } ) )
                return fail( "max lower conclusion does not follow" );
            return true;
        }
        case LemmaRule::Row:
            break;
        }
        return fail( "unknown rule" );
    }

    bool fail( const std::string &reason )
    {
        _outcome.certified = false;
        _outcome.reason = reason;
        _outcome.path.clear();
        for ( size_t i = 0; i < _path.size(); ++i )
            _outcome.path += ( i ? "." : "" ) + std::to_string( _path[i] );
        if ( _outcome.path.empty() )
            _outcome.path = "root";
        return false;
    }

    CheckOutcome reject( const std::string &reason )
    {
        fail( reason );
        return _outcome;
    }

    const Query &_query;
    BoundStore _bounds;
    std::vector<unsigned> _path;
    CheckOutcome _outcome;
};

} // namespace

CheckOutcome checkProofTree( const Query &query, const ProofNode &root )
{
    return Checker( query ).run( root );
}

size_t ProofNode::countNodes() const
{
    size_t total = 1;
    for ( const ProofNode &child : children )
        total += child.countNodes();
    return total;
}

size_t ProofNode::countInternal() const
{
    if ( children.empty() )
        return 0;
    size_t total = 1;
    for ( const ProofNode &child : children )
        total += child.countInternal();
    return total;
}

size_t ProofNode::countLeaves() const
{
    if ( children.empty() )
        return 1;
    size_t total = 0;
    for ( const ProofNode &child : children )
        total += child.countLeaves();
    return total;
}

} // namespace nnv
