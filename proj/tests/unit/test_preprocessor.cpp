#include "EnumerationOracle.h"
#include "Generators.h"
#include "nnv/BoundPropagator.h"
#include "nnv/Preprocessor.h"

#include "doctest.h"

#include <algorithm>
#include <cmath>

using namespace nnv;
using namespace nnv::testing;

namespace {

Equation row( std::vector<std::pair<VariableId, double>> terms, double rhs, Relation relation = Relation::Eq )
{
    Equation e;
    for ( auto [v, a] : terms )
        e.addTerm( v, a );
    e.rhs = rhs;
    e.relation = relation;
    return e;
}

} // namespace

TEST_CASE( "max normalization adds one aux per input" )
{
    Query q;
    VariableId x1 = q.addVariable( -1, 1 ), x2 = q.addVariable( -1, 1 ), y = q.addVariable();
    q.addConstraint( PLConstraint::max( y, { x1, x2 } ) );
    Query n = normalize( q );
    REQUIRE( n.numVariables() == 5 );
    const PLConstraint &c = n.constraints[0];
    CHECK( c.normalized );
    REQUIRE( c.aux.size() == 2 );
    for ( unsigned i = 0; i < 2; ++i )
    {
        const Equation &e = n.equations[i];
        CHECK( e.lhs.coefficient( y ) == 1 );
        CHECK( e.lhs.coefficient( c.inputs[i] ) == -1 );
        CHECK( e.lhs.coefficient( c.aux[i] ) == -1 );
        CHECK( n.bounds.lower( c.aux[i] ) == 0 );
    }
    CHECK( c.caseSplit( 1 ) == CaseSplit{ { c.aux[1], Side::Upper, 0 } } );
}

TEST_CASE( "relu, sign and inequality normalization" )
{
    Query q;
    VariableId b = q.addVariable( -2, 2 ), f = q.addVariable(), s = q.addVariable(), t = q.addVariable( -5, 5 );
    q.addConstraint( PLConstraint::relu( f, b ) );
    q.addConstraint( PLConstraint::sign( s, t ) );
    q.addEquation( row( { { b, 1 }, { t, 1 } }, 1, Relation::Le ) );
    Query n = normalize( q );
    CHECK( n.bounds.lower( f ) == 0 );
    CHECK( n.bounds.lower( s ) == -1 );
    CHECK( n.bounds.upper( s ) == 1 );
    for ( const Equation &e : n.equations )
        CHECK( e.relation == Relation::Eq );
    // One slack plus one ReLU aux; Sign adds no equation.
    CHECK( n.numVariables() == 6 );
    CHECK( n.equations.size() == 2 );
    CHECK( n.constraints[1].aux.empty() );
}

TEST_CASE( "cases cover the semantics on grids" )
{
    const std::vector<double> grid{ -2, -1, -1e-7, 0, 0.5, 1, 2 };
    std::vector<PLConstraint> kinds{ PLConstraint::relu( 1, 0 ), PLConstraint::leakyRelu( 1, 0, 0.25 ),
                                     PLConstraint::abs( 1, 0 ), PLConstraint::sign( 1, 0 ),
                                     PLConstraint::max( 1, { 0, 2 } ) };
    for ( const PLConstraint &raw : kinds )
    {
        Query q;
        q.addVariable();
        q.addVariable();
        q.addVariable();
        q.addConstraint( raw );
        Query n = normalize( q );
        const PLConstraint &c = n.constraints[0];
        for ( double x0 : grid )
            for ( double x1 : grid )
                for ( double x2 : grid )
                {
                    std::vector<double> values = extendAssignment( n, { x0, x1, x2 }, 3 );
                    bool withinBounds = true;
                    for ( VariableId v = 0; v < n.numVariables(); ++v )
                        withinBounds = withinBounds && values[v] >= n.bounds.lower( v ) - 1e-12 &&
                                       values[v] <= n.bounds.upper( v ) + 1e-12;
                    bool anyCase = false;
                    for ( const CaseSplit &split : c.cases() )
                    {
                        bool inCase = true;
                        for ( const BoundUpdate &u : split )
                            inCase = inCase && ( u.side == Side::Lower ? values[u.variable] >= u.value - 1e-12
                                                                       : values[u.variable] <= u.value + 1e-12 );
                        anyCase = anyCase || inCase;
                        // A case plus the aux rows and bounds implies the semantics.
                        if ( inCase && withinBounds )
                            CHECK_MESSAGE( c.satisfiedBy( values ), kindName( c.kind ), " ", x0, " ", x1 );
                    }
                    // The semantics imply some case; b in (-margin, 0) is the sign sliver.
                    bool sliver = c.kind == PLKind::Sign && x0 < 0 && x0 > -tolerance::kSignMargin;
                    if ( raw.satisfiedBy( values, 0 ) && !sliver )
                        CHECK_MESSAGE( anyCase, kindName( c.kind ), " ", x0, " ", x1, " ", x2 );
                }
    }
}

TEST_CASE( "row propagation examples" )
{
    Query q;
    VariableId x = q.addVariable( 0, 2 ), y = q.addVariable( 0, 2 );
    q.addEquation( row( { { x, 1 }, { y, 1 } }, 1 ) );
    BoundPropagator( q ).run( q.bounds );
    CHECK( q.bounds.upper( x ) == doctest::Approx( 1 ) );
    CHECK( q.bounds.upper( y ) == doctest::Approx( 1 ) );

    Query r;
    VariableId z = r.addVariable( 2, 3 );
    r.addEquation( row( { { z, 1 } }, 5 ) );
    CHECK( BoundPropagator( r ).run( r.bounds ) == TightenOutcome::Infeasible );
}

TEST_CASE( "relu propagation forces the inactive phase" )
{
    Query q;
    VariableId b = q.addVariable( -3, -1 ), f = q.addVariable();
    q.addConstraint( PLConstraint::relu( f, b ) );
    Query n = normalize( q );
    BoundPropagator( n ).run( n.bounds );
    CHECK( n.bounds.lower( f ) == 0 );
    CHECK( n.bounds.upper( f ) == 0 );
}

TEST_CASE( "proof-mode propagation emits checkable lemmas only" )
{
    Query q;
    VariableId x = q.addVariable( -1, 2 ), b = q.addVariable(), f = q.addVariable();
    q.addEquation( row( { { b, 1 }, { x, -2 } }, 0.5 ) );
    q.addConstraint( PLConstraint::relu( f, b ) );
    Query n = normalize( q );
    BoundStore bounds = n.bounds;
    std::vector<Lemma> lemmas;
    BoundPropagator( n ).run( bounds, &lemmas );
    REQUIRE_FALSE( lemmas.empty() );
    bool sawR4 = false;
    for ( const Lemma &l : lemmas )
        sawR4 = sawR4 || l.rule == LemmaRule::ReluR4;
    CHECK( sawR4 );
    CHECK( bounds.upper( f ) == doctest::Approx( 4.5 ) );

    // Replaying the lemmas on a fresh store reproduces the bounds.
    ProofNode root;
    root.lemmas = lemmas;
    root.contradiction = SparseRay{};
    BoundStore replay = n.bounds;
    for ( const Lemma &l : lemmas )
        replay.tighten( l.conclusion );
    CHECK( replay.sameBounds( bounds ) );
}

TEST_CASE( "collapse removes fixed constraints" )
{
    Query q;
    VariableId b = q.addVariable( 1, 2 ), f = q.addVariable();
    VariableId u = q.addVariable( -1, 1 ), g = q.addVariable();
    q.addConstraint( PLConstraint::relu( f, b ) );
    q.addConstraint( PLConstraint::relu( g, u ) );
    PreprocessResult r = preprocess( q );
    CHECK( r.report.collapsedConstraints == 1 );
    REQUIRE( r.query.constraints.size() == 1 );
    CHECK( r.query.constraints[0].kind == PLKind::Relu );

    Query m;
    VariableId x1 = m.addVariable( 3, 4 ), x2 = m.addVariable( 0, 1 ), x3 = m.addVariable( -1, 2 ), y = m.addVariable();
    m.addConstraint( PLConstraint::max( y, { x1, x2, x3 } ) );
    PreprocessResult mr = preprocess( m );
    CHECK( mr.query.constraints.empty() );
    Assignment lifted = lift( mr.report, std::vector<double>( mr.query.numVariables(), 0.0 ) );
    (void)lifted;
}

TEST_CASE( "merge intersects bounds and eliminate substitutes constants" )
{
    Query q;
    VariableId x0 = q.addVariable( 0, 5 ), x1 = q.addVariable( 3, 9 );
    VariableId x2 = q.addVariable( 4, 4 ), x3 = q.addVariable( -10, 10 );
    VariableId y = q.addVariable( -10, 10 );
    q.addEquation( row( { { x0, 1 }, { x1, -1 } }, 0 ) );
    q.addEquation( row( { { x2, 1 }, { x3, 1 } }, 6 ) );
    q.addConstraint( PLConstraint::relu( y, x0 ) );
    PreprocessResult r = preprocess( q );
    REQUIRE_FALSE( r.report.infeasible );
    CHECK( r.report.mergedVariables.at( x1 ) == x0 );
    REQUIRE( r.report.indexMapping[x0].has_value() );
    VariableId merged = *r.report.indexMapping[x0];
    CHECK( r.query.bounds.lower( merged ) == 3 );
    CHECK( r.query.bounds.upper( merged ) == 5 );
    CHECK( r.report.eliminatedVariables.at( x2 ) == 4 );
    CHECK( r.report.eliminatedVariables.at( x3 ) == doctest::Approx( 2 ) );

    std::vector<double> values( r.query.numVariables(), 0.0 );
    for ( VariableId v = 0; v < r.query.numVariables(); ++v )
        values[v] = std::clamp( 0.0, r.query.bounds.lower( v ), r.query.bounds.upper( v ) );
    values[merged] = 4;
    Assignment lifted = lift( r.report, values );
    CHECK( lifted[x1] == 4 );
    CHECK( lifted[y] == 4 );
    CHECK( lifted[x3] == doctest::Approx( 2 ) );
    CHECK_FALSE( findViolation( q, lifted, 1e-9 ) );
}

TEST_CASE( "merging disjoint intervals is infeasible" )
{
    Query q;
    VariableId x0 = q.addVariable( 0, 1 ), x1 = q.addVariable( 2, 3 );
    q.addEquation( row( { { x0, 1 }, { x1, -1 } }, 0 ) );
    CHECK( preprocess( q ).report.infeasible );
}

TEST_CASE( "propagation is sound for sampled network assignments" )
{
    Rng rng( 77 );
    NetworkOptions options;
    options.kinds = { PLKind::Relu, PLKind::LeakyRelu, PLKind::Abs, PLKind::Sign, PLKind::Max };
    for ( int instance = 0; instance < 50; ++instance )
    {
        GeneratedNetwork net = randomNetwork( rng, options );
        Query raw = net.toQuery();
        Query n = normalize( raw );
        BoundStore bounds = n.bounds;
        REQUIRE( BoundPropagator( n ).run( bounds ) != TightenOutcome::Infeasible );
        for ( int s = 0; s < 50; ++s )
        {
            std::vector<double> values = extendAssignment( n, net.assignment( sampleInput( rng, net ), raw.numVariables() ),
                                                 raw.numVariables() );
            for ( VariableId v = 0; v < n.numVariables(); ++v )
            {
                CHECK( values[v] >= bounds.lower( v ) - 1e-9 );
                CHECK( values[v] <= bounds.upper( v ) + 1e-9 );
            }
        }
    }
}

TEST_CASE( "preprocessing is equisatisfiable and lifted witnesses verify" )
{
    Rng rng( 99 );
    NetworkOptions options;
    options.kinds = { PLKind::Relu, PLKind::LeakyRelu, PLKind::Abs, PLKind::Sign, PLKind::Max };
    options.maxPL = 6;
    int sat = 0, unsat = 0;
    for ( int instance = 0; instance < 60; ++instance )
    {
        GeneratedNetwork net = randomNetwork( rng, options );
        Query raw = net.toQuery();
        addRandomProperty( rng, net, raw, true );
        OracleResult before = enumerationOracle( raw );
        PreprocessResult pre = preprocess( raw );
        if ( pre.report.infeasible )
        {
            CHECK_FALSE( before.satisfiable );
            ++unsat;
            continue;
        }
        OracleResult after = enumerationOracle( pre.query );
        REQUIRE( before.satisfiable == after.satisfiable );
        if ( after.satisfiable )
        {
            ++sat;
            Assignment lifted = lift( pre.report, after.witness );
            auto violation = findViolation( raw, lifted, 1e-6 );
            CHECK_MESSAGE( !violation, *violation );
        }
        else
            ++unsat;
    }
    CHECK( sat > 5 );
    CHECK( unsat > 5 );
}
