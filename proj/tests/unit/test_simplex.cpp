#include "ReferenceLp.h"
#include "nnv/Error.h"
#include "nnv/Proof.h"
#include "nnv/Simplex.h"

#include "doctest.h"

#include <random>

using namespace nnv;
using namespace nnv::testing;

namespace {

Equation row( std::vector<std::pair<VariableId, double>> terms, double rhs )
{
    Equation e;
    for ( auto [v, c] : terms )
        e.addTerm( v, c );
    e.relation = Relation::Eq;
    e.rhs = rhs;
    return e;
}

} // namespace

TEST_CASE( "minimising x on x + y = 1 puts x at its lower bound" )
{
    BoundStore bounds;
    bounds.addVariable( 0, 1 );
    bounds.addVariable( 0, 1 );
    Tableau t( { row( { { 0, 1 }, { 1, 1 } }, 1 ) }, bounds );
    LinearExpression objective;
    objective.addTerm( 0, 1 );
    LpOutcome out = t.solve( objective );
    REQUIRE( out.status == LpStatus::Optimal );
    CHECK( out.value == doctest::Approx( 0 ) );
    CHECK( out.assignment[0] == doctest::Approx( 0 ) );
    CHECK( out.assignment[1] == doctest::Approx( 1 ) );

    LpOutcome max = t.maximize( objective );
    REQUIRE( max.status == LpStatus::Optimal );
    CHECK( max.value == doctest::Approx( 1 ) );
}

TEST_CASE( "an unreachable row yields a certifying Farkas ray" )
{
    BoundStore bounds;
    bounds.addVariable( 0, 1 );
    bounds.addVariable( 0, 1 );
    std::vector<Equation> eqs{ row( { { 0, 1 }, { 1, 1 } }, 3 ) };
    Tableau t( eqs, bounds );
    LpOutcome out = t.solve();
    REQUIRE( out.status == LpStatus::Infeasible );
    REQUIRE( out.rowMultipliers.size() == 1 );
    CHECK( out.rowMultipliers[0] != 0 );
    CHECK( checkContradiction( eqs, bounds, sparsify( out.rowMultipliers ) ) );
    CHECK( t.farkasRay() == out.rowMultipliers );
}

TEST_CASE( "bound updates re-solve from the current basis" )
{
    BoundStore bounds;
    bounds.addVariable( -5, 5 );
    bounds.addVariable( -5, 5 );
    bounds.addVariable( -kInfinity, kInfinity );
    std::vector<Equation> eqs{ row( { { 0, 1 }, { 1, -1 }, { 2, -1 } }, 0 ) };
    Tableau t( eqs, bounds );
    CHECK( t.solve().status == LpStatus::Optimal );
    t.setLowerBound( 2, 11 );
    LpOutcome out = t.solve();
    REQUIRE( out.status == LpStatus::Infeasible );
    bounds.setLower( 2, 11 );
    CHECK( checkContradiction( eqs, bounds, sparsify( out.rowMultipliers ) ) );
    t.setLowerBound( 2, 9 );
    bounds.setLower( 2, 9 );
    out = t.solve();
    REQUIRE( out.status == LpStatus::Optimal );
    CHECK( out.assignment[0] - out.assignment[1] == doctest::Approx( out.assignment[2] ) );
    CHECK( out.assignment[2] >= 9 - 1e-7 );
}

TEST_CASE( "unbounded objectives are reported" )
{
    BoundStore bounds;
    bounds.addVariable( 0, kInfinity );
    bounds.addVariable( 0, kInfinity );
    Tableau t( { row( { { 0, 1 }, { 1, -1 } }, 0 ) }, bounds );
    LinearExpression objective;
    objective.addTerm( 0, -1 );
    CHECK( t.solve( objective ).status == LpStatus::Unbounded );
}

TEST_CASE( "inequality rows are rejected" )
{
    BoundStore bounds( 1 );
    Equation e = row( { { 0, 1 } }, 0 );
    e.relation = Relation::Le;
    CHECK_THROWS_AS( Tableau( { e }, bounds ), UsageError );
}

TEST_CASE( "random LPs agree with the reference solver" )
{
    std::mt19937 rng( 1234 );
    std::uniform_real_distribution<double> coef( -3, 3 );
    std::uniform_real_distribution<double> unit( 0, 1 );
    int infeasible = 0, optimal = 0;
    for ( int instance = 0; instance < 300; ++instance )
    {
        unsigned n = 2 + rng() % 7;
        unsigned m = 1 + rng() % std::min( n, 4u );
        BoundStore bounds;
        ReferenceProblem ref;
        for ( unsigned j = 0; j < n; ++j )
        {
            double lo = -4 * unit( rng );
            double hi = lo + 5 * unit( rng );
            if ( rng() % 8 == 0 )
                hi = kInfinity;
            bounds.addVariable( lo, hi );
            ref.addVariable( lo, hi );
        }
        std::vector<Equation> eqs;
        for ( unsigned i = 0; i < m; ++i )
        {
            Equation e;
            ReferenceRow r;
            for ( unsigned j = 0; j < n; ++j )
                if ( rng() % 3 != 0 )
                {
                    double c = std::round( coef( rng ) * 4 ) / 4;
                    if ( c == 0 )
                        continue;
                    e.addTerm( j, c );
                    r.terms.push_back( { j, c } );
                }
            e.rhs = coef( rng );
            r.rhs = e.rhs;
            eqs.push_back( e );
            ref.rows.push_back( r );
        }
        LinearExpression objective;
        ref.cost.assign( n, 0 );
        for ( unsigned j = 0; j < n; ++j )
        {
            ref.cost[j] = std::round( coef( rng ) * 2 ) / 2;
            objective.addTerm( j, ref.cost[j] );
        }

        ReferenceResult expected = referenceSolve( ref );
        Tableau t( eqs, bounds );
        LpOutcome got = t.solve( objective );
        if ( expected.status == ReferenceStatus::Infeasible )
        {
            ++infeasible;
            REQUIRE( got.status == LpStatus::Infeasible );
            bool ok = checkContradiction( eqs, bounds, sparsify( got.rowMultipliers ) );
            if ( !ok )
            {
                auto [lhs, rhs] = combineRows( eqs, sparsify( got.rowMultipliers ) );
                std::string d = "rhs " + std::to_string( rhs );
                for ( auto [v, c] : lhs.terms() )
                    d += " | " + std::to_string( c ) + "*x" + std::to_string( v ) + " [" +
                         std::to_string( bounds.lower( v ) ) + "," + std::to_string( bounds.upper( v ) ) + "] at " + std::to_string( got.assignment[v] );
                MESSAGE( d );
            }
            CHECK( ok );
        }
        else if ( expected.status == ReferenceStatus::Unbounded )
        {
            CHECK( got.status == LpStatus::Unbounded );
        }
        else
        {
            ++optimal;
            REQUIRE( got.status == LpStatus::Optimal );
            CHECK( got.value == doctest::Approx( expected.value ).epsilon( 1e-6 ) );
            for ( const Equation &e : eqs )
                CHECK( e.satisfiedBy( got.assignment, 1e-6 ) );
        }
    }
    CHECK( infeasible > 10 );
    CHECK( optimal > 10 );
}

TEST_CASE( "a tableau driven through random updates and pops matches a fresh one" )
{
    std::mt19937_64 rng( 4242 );
    std::uniform_real_distribution<double> coefficient( -2, 2 ), point( -3, 3 );
    for ( int instance = 0; instance < 20; ++instance )
    {
        const unsigned n = 6, m = 3;
        BoundStore bounds;
        for ( unsigned v = 0; v < n; ++v )
            bounds.addVariable( -4, 4 );
        std::vector<Equation> eqs;
        for ( unsigned i = 0; i < m; ++i )
        {
            Equation e;
            for ( unsigned v = 0; v < n; ++v )
                if ( rng() % 2 || v == i )
                    e.addTerm( v, coefficient( rng ) );
            e.rhs = coefficient( rng );
            eqs.push_back( e );
        }
        LinearExpression objective;
        for ( unsigned v = 0; v < n; ++v )
            objective.addTerm( v, coefficient( rng ) );

        Tableau incremental( eqs, bounds );
        for ( int step = 0; step < 100; ++step )
        {
            unsigned action = rng() % 4;
            if ( action == 0 && bounds.level() > 0 )
                bounds.pop( bounds.level() - 1 );
            else if ( action == 1 )
                bounds.push();
            else
            {
                VariableId v = rng() % n;
                bounds.tighten( v, rng() % 2 ? Side::Lower : Side::Upper, point( rng ) );
            }
            if ( bounds.infeasible() )
            {
                if ( bounds.level() == 0 )
                    break;
                bounds.pop( bounds.level() - 1 );
            }
            incremental.syncBounds( bounds );
            if ( step % 10 != 9 )
                continue;
            LpOutcome a = incremental.solve( objective );
            Tableau fresh( eqs, bounds );
            LpOutcome b = fresh.solve( objective );
            REQUIRE( a.status == b.status );
            if ( a.status == LpStatus::Optimal )
                CHECK( a.value == doctest::Approx( b.value ).epsilon( 1e-6 ) );
            else if ( a.status == LpStatus::Infeasible )
                CHECK( checkContradiction( eqs, bounds, sparsify( a.rowMultipliers ) ) );
        }
    }
}
