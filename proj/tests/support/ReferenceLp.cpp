#include "ReferenceLp.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nnv::testing {

namespace {

using Real = long double;
constexpr Real kEps = 1e-10L;

struct StandardForm
{
    // min c'z, A z = b, z >= 0
    std::vector<std::vector<Real>> a;
    std::vector<Real> b;
    std::vector<Real> c;
    Real costOffset = 0;
    // x_i = offset_i + sum sign * z
    std::vector<Real> offset;
    std::vector<std::vector<std::pair<unsigned, Real>>> recover;
};

StandardForm toStandardForm( const ReferenceProblem &p )
{
    StandardForm s;
    unsigned n = static_cast<unsigned>( p.lower.size() );
    s.offset.assign( n, 0 );
    s.recover.resize( n );
    unsigned z = 0;
    std::vector<std::pair<std::vector<std::pair<unsigned, Real>>, Real>> boxRows;

    for ( unsigned i = 0; i < n; ++i )
    {
        bool lf = std::isfinite( p.lower[i] );
        bool uf = std::isfinite( p.upper[i] );
        if ( lf )
        {
            s.offset[i] = p.lower[i];
            s.recover[i].push_back( { z, 1 } );
            if ( uf )
                boxRows.push_back( { { { z, 1 } }, (Real)p.upper[i] - (Real)p.lower[i] } );
            ++z;
        }
        else if ( uf )
        {
            s.offset[i] = p.upper[i];
            s.recover[i].push_back( { z++, -1 } );
        }
        else
        {
            s.recover[i].push_back( { z++, 1 } );
            s.recover[i].push_back( { z++, -1 } );
        }
    }

    struct RawRow
    {
        std::vector<std::pair<unsigned, Real>> terms;
        RowRelation relation;
        Real rhs;
    };
    std::vector<RawRow> raw;
    for ( const ReferenceRow &row : p.rows )
    {
        RawRow r{ {}, row.relation, (Real)row.rhs };
        for ( auto [var, coefficient] : row.terms )
        {
            r.rhs -= (Real)coefficient * s.offset[var];
            for ( auto [col, sign] : s.recover[var] )
                r.terms.push_back( { col, sign * (Real)coefficient } );
        }
        raw.push_back( std::move( r ) );
    }
    for ( auto &[terms, rhs] : boxRows )
        raw.push_back( { terms, RowRelation::Le, rhs } );

    unsigned slacks = 0;
    for ( const RawRow &r : raw )
        if ( r.relation != RowRelation::Eq )
            ++slacks;
    unsigned total = z + slacks;
    unsigned slack = z;
    for ( const RawRow &r : raw )
    {
        std::vector<Real> row( total, 0 );
        for ( auto [col, value] : r.terms )
            row[col] += value;
        if ( r.relation == RowRelation::Le )
            row[slack++] = 1;
        else if ( r.relation == RowRelation::Ge )
            row[slack++] = -1;
        s.a.push_back( std::move( row ) );
        s.b.push_back( r.rhs );
    }

    s.c.assign( total, 0 );
    if ( !p.cost.empty() )
        for ( unsigned i = 0; i < n; ++i )
        {
            s.costOffset += (Real)p.cost[i] * s.offset[i];
            for ( auto [col, sign] : s.recover[i] )
                s.c[col] += sign * (Real)p.cost[i];
        }
    return s;
}

// Full tableau simplex with Bland's rule on rows [A | b], objective row d.
// Returns false if unbounded.
bool runBland( std::vector<std::vector<Real>> &t,
               std::vector<Real> &obj,
               std::vector<unsigned> &basis,
               unsigned columns,
               const std::vector<bool> &allowed )
{
    unsigned m = static_cast<unsigned>( t.size() );
    for ( unsigned iteration = 0; iteration < 100000; ++iteration )
    {
        int entering = -1;
        for ( unsigned j = 0; j < columns; ++j )
            if ( allowed[j] && obj[j] < -kEps )
            {
                entering = static_cast<int>( j );
                break;
            }
        if ( entering < 0 )
            return true;
        int leaving = -1;
        Real bestRatio = 0;
        for ( unsigned i = 0; i < m; ++i )
        {
            Real a = t[i][entering];
            if ( a > kEps )
            {
                Real ratio = t[i][columns] / a;
                if ( leaving < 0 || ratio < bestRatio - kEps ||
                     ( std::fabs( ratio - bestRatio ) <= kEps && basis[i] < basis[leaving] ) )
                {
                    leaving = static_cast<int>( i );
                    bestRatio = ratio;
                }
            }
        }
        if ( leaving < 0 )
            return false;
        Real pivot = t[leaving][entering];
        for ( Real &v : t[leaving] )
            v /= pivot;
        for ( unsigned i = 0; i < m; ++i )
        {
            if ( i == (unsigned)leaving )
                continue;
            Real factor = t[i][entering];
            if ( factor != 0 )
                for ( unsigned k = 0; k <= columns; ++k )
                    t[i][k] -= factor * t[leaving][k];
        }
        Real factor = obj[entering];
        for ( unsigned k = 0; k <= columns; ++k )
            obj[k] -= factor * t[leaving][k];
        basis[leaving] = entering;
    }
    return true;
}

} // namespace

ReferenceResult referenceSolve( const ReferenceProblem &problem )
{
    StandardForm s = toStandardForm( problem );
    unsigned m = static_cast<unsigned>( s.a.size() );
    unsigned n = static_cast<unsigned>( s.c.size() );
    unsigned columns = n + m;

    std::vector<std::vector<Real>> t( m, std::vector<Real>( columns + 1, 0 ) );
    std::vector<unsigned> basis( m );
    for ( unsigned i = 0; i < m; ++i )
    {
        Real sign = s.b[i] < 0 ? -1 : 1;
        for ( unsigned j = 0; j < n; ++j )
            t[i][j] = sign * s.a[i][j];
        t[i][n + i] = 1;
        t[i][columns] = sign * s.b[i];
        basis[i] = n + i;
    }

    // Phase one: minimise the sum of artificials.
    std::vector<Real> obj( columns + 1, 0 );
    for ( unsigned i = 0; i < m; ++i )
        for ( unsigned k = 0; k <= columns; ++k )
            if ( k < n || k == columns )
                obj[k] -= t[i][k];
    std::vector<bool> allowed( columns, true );
    runBland( t, obj, basis, columns, allowed );

    ReferenceResult result;
    Real infeasibility = -obj[columns];
    if ( infeasibility > 1e-7L )
    {
        result.status = ReferenceStatus::Infeasible;
        return result;
    }

    // Drive remaining artificials out of the basis where possible.
    for ( unsigned i = 0; i < m; ++i )
    {
        if ( basis[i] < n )
            continue;
        for ( unsigned j = 0; j < n; ++j )
        {
            if ( std::fabs( t[i][j] ) > 1e-9L )
            {
                Real pivot = t[i][j];
                for ( Real &v : t[i] )
                    v /= pivot;
                for ( unsigned r = 0; r < m; ++r )
                {
                    if ( r == i )
                        continue;
                    Real factor = t[r][j];
                    if ( factor != 0 )
                        for ( unsigned k = 0; k <= columns; ++k )
                            t[r][k] -= factor * t[i][k];
                }
                basis[i] = j;
                break;
            }
        }
    }

    for ( unsigned j = n; j < columns; ++j )
        allowed[j] = false;
    std::fill( obj.begin(), obj.end(), 0 );
    for ( unsigned j = 0; j < n; ++j )
        obj[j] = s.c[j];
    for ( unsigned i = 0; i < m; ++i )
    {
        Real factor = obj[basis[i]];
        if ( factor != 0 )
            for ( unsigned k = 0; k <= columns; ++k )
                obj[k] -= factor * t[i][k];
    }
    if ( !runBland( t, obj, basis, columns, allowed ) )
    {
        result.status = ReferenceStatus::Unbounded;
        return result;
    }

    std::vector<Real> zValues( columns, 0 );
    for ( unsigned i = 0; i < m; ++i )
        zValues[basis[i]] = t[i][columns];
    result.status = ReferenceStatus::Optimal;
    result.value = static_cast<double>( -obj[columns] + s.costOffset );
    unsigned numVars = static_cast<unsigned>( problem.lower.size() );
    result.x.resize( numVars );
    for ( unsigned v = 0; v < numVars; ++v )
    {
        Real value = s.offset[v];
        for ( auto [col, sign] : s.recover[v] )
            value += sign * zValues[col];
        result.x[v] = static_cast<double>( value );
    }
    return result;
}

namespace {

// Solves the square system M y = r by Gaussian elimination; false if singular.
bool solveSquare( std::vector<std::vector<Real>> m, std::vector<Real> r, std::vector<Real> &y )
{
    size_t k = r.size();
    for ( size_t c = 0; c < k; ++c )
    {
        size_t p = c;
        for ( size_t i = c + 1; i < k; ++i )
            if ( std::fabs( m[i][c] ) > std::fabs( m[p][c] ) )
                p = i;
        if ( std::fabs( m[p][c] ) < 1e-9L )
            return false;
        std::swap( m[p], m[c] );
        std::swap( r[p], r[c] );
        for ( size_t i = 0; i < k; ++i )
        {
            if ( i == c )
                continue;
            Real f = m[i][c] / m[c][c];
            for ( size_t j = c; j < k; ++j )
                m[i][j] -= f * m[c][j];
            r[i] -= f * r[c];
        }
    }
    y.resize( k );
    for ( size_t i = 0; i < k; ++i )
        y[i] = r[i] / m[i][i];
    return true;
}

} // namespace

std::optional<double> vertexEnumerationMinimum( const std::vector<std::vector<double>> &aIn,
                                                const std::vector<double> &bIn,
                                                const std::vector<double> &lower,
                                                const std::vector<double> &upper,
                                                const std::vector<double> &cost )
{
    size_t n = lower.size();
    // Row-reduce to independent rows; inconsistent dependent rows mean infeasible.
    std::vector<std::vector<Real>> a;
    std::vector<Real> b;
    for ( size_t i = 0; i < aIn.size(); ++i )
    {
        std::vector<Real> row( aIn[i].begin(), aIn[i].end() );
        Real rhs = bIn[i];
        for ( size_t k = 0; k < a.size(); ++k )
        {
            size_t lead = 0;
            while ( std::fabs( a[k][lead] ) < 1e-12L )
                ++lead;
            Real f = row[lead] / a[k][lead];
            for ( size_t j = 0; j < n; ++j )
                row[j] -= f * a[k][j];
            rhs -= f * b[k];
        }
        Real norm = 0;
        for ( Real v : row )
            norm = std::max( norm, std::fabs( v ) );
        if ( norm < 1e-9L )
        {
            if ( std::fabs( rhs ) > 1e-9L )
                return std::nullopt;
            continue;
        }
        a.push_back( row );
        b.push_back( rhs );
    }

    size_t m = a.size();
    std::optional<double> best;
    std::vector<size_t> subset( m );
    // Enumerate column subsets of size m, then every lower/upper placement of the rest.
    std::vector<bool> pick( n, false );
    std::fill( pick.begin(), pick.begin() + m, true );
    std::vector<bool> order( pick );
    std::sort( order.begin(), order.end() );
    do
    {
        std::vector<size_t> basic;
        std::vector<size_t> nonbasic;
        for ( size_t j = 0; j < n; ++j )
            ( order[j] ? basic : nonbasic ).push_back( j );
        std::vector<std::vector<Real>> bm( m, std::vector<Real>( m ) );
        for ( size_t i = 0; i < m; ++i )
            for ( size_t c = 0; c < m; ++c )
                bm[i][c] = a[i][basic[c]];
        for ( size_t mask = 0; mask < ( size_t( 1 ) << nonbasic.size() ); ++mask )
        {
            std::vector<Real> x( n, 0 );
            for ( size_t k = 0; k < nonbasic.size(); ++k )
                x[nonbasic[k]] = ( mask >> k ) & 1 ? upper[nonbasic[k]] : lower[nonbasic[k]];
            std::vector<Real> r( m );
            for ( size_t i = 0; i < m; ++i )
            {
                r[i] = b[i];
                for ( size_t k : nonbasic )
                    r[i] -= a[i][k] * x[k];
            }
            std::vector<Real> y;
            if ( m > 0 && !solveSquare( bm, r, y ) )
                break;
            bool feasible = true;
            for ( size_t c = 0; c < m && feasible; ++c )
            {
                x[basic[c]] = y[c];
                feasible = y[c] >= lower[basic[c]] - 1e-9L && y[c] <= upper[basic[c]] + 1e-9L;
            }
            if ( !feasible )
                continue;
            Real value = 0;
            for ( size_t j = 0; j < n; ++j )
                value += cost[j] * x[j];
            if ( !best || value < *best )
                best = static_cast<double>( value );
        }
    } while ( std::next_permutation( order.begin(), order.end() ) );
    return best;
}

} // namespace nnv::testing
