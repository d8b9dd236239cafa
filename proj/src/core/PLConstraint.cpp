#include "nnv/PLConstraint.h"
#include "nnv/Error.h"

#include <algorithm>
#include <cmath>

namespace nnv {

const char *kindName( PLKind kind )
{
    switch ( kind )
    {
    case PLKind::Relu:
        return "relu";
    case PLKind::LeakyRelu:
        return "leaky";
    case PLKind::Abs:
        return "abs";
    case PLKind::Sign:
        return "sign";
    case PLKind::Max:
        return "max";
    case PLKind::Disjunction:
        return "disj";
    }
    return "?";
}

PLConstraint PLConstraint::relu( VariableId f, VariableId b )
{
    PLConstraint c;
    c.kind = PLKind::Relu;
    c.f = f;
    c.b = b;
    return c;
}

PLConstraint PLConstraint::leakyRelu( VariableId f, VariableId b, double alpha )
{
    if ( !( alpha > 0 && alpha < 1 ) )
        throw UsageError( "leaky relu slope must lie in (0, 1), got " + std::to_string( alpha ) );
    PLConstraint c;
    c.kind = PLKind::LeakyRelu;
    c.f = f;
    c.b = b;
    c.alpha = alpha;
    return c;
}

PLConstraint PLConstraint::abs( VariableId f, VariableId b )
{
    PLConstraint c;
    c.kind = PLKind::Abs;
    c.f = f;
    c.b = b;
    return c;
}

PLConstraint PLConstraint::sign( VariableId f, VariableId b )
{
    PLConstraint c;
    c.kind = PLKind::Sign;
    c.f = f;
    c.b = b;
    return c;
}

PLConstraint PLConstraint::max( VariableId f, std::vector<VariableId> inputs )
{
    if ( inputs.empty() )
        throw UsageError( "max constraint needs at least one input" );
    PLConstraint c;
    c.kind = PLKind::Max;
    c.f = f;
    c.inputs = std::move( inputs );
    return c;
}

PLConstraint PLConstraint::disjunction( std::vector<Disjunct> disjuncts )
{
    if ( disjuncts.empty() )
        throw UsageError( "disjunction needs at least one disjunct" );
    PLConstraint c;
    c.kind = PLKind::Disjunction;
    c.disjuncts = std::move( disjuncts );
    // Disjuncts are bound conjunctions from the start.
    c.normalized = true;
    return c;
}

unsigned PLConstraint::numCases() const
{
    switch ( kind )
    {
    case PLKind::Max:
        return static_cast<unsigned>( inputs.size() );
    case PLKind::Disjunction:
        return static_cast<unsigned>( disjuncts.size() );
    default:
        return 2;
    }
}

CaseSplit PLConstraint::caseSplit( unsigned caseIndex ) const
{
    if ( !normalized )
        throw UsageError( std::string( kindName( kind ) ) + " constraint " + std::to_string( id ) +
                          " has not been normalized" );
    if ( caseIndex >= numCases() )
        throw UsageError( "case index out of range" );

    switch ( kind )
    {
    case PLKind::Relu:
        if ( caseIndex == 0 )
            return { { aux[0], Side::Upper, 0 } };
        return { { f, Side::Upper, 0 } };
    case PLKind::LeakyRelu:
        if ( caseIndex == 0 )
            return { { aux[0], Side::Upper, 0 }, { b, Side::Lower, 0 } };
        return { { aux[1], Side::Upper, 0 }, { b, Side::Upper, 0 } };
    case PLKind::Abs:
        return { { aux[caseIndex], Side::Upper, 0 } };
    case PLKind::Sign:
        if ( caseIndex == 0 )
            return { { f, Side::Lower, 1 }, { b, Side::Lower, 0 } };
        return { { f, Side::Upper, -1 }, { b, Side::Upper, -tolerance::kSignMargin } };
    case PLKind::Max:
        return { { aux[caseIndex], Side::Upper, 0 } };
    case PLKind::Disjunction:
    {
        CaseSplit split;
        for ( const DisjunctBound &bound : disjuncts[caseIndex] )
        {
            if ( bound.lower > -kInfinity )
                split.push_back( { bound.variable, Side::Lower, bound.lower } );
            if ( bound.upper < kInfinity )
                split.push_back( { bound.variable, Side::Upper, bound.upper } );
        }
        return split;
    }
    }
    return {};
}

std::vector<CaseSplit> PLConstraint::cases() const
{
    std::vector<CaseSplit> result;
    for ( unsigned i = 0; i < numCases(); ++i )
        result.push_back( caseSplit( i ) );
    return result;
}

namespace {

double expectedOutput( const PLConstraint &c, std::span<const double> values )
{
    double x = values[c.b];
    switch ( c.kind )
    {
    case PLKind::Relu:
        return std::max( 0.0, x );
    case PLKind::LeakyRelu:
        return std::max( x, c.alpha * x );
    case PLKind::Abs:
        return std::fabs( x );
    case PLKind::Sign:
        return x >= 0 ? 1.0 : -1.0;
    case PLKind::Max:
    {
        double best = -kInfinity;
        for ( VariableId input : c.inputs )
            best = std::max( best, values[input] );
        return best;
    }
    case PLKind::Disjunction:
        break;
    }
    return 0;
}

double disjunctViolation( const Disjunct &disjunct, std::span<const double> values )
{
    double total = 0;
    for ( const DisjunctBound &bound : disjunct )
    {
        double v = values[bound.variable];
        total += std::max( 0.0, bound.lower - v ) + std::max( 0.0, v - bound.upper );
    }
    return total;
}

} // namespace

bool PLConstraint::satisfiedBy( std::span<const double> values, double tolerance ) const
{
    switch ( kind )
    {
    case PLKind::Sign:
    {
        double fv = values[f];
        double bv = values[b];
        return ( std::fabs( fv - 1 ) <= tolerance && bv >= -tolerance ) ||
               ( std::fabs( fv + 1 ) <= tolerance && bv < 0 );
    }
    case PLKind::Disjunction:
        for ( const Disjunct &disjunct : disjuncts )
        {
            bool ok = true;
            for ( const DisjunctBound &bound : disjunct )
            {
                double v = values[bound.variable];
                if ( v < bound.lower - tolerance || v > bound.upper + tolerance )
                {
                    ok = false;
                    break;
                }
            }
            if ( ok )
                return true;
        }
        return false;
    default:
        return std::fabs( values[f] - expectedOutput( *this, values ) ) <= tolerance;
    }
}

double PLConstraint::violation( std::span<const double> values ) const
{
    if ( kind == PLKind::Disjunction )
    {
        double best = kInfinity;
        for ( const Disjunct &disjunct : disjuncts )
            best = std::min( best, disjunctViolation( disjunct, values ) );
        return best;
    }
    if ( kind == PLKind::Sign && satisfiedBy( values ) )
        return 0;
    return std::fabs( values[f] - expectedOutput( *this, values ) );
}

std::vector<VariableId> PLConstraint::semanticVariables() const
{
    std::vector<VariableId> result;
    switch ( kind )
    {
    case PLKind::Max:
        result.push_back( f );
        result.insert( result.end(), inputs.begin(), inputs.end() );
        break;
    case PLKind::Disjunction:
        for ( const Disjunct &disjunct : disjuncts )
            for ( const DisjunctBound &bound : disjunct )
                result.push_back( bound.variable );
        break;
    default:
        result = { f, b };
    }
    return result;
}

std::vector<VariableId> PLConstraint::allVariables() const
{
    std::vector<VariableId> result = semanticVariables();
    result.insert( result.end(), aux.begin(), aux.end() );
    return result;
}

Phase PLConstraint::phase( const BoundStore &bounds ) const
{
    unsigned consistent = 0;
    unsigned last = 0;
    for ( unsigned i = 0; i < numCases(); ++i )
    {
        if ( caseConsistent( caseSplit( i ), bounds ) )
        {
            ++consistent;
            last = i;
        }
    }
    if ( consistent == 0 )
        return { PhaseStatus::Infeasible, 0 };
    if ( consistent == 1 )
        return { PhaseStatus::Fixed, last };
    return { PhaseStatus::Unfixed, 0 };
}

bool PLConstraint::satisfiedByBounds( const BoundStore &bounds ) const
{
    if ( !normalized )
        return false;
    for ( unsigned i = 0; i < numCases(); ++i )
        if ( caseEntailed( caseSplit( i ), bounds ) )
            return true;
    return false;
}

void PLConstraint::renameVariables( const std::vector<VariableId> &newIndex )
{
    f = newIndex[f];
    b = newIndex[b];
    for ( VariableId &v : inputs )
        v = newIndex[v];
    for ( VariableId &v : aux )
        v = newIndex[v];
    for ( Disjunct &disjunct : disjuncts )
        for ( DisjunctBound &bound : disjunct )
            bound.variable = newIndex[bound.variable];
}

bool caseConsistent( const CaseSplit &split, const BoundStore &bounds )
{
    for ( const BoundUpdate &update : split )
    {
        if ( update.side == Side::Lower &&
             update.value > bounds.upper( update.variable ) + tolerance::kFeasibility )
            return false;
        if ( update.side == Side::Upper &&
             update.value < bounds.lower( update.variable ) - tolerance::kFeasibility )
            return false;
    }
    return true;
}

bool caseEntailed( const CaseSplit &split, const BoundStore &bounds )
{
    for ( const BoundUpdate &update : split )
    {
        if ( update.side == Side::Lower &&
             bounds.lower( update.variable ) < update.value - tolerance::kTighten )
            return false;
        if ( update.side == Side::Upper &&
             bounds.upper( update.variable ) > update.value + tolerance::kTighten )
            return false;
    }
    return true;
}

} // namespace nnv
