#include "nnv/Query.h"
#include "nnv/Error.h"
#include "nnv/SolveResult.h"

#include <sstream>

namespace nnv {

unsigned Query::addConstraint( PLConstraint constraint )
{
    constraint.id = static_cast<unsigned>( constraints.size() );
    constraints.push_back( std::move( constraint ) );
    return constraints.back().id;
}

void Query::validate() const
{
    unsigned n = numVariables();
    auto check = [n]( VariableId v, const std::string &where ) {
        if ( v >= n )
            throw UsageError( where + " references variable " + std::to_string( v ) +
                              " but the query has " + std::to_string( n ) + " variables" );
    };
    for ( size_t i = 0; i < equations.size(); ++i )
        for ( const auto &[v, coefficient] : equations[i].lhs.terms() )
            check( v, "equation " + std::to_string( i ) );
    for ( const PLConstraint &c : constraints )
        for ( VariableId v : c.allVariables() )
            check( v, std::string( kindName( c.kind ) ) + " constraint " + std::to_string( c.id ) );
    for ( VariableId v : inputVariables )
        check( v, "input list" );
    for ( VariableId v : outputVariables )
        check( v, "output list" );
}

bool Query::operator==( const Query &other ) const
{
    return numVariables() == other.numVariables() && bounds.sameBounds( other.bounds ) &&
           equations == other.equations && constraints == other.constraints &&
           inputVariables == other.inputVariables && outputVariables == other.outputVariables;
}

std::optional<std::string> findViolation( const Query &query,
                                          std::span<const double> values,
                                          double tolerance )
{
    if ( values.size() < query.numVariables() )
        return "assignment has " + std::to_string( values.size() ) + " values, query has " +
               std::to_string( query.numVariables() ) + " variables";

    for ( VariableId v = 0; v < query.numVariables(); ++v )
    {
        if ( values[v] < query.bounds.lower( v ) - tolerance ||
             values[v] > query.bounds.upper( v ) + tolerance )
        {
            std::ostringstream out;
            out << "x" << v << " = " << values[v] << " outside [" << query.bounds.lower( v ) << ", "
                << query.bounds.upper( v ) << "]";
            return out.str();
        }
    }
    for ( size_t i = 0; i < query.equations.size(); ++i )
    {
        if ( !query.equations[i].satisfiedBy( values, tolerance ) )
        {
            std::ostringstream out;
            out << "equation " << i << " residual " << query.equations[i].residual( values );
            return out.str();
        }
    }
    for ( const PLConstraint &c : query.constraints )
    {
        if ( !c.satisfiedBy( values, tolerance ) )
        {
            std::ostringstream out;
            out << kindName( c.kind ) << " constraint " << c.id << " violated by "
                << c.violation( values );
            return out.str();
        }
    }
    return std::nullopt;
}

const char *statusName( SolveStatus status )
{
    switch ( status )
    {
    case SolveStatus::Sat:
        return "sat";
    case SolveStatus::Unsat:
        return "unsat";
    case SolveStatus::Timeout:
        return "timeout";
    case SolveStatus::Unknown:
        return "unknown";
    }
    return "unknown";
}

SolveStats &SolveStats::operator+=( const SolveStats &other )
{
    splits += other.splits;
    pivots += other.pivots;
    lpSolves += other.lpSolves;
    tightenings += other.tightenings;
    soiProposals += other.soiProposals;
    subqueriesCreated += other.subqueriesCreated;
    subqueriesSolved += other.subqueriesSolved;
    subqueriesRedivided += other.subqueriesRedivided;
    subqueriesCancelled += other.subqueriesCancelled;
    splitsAfterCancel += other.splitsAfterCancel;
    return *this;
}

} // namespace nnv
