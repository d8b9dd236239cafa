#pragma once

#include "nnv/Query.h"
#include "nnv/SolveResult.h"

#include <iosfwd>
#include <string>
#include <vector>

namespace nnv {

// Line-based query format:
//
//   MQ1
//   vars <n>
//   input <k> <v...>            output <k> <v...>
//   bound <var> <lo|-inf> <hi|inf>
//   eq <rel> <rhs> <k> <coeff var>{k}
//   (rel is =, <= or >=)
//   relu <f> <b>   leaky <f> <b> <alpha>   abs <f> <b>   sign <f> <b>   max <f> <k> <x...>
//   disj <m>  followed by m lines  case <k> <var lo|-inf hi|inf>{k}
//
// '#' starts a comment line. Doubles use the shortest exact representation.
// Only un-normalized constraints can be written; aux variables have no syntax.
void writeQuery( std::ostream &out, const Query &query );
std::string writeQuery( const Query &query );
Query parseQuery( std::istream &in );
Query parseQuery( const std::string &text );
Query readQueryFile( const std::string &path );

// Result file: status line, then "x <index> <value>" per variable when sat.
struct ResultFile
{
    SolveStatus status = SolveStatus::Unknown;
    std::vector<double> values;
};

void writeResult( std::ostream &out, SolveStatus status, const std::vector<double> &assignment );
ResultFile parseResult( const std::string &text );

std::optional<SolveStatus> parseStatus( const std::string &name );

} // namespace nnv
