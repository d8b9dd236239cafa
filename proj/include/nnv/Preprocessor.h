#pragma once

#include "nnv/Query.h"

#include <map>
#include <optional>
#include <vector>

namespace nnv {

// Adds aux variables and equations so that every PL constraint's cases are pure
// bound updates, and rewrites <= / >= rows as equalities with a nonnegative
// slack. Original variables keep their indices; new ones are appended.
Query normalize( const Query &query );

struct PreprocessOptions
{
    // Off: normalize only (proof production needs the query the proof refers to).
    bool simplify = true;
    unsigned maxPasses = 10;
};

struct PreprocessReport
{
    unsigned originalVariables = 0;
    // Indices in the normalized query.
    std::map<VariableId, double> eliminatedVariables;
    std::map<VariableId, VariableId> mergedVariables;
    // Normalized index -> preprocessed index, absent when merged or eliminated.
    std::vector<std::optional<VariableId>> indexMapping;
    unsigned collapsedConstraints = 0;
    unsigned fixpointRounds = 0;
    bool infeasible = false;
};

struct PreprocessResult
{
    Query query;
    PreprocessReport report;
};

PreprocessResult preprocess( const Query &query, const PreprocessOptions &options = {} );

// Rebuilds an assignment over the original query's variables from one over the
// preprocessed query.
Assignment lift( const PreprocessReport &report, const Assignment &preprocessed );

} // namespace nnv
