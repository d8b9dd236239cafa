#pragma once

#include "nnv/Engine.h"

#include <vector>

namespace nnv {

enum class DividerKind { Auto, Input, Constraint };

const char *dividerName( DividerKind kind );

struct SncOptions
{
    unsigned workers = 1;
    // Initial partition: 2^k regions for the input divider, k constraint levels otherwise.
    unsigned initialSplits = 2;
    double initialTimeout = 5;
    double timeoutFactor = 1.5;
    DividerKind divider = DividerKind::Auto;
};

// A region of the preprocessed query: bound updates applied on top of its
// bounds, either input intervals or the case bounds of forced splits.
struct SubQuery
{
    std::vector<BoundUpdate> region;
    // Per-attempt budget in seconds; zero means none.
    double budget = 0;
    unsigned depth = 0;
};

// Input splitting iff every input is finitely bounded and there are at most
// ten of them; an explicit request is honoured when applicable.
DividerKind chooseDivider( const Query &query, DividerKind requested = DividerKind::Auto );

// Copy of the query with the region applied at level 0.
Query restrictQuery( const Query &query, const SubQuery &sub );

// Bisects the widest input interval of each region until there are 2^k regions.
// Children share endpoints and tile the parent. Throws UsageError when an input
// is unbounded.
std::vector<SubQuery> divideInput( const Query &query, const SubQuery &sub, unsigned k );

// One child per case of the constraint the engine would branch on first.
// Throws UsageError when the region is decided without splitting.
std::vector<SubQuery> divideConstraint( const Query &query, const SubQuery &sub, const EngineOptions &options );

// Split-and-conquer over the preprocessed query: a shared pool of regions,
// re-divided with a larger budget on timeout; the first Sat cancels the rest.
// The engine options' timeout is the wall-clock limit of the whole run.
SolveResult runSnc( const Query &query, const EngineOptions &options, const SncOptions &snc );

// Every worker runs the whole query with seed base + i; the first Sat or Unsat wins.
SolveResult runPortfolio( const Query &query, const EngineOptions &options, unsigned workers );

} // namespace nnv
