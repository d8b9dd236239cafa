#pragma once

#include "nnv/NetworkReasoner.h"
#include "nnv/Preprocessor.h"
#include "nnv/Query.h"
#include "nnv/SolveResult.h"

#include <atomic>
#include <map>
#include <optional>
#include <vector>

namespace nnv {

struct EngineOptions
{
    // Wall-clock budget; zero or negative means none.
    double timeoutSeconds = 0;
    uint64_t seed = 1;
    bool produceProof = false;
    // Run on every new search state, in order. Ignored in proof mode.
    std::vector<nlr::Analysis> analyses{ nlr::Analysis::Ibp, nlr::Analysis::DeepPoly };
    bool useSoI = true;
    // Consecutive rejected proposals before a search state counts as stalled.
    unsigned soiRejectionLimit = 20;
    // Proposal budget per search state; keeps a hot walk from running forever.
    unsigned soiProposalLimit = 40;
    double soiTemperature = 5;
    // Shared stop signal, checked before every split and SoI proposal.
    const std::atomic<bool> *cancel = nullptr;
};

// Chosen case per constraint id.
using PhasePattern = std::map<unsigned, unsigned>;

// Nonnegative linear term that is zero exactly when the case holds, given the
// aux rows and bounds. Empty for Sign and Disjunction, which stay out of SoI.
LinearExpression caseCost( const PLConstraint &constraint, unsigned caseIndex );
LinearExpression soiCost( const Query &query, const PhasePattern &pattern );

// Running mean of the cost reduction observed per constraint.
class PseudocostTable
{
public:
    void observe( unsigned constraintId, double reduction );
    unsigned count( unsigned constraintId ) const;
    double average( unsigned constraintId ) const;
    // Argmax of the estimate: the running mean once observed, the given
    // violation before that. Ties go to the lowest id. Candidates must be non-empty.
    unsigned pick( const std::vector<std::pair<unsigned, double>> &candidateViolations ) const;

private:
    struct Entry
    {
        unsigned count = 0;
        double mean = 0;
    };
    std::map<unsigned, Entry> _entries;
};

// Complete search over an aux-normalized query: case splits are bound updates
// on a trail, every search state runs propagation, the configured network
// analyses and an LP check, and DeepSoI looks for a satisfying phase pattern
// before the engine branches.
class Engine
{
public:
    Engine( const Query &normalized, EngineOptions options );
    ~Engine();
    Engine( const Engine & ) = delete;
    Engine &operator=( const Engine & ) = delete;

    // Sat results carry an assignment of the normalized query's variables.
    SolveResult solve();

    // The first constraint the search would split on, given the root state
    // (after propagation and analyses). Absent when the root is decided.
    std::optional<unsigned> pickRootSplit();

private:
    class Search;
    const Query &_query;
    EngineOptions _options;
};

// End-to-end solve of a raw query: preprocess (normalization only in proof
// mode), search, lift the witness and verify it against the raw query. A
// returned proof refers to normalize(query).
SolveResult solveQuery( const Query &query, const EngineOptions &options );

// Maps a Sat assignment of the preprocessed query back to the raw query and
// checks it there; a failed check turns the result into Unknown.
void liftAndVerify( const Query &query, const PreprocessReport &report, SolveResult &result );

// Proof mode supports ReLU and Max only; throws UnsupportedError otherwise.
void requireProofCompatible( const Query &query );

} // namespace nnv
