#pragma once

#include "nnv/Query.h"

#include <cstdint>
#include <memory>
#include <string>

namespace nnv {

struct ProofNode;

enum class SolveStatus { Sat, Unsat, Timeout, Unknown };

const char *statusName( SolveStatus status );

struct SolveStats
{
    uint64_t splits = 0;
    uint64_t pivots = 0;
    uint64_t lpSolves = 0;
    uint64_t tightenings = 0;
    uint64_t soiProposals = 0;
    uint64_t timeMs = 0;
    // Parallel accounting.
    uint64_t subqueriesCreated = 0;
    uint64_t subqueriesSolved = 0;
    uint64_t subqueriesRedivided = 0;
    uint64_t subqueriesCancelled = 0;
    uint64_t splitsAfterCancel = 0;

    SolveStats &operator+=( const SolveStats &other );
};

struct SolveResult
{
    SolveStatus status = SolveStatus::Unknown;
    // Satisfying assignment when status is Sat.
    Assignment assignment;
    // Unsat certificate, present only when proof production was requested.
    std::shared_ptr<ProofNode> proof;
    SolveStats stats;
    std::string message;
};

} // namespace nnv
