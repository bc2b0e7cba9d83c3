#pragma once

#include <vector>

#include "clir/run.hpp"

namespace clir::fusion {

// Reciprocal rank fusion: fused score = sum over runs of 1/(k_rrf + rank),
// rank 1-based. Rank-only; invariant under monotone rescaling of input scores.
Run rrf_fuse(const std::vector<Run>& runs, double k_rrf = 60.0);

// Per-topic (s - min)/(max - min); a constant-score topic maps to all 1.0.
Run minmax_normalize(const Run& run);

// Pools documents across runs, summing (optionally normalized) scores. Over
// disjoint document sets this is a pure merge-by-score.
Run score_fuse(const std::vector<Run>& runs, bool normalize = false);

} // namespace clir::fusion
