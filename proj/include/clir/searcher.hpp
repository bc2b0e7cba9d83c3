#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "clir/embed_io.hpp"
#include "clir/index_core.hpp"

namespace clir::search {

struct ScoredPassage {
    std::string passage_id;
    std::string doc_id;
    double score = 0.0;
};

struct SearchParams {
    std::size_t k_passages = 2500;
    std::size_t nprobe = 4;
    bool exact = false;
};

// Raw token vectors keyed by passage_id, for exact scoring.
using RawStore = std::unordered_map<std::string, embed::TokenMatrix>;

// Sum over query rows of the max dot product against document rows.
double maxsim(const embed::TokenMatrix& q, const embed::TokenMatrix& d);

// Passage ordinals (ascending) reachable through the nprobe nearest centroids
// of each query row.
std::vector<std::uint32_t> candidates(const embed::TokenMatrix& q,
                                      const index::QuantizedIndex& idx, std::size_t nprobe);

// Scores candidates with maxsim over reconstructed vectors, or raw vectors
// when params.exact and a raw store is supplied. Ties broken by ascending
// passage_id.
std::vector<ScoredPassage> search(const embed::TokenMatrix& q, const index::QuantizedIndex& idx,
                                  const SearchParams& params, const RawStore* raw = nullptr);

// MaxP: document score = max over its passages; ties by ascending doc_id.
std::vector<std::pair<std::string, double>> maxp_aggregate(
    const std::vector<ScoredPassage>& passages);

// Reconstructed token matrix of one indexed passage.
embed::TokenMatrix reconstruct_passage(const index::QuantizedIndex& idx,
                                       std::uint32_t passage_ordinal);

} // namespace clir::search
