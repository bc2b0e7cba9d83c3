#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/embed_io.hpp"

namespace clir::index {

struct Centroids {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<float> data; // k * dim

    std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
};

struct Scales {
    std::vector<float> per_dim;
};

// Centroid id plus one sign bit per dimension, bit j stored at byte j/8, bit j%8.
struct TokenCode {
    std::uint32_t centroid_id = 0;
    std::vector<std::uint8_t> sign_bits;

    bool bit(std::size_t j) const { return (sign_bits[j / 8] >> (j % 8)) & 1; }
};

struct CodeRef {
    std::uint32_t passage_ordinal = 0;
    std::uint32_t token_ordinal = 0;
};

struct PassageInfo {
    std::string passage_id;
    std::string doc_id;
    std::uint32_t start = 0;
    std::uint32_t length = 0;
};

struct IndexMeta {
    corpus::WindowConfig window;
    std::string tokenizer_name;
    std::string encoder_tag;
    std::uint32_t pool_factor = 1;
    std::uint32_t dim = 0;
    std::uint32_t k = 0;
    std::uint64_t seed = 0;
};

struct QuantizedIndex {
    IndexMeta meta;
    Centroids centroids;
    Scales scales;
    std::vector<TokenCode> codes;  // passage-major, token order within passage
    std::vector<CodeRef> code_refs;
    std::vector<std::vector<std::uint32_t>> postings; // centroid_id -> code indices
    std::vector<PassageInfo> passages;                // ordinal order
    std::vector<std::pair<std::uint32_t, std::uint32_t>> passage_code_span; // offset, count
    std::unordered_map<std::string, std::uint32_t> passage_ordinal;

    void rebuild_lookup();
};

struct BuildConfig {
    std::size_t k = 0; // 0 -> 2^ceil(log2(sqrt(total tokens)))
    std::uint32_t pool_factor = 1;
    std::uint64_t seed = 0;
    std::size_t sample_size = 1 << 16;
    std::size_t max_iters = 25;
};

// Seeded k-means++ followed by Lloyd iterations until assignment fixpoint or
// max_iters; empty clusters re-seeded from the farthest point.
Centroids train_centroids(const std::vector<float>& sample, std::size_t n, std::size_t dim,
                          std::size_t k, std::uint64_t seed, std::size_t max_iters = 25);

// per_dim[j] = mean |residual[j]| over the sample.
Scales compute_scales(const std::vector<float>& residuals, std::size_t n, std::size_t dim);

TokenCode quantize(std::span<const float> v, const Centroids& centroids, const Scales& scales);

std::vector<float> reconstruct(const TokenCode& code, const Centroids& centroids,
                               const Scales& scales);

// k-means with k = ceil(rows/factor); output rows are cluster means
// re-normalized to unit norm, ordered by each cluster's smallest token ordinal.
embed::TokenMatrix pool_tokens(const embed::TokenMatrix& m, std::uint32_t factor,
                               std::uint64_t seed);

QuantizedIndex build_index(const std::vector<embed::TokenMatrix>& embeddings,
                           const std::vector<PassageInfo>& passage_table,
                           const IndexMeta& meta_template, const BuildConfig& cfg);

// Directory layout: meta.json, centroids.bin, scales.bin, codes.bin,
// postings.bin, passages.jsonl. All binary sections little-endian.
void save_index(const QuantizedIndex& index, const std::filesystem::path& dir);
QuantizedIndex load_index(const std::filesystem::path& dir);

} // namespace clir::index
