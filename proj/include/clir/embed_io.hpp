#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace clir::embed {

// Per-passage sequence of unit-norm token vectors, stored row-major.
struct TokenMatrix {
    std::string passage_id;
    std::size_t dim = 0;
    std::vector<float> data; // rows() * dim

    std::size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }
    std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
    std::span<float> row(std::size_t i) { return {data.data() + i * dim, dim}; }
};

struct EmbeddingManifest {
    std::size_t dim = 0;
    std::size_t count = 0; // number of matrices in the data file
    std::string tokenizer_name;
    std::string encoder_tag;
};

// Data file: magic "LFV1", u32 dim, then records
// [u16 passage_id length, passage_id bytes, u32 row count, rows as float32 LE].
// Manifest written as a JSON sidecar at <path>.json.
EmbeddingManifest write_embeddings(const std::vector<TokenMatrix>& matrices,
                                   const std::filesystem::path& path,
                                   const std::string& tokenizer_name,
                                   const std::string& encoder_tag);

// Validates the header, row norms (1 +/- 1e-4) and the manifest count.
std::vector<TokenMatrix> read_embeddings(const std::filesystem::path& path);

EmbeddingManifest read_manifest(const std::filesystem::path& path);

// Deterministic synthetic encoder: each token maps to a unit vector keyed by
// hash(token, seed), identical across positions, passages and platforms.
TokenMatrix synthetic_embed(const std::vector<std::string>& tokens, std::size_t dim,
                            std::uint64_t seed, const std::string& passage_id = {});

// Tag recorded in manifests/metadata so searchers can re-embed queries.
std::string synthetic_encoder_tag(std::size_t dim, std::uint64_t seed);

// Parses a tag produced by synthetic_encoder_tag; returns false if not synthetic.
bool parse_synthetic_encoder_tag(const std::string& tag, std::size_t& dim, std::uint64_t& seed);

} // namespace clir::embed
