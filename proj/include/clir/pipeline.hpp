#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/index_core.hpp"
#include "clir/oracle_bridge.hpp"
#include "clir/reranker.hpp"
#include "clir/searcher.hpp"

namespace clir::pipeline {

struct PipelineConfig {
    std::uint64_t seed = 7;
    corpus::WindowConfig window{180, 90};
    std::size_t embed_dim = 32; // synthetic encoder
    index::BuildConfig index;
    search::SearchParams search;
    rerank::RerankConfig rerank;
    std::string fusion_method = "rrf"; // rrf | score | score-norm
    double k_rrf = 60.0;
    std::string tag = "clir";
    std::optional<oracle::OracleEndpoint> oracle_endpoint;
    std::optional<oracle::MockOracleSpec> mock_oracle;

    // Rejects unknown keys, naming the offender.
    static PipelineConfig from_json_file(const std::filesystem::path& path);
};

// Windows every document and embeds each passage with the synthetic encoder.
void embed_corpus(const std::vector<corpus::Document>& docs, const PipelineConfig& cfg,
                  std::vector<index::PassageInfo>& passage_table,
                  std::vector<embed::TokenMatrix>& matrices);

// Per-topic quantized (or exact) search followed by MaxP, up to 1000 docs per
// topic. Topics are processed in parallel with a deterministic merge.
Run search_topics(const std::vector<corpus::Topic>& topics, const index::QuantizedIndex& idx,
                  const search::SearchParams& params, const search::RawStore* raw,
                  const std::string& tag, unsigned threads);

struct PipelineResult {
    std::filesystem::path index_dir;
    std::filesystem::path embeddings_path;
    std::filesystem::path run_path;
    std::filesystem::path eval_path; // empty if no qrels supplied
};

// ingest -> embed -> index -> search -> (rerank with mock oracle if configured)
// -> eval. All outputs under out_dir; byte-identical across repeated runs and
// thread counts.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& corpus_path,
                            const std::filesystem::path& topics_path,
                            const std::optional<std::filesystem::path>& qrels_path,
                            const std::filesystem::path& out_dir, unsigned threads);

} // namespace clir::pipeline
