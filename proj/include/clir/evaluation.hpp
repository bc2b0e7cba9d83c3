#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>

#include "clir/run.hpp"

namespace clir::eval {

// topic_id -> doc_id -> grade; unjudged documents are simply absent.
using Qrels = std::map<std::string, std::map<std::string, int>>;

// Six whitespace-separated fields: topic Q0 doc rank score tag.
Run read_run(const std::filesystem::path& path);

// Emits ranks consistent with list order; lists are truncated at 1000.
void write_run(const Run& run, const std::filesystem::path& path);

Qrels read_qrels(const std::filesystem::path& path);

struct MetricResult {
    std::map<std::string, double> per_topic;
    double mean = 0.0;
    std::size_t evaluated_topics = 0;
};

// DCG with gain 2^g - 1 (or g when exp_gain is false) and log2(i+1) discount.
// Topics without relevant documents score 0 and are excluded from the mean.
MetricResult ndcg_at(const Run& run, const Qrels& qrels, std::size_t k = 20,
                     bool exp_gain = true);

MetricResult recall_at(const Run& run, const Qrels& qrels, std::size_t k = 1000);

// Shortest decimal representation that parses back to the same double.
std::string format_score(double value);

} // namespace clir::eval
