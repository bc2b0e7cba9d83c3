#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/run.hpp"
#include "clir/searcher.hpp"

namespace clir::rerank {

// Pointwise relevance probability in [0,1]; nullopt signals a scoring failure.
struct PointwiseScorer {
    virtual ~PointwiseScorer() = default;
    virtual std::optional<double> score(const std::string& query_text,
                                        const std::string& passage_text) = 0;
};

// Picks the most relevant of 2..5 passages; nullopt is Failure.
struct ComparatorOracle {
    virtual ~ComparatorOracle() = default;
    virtual std::optional<std::size_t> best_of(const std::string& query_title,
                                               const std::string& query_description,
                                               const std::vector<std::string>& passages) = 0;
};

// Returns a full 0-based permutation of the supplied passages (best first);
// nullopt or an invalid permutation is Failure.
struct ListwiseOracle {
    virtual ~ListwiseOracle() = default;
    virtual std::optional<std::vector<std::size_t>> order(
        const corpus::Topic& topic, const std::vector<std::string>& passages) = 0;
};

struct RerankConfig {
    std::size_t depth = 30;
    std::size_t top_sorted = 20;
    std::size_t heap_arity = 4;
    std::size_t passage_tokens = 450;

    void validate() const; // throws ConfigError
};

using Corpus = std::map<std::string, corpus::Document>;
using Topics = std::map<std::string, corpus::Topic>;

// Numerically stable exp(lt)/(exp(lt)+exp(lf)).
double pointwise_prob(double logit_true, double logit_false);

// Rescores the top-depth documents of each topic; failed documents keep their
// input position within the head; the head is stitched above the tail.
Run rerank_pointwise(const Run& run, PointwiseScorer& scorer, std::size_t depth,
                     const Topics& topics, const Corpus& corpus);

struct SelectedPassage {
    corpus::Passage passage;
    std::string text;
};

// Non-overlapping passage_tokens windows; single-elimination tournament in
// document-order groups of <= 5, zero oracle calls for a one-passage document.
// Oracle Failure selects the first passage of the group.
SelectedPassage select_best_passage(const corpus::Document& doc, const corpus::Topic& topic,
                                    ComparatorOracle& oracle, std::size_t passage_tokens,
                                    std::size_t* oracle_calls = nullptr);

struct HeadItem {
    search::ScoredPassage sp;
    std::string text;
};

// 4-ary (cfg.heap_arity) max-heap built over the head in its given order, then
// cfg.top_sorted max-extractions; the residual heap array is appended as-is.
// Every comparison lists the parent first, so oracle Failure means no swap.
std::vector<HeadItem> heapsort_rerank(std::vector<HeadItem> head, const corpus::Topic& topic,
                                      ComparatorOracle& oracle, const RerankConfig& cfg,
                                      std::size_t* oracle_calls = nullptr);

// Per topic: best passage per head document, heapsort over those passages,
// stitch above the untouched tail. Documents without text keep their position.
Run rerank_tournament(const Run& run, const Topics& topics, const Corpus& corpus,
                      ComparatorOracle& oracle, const RerankConfig& cfg);

// Single listwise oracle call over the whole head; invalid output = identity.
std::vector<HeadItem> rerank_listwise_once(const std::vector<HeadItem>& head,
                                           const corpus::Topic& topic, ListwiseOracle& oracle);

Run rerank_listwise(const Run& run, const Topics& topics, const Corpus& corpus,
                    ListwiseOracle& oracle, const RerankConfig& cfg);

// Head doc at position i gets max(original) + (H - i) * 0.001; tail documents
// keep their original scores and order.
std::vector<std::pair<std::string, double>> stitch_scores(
    const std::vector<std::string>& reordered_head,
    const std::vector<std::pair<std::string, double>>& original);

} // namespace clir::rerank
