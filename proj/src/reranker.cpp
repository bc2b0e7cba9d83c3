#include "clir/reranker.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>

#include "clir/errors.hpp"

namespace clir::rerank {

void RerankConfig::validate() const {
    if (depth < 1) throw ConfigError("depth must be >= 1");
    if (top_sorted > depth) throw ConfigError("top_sorted must be <= depth");
    if (heap_arity < 1 || heap_arity + 1 > 5)
        throw ConfigError("heap_arity + 1 must not exceed the comparator capacity of 5");
    if (passage_tokens < 1) throw ConfigError("passage_tokens must be >= 1");
}

double pointwise_prob(double logit_true, double logit_false) {
    // exp(lt)/(exp(lt)+exp(lf)) = 1/(1+exp(lf-lt)), stable for large gaps
    double d = logit_false - logit_true;
    if (d > 0) {
        double e = std::exp(-d);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(d));
}

namespace {

std::string passage_text(const corpus::Document& doc, const corpus::Passage& p,
                         const std::vector<std::string>& tokens) {
    std::string text;
    for (std::size_t i = p.start; i < p.start + p.length; ++i) {
        if (!text.empty()) text += ' ';
        text += tokens[i];
    }
    (void)doc;
    return text;
}

// Places the pinned ids at their original positions and fills the remaining
// slots with `ordered` front to back.
std::vector<std::string> merge_pinned(const std::vector<std::string>& original_head,
                                      const std::vector<bool>& pinned,
                                      const std::vector<std::string>& ordered) {
    std::vector<std::string> out(original_head.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < original_head.size(); ++i)
        out[i] = pinned[i] ? original_head[i] : ordered[next++];
    return out;
}

} // namespace

std::vector<std::pair<std::string, double>> stitch_scores(
    const std::vector<std::string>& reordered_head,
    const std::vector<std::pair<std::string, double>>& original) {
    if (reordered_head.empty()) return original;
    constexpr double kEpsilon = 0.001;
    double s_max = original.empty() ? 0.0 : original.front().second;
    for (const auto& [doc, s] : original) s_max = std::max(s_max, s);

    std::vector<std::pair<std::string, double>> out;
    out.reserve(original.size());
    std::size_t h = reordered_head.size();
    for (std::size_t i = 0; i < h; ++i)
        out.emplace_back(reordered_head[i],
                         s_max + static_cast<double>(h - i) * kEpsilon);
    std::set<std::string> head_set(reordered_head.begin(), reordered_head.end());
    for (const auto& [doc, s] : original)
        if (!head_set.contains(doc)) out.emplace_back(doc, s);
    return out;
}

Run rerank_pointwise(const Run& run, PointwiseScorer& scorer, std::size_t depth,
                     const Topics& topics, const Corpus& corpus) {
    if (depth < 1) throw ConfigError("depth must be >= 1");
    Run out;
    out.tag = run.tag + ".pointwise";
    for (const auto& [topic_id, list] : run.topics) {
        auto tit = topics.find(topic_id);
        if (tit == topics.end()) {
            std::cerr << "warning: topic " << topic_id << " has no topic record, unchanged\n";
            out.topics[topic_id] = list;
            continue;
        }
        std::string query = corpus::build_query_text(tit->second);
        std::size_t h = std::min(depth, list.size());
        std::vector<std::string> head_docs(h);
        std::vector<bool> pinned(h, false);
        std::vector<std::pair<double, std::size_t>> scored; // (score, input rank)
        for (std::size_t i = 0; i < h; ++i) {
            head_docs[i] = list[i].first;
            auto dit = corpus.find(list[i].first);
            std::optional<double> s;
            if (dit != corpus.end()) s = scorer.score(query, dit->second.body);
            if (!s) {
                std::cerr << "warning: scorer failed on " << list[i].first
                          << ", keeping its position\n";
                pinned[i] = true;
            } else {
                scored.emplace_back(*s, i);
            }
        }
        // Stable on ties: sort by score descending, input rank ascending.
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        std::vector<std::string> ordered;
        ordered.reserve(scored.size());
        for (const auto& [s, i] : scored) ordered.push_back(head_docs[i]);
        out.topics[topic_id] = stitch_scores(merge_pinned(head_docs, pinned, ordered), list);
    }
    return out;
}

SelectedPassage select_best_passage(const corpus::Document& doc, const corpus::Topic& topic,
                                    ComparatorOracle& oracle, std::size_t passage_tokens,
                                    std::size_t* oracle_calls) {
    std::vector<std::string> tokens = corpus::tokenize(doc.body);
    if (tokens.empty()) throw SizeError("document " + doc.doc_id + " has no tokens");
    corpus::WindowConfig cfg{passage_tokens, passage_tokens};
    std::vector<corpus::Passage> passages = corpus::window_passages(doc.doc_id, tokens.size(), cfg);

    std::vector<std::size_t> alive(passages.size());
    std::iota(alive.begin(), alive.end(), std::size_t{0});
    std::vector<std::string> texts;
    texts.reserve(passages.size());
    for (const corpus::Passage& p : passages) texts.push_back(passage_text(doc, p, tokens));

    std::size_t calls = 0;
    while (alive.size() > 1) {
        std::vector<std::size_t> winners;
        for (std::size_t g = 0; g < alive.size(); g += 5) {
            std::size_t group = std::min<std::size_t>(5, alive.size() - g);
            if (group == 1) {
                winners.push_back(alive[g]);
                continue;
            }
            std::vector<std::string> group_texts;
            for (std::size_t i = 0; i < group; ++i) group_texts.push_back(texts[alive[g + i]]);
            ++calls;
            std::optional<std::size_t> w = oracle.best_of(topic.title, topic.description,
                                                          group_texts);
            // Failure: the first passage listed wins.
            winners.push_back(alive[g + (w ? *w : 0)]);
        }
        alive = std::move(winners);
    }
    if (oracle_calls) *oracle_calls += calls;
    return {passages[alive.front()], texts[alive.front()]};
}

namespace {

// One sift-down step group: parent listed first, then its <= arity children.
void sift_down(std::vector<HeadItem>& a, std::size_t i, std::size_t size,
               const corpus::Topic& topic, ComparatorOracle& oracle, std::size_t arity,
               std::size_t& calls) {
    while (true) {
        std::size_t first_child = arity * i + 1;
        if (first_child >= size) return;
        std::size_t n_children = std::min(arity, size - first_child);
        std::vector<std::string> texts;
        texts.reserve(n_children + 1);
        texts.push_back(a[i].text);
        for (std::size_t c = 0; c < n_children; ++c) texts.push_back(a[first_child + c].text);
        ++calls;
        std::optional<std::size_t> w = oracle.best_of(topic.title, topic.description, texts);
        if (!w || *w == 0) return; // Failure picks the parent: no swap
        std::size_t child = first_child + (*w - 1);
        std::swap(a[i], a[child]);
        i = child;
    }
}

} // namespace

std::vector<HeadItem> heapsort_rerank(std::vector<HeadItem> head, const corpus::Topic& topic,
                                      ComparatorOracle& oracle, const RerankConfig& cfg,
                                      std::size_t* oracle_calls) {
    cfg.validate();
    if (head.empty()) throw SizeError("heapsort_rerank needs a non-empty head");
    std::size_t n = head.size();
    std::size_t arity = cfg.heap_arity;
    std::size_t calls = 0;

    // Build the max-heap: sift-down from the last internal node toward the root.
    if (n >= 2)
        for (std::size_t i = (n - 2) / arity + 1; i-- > 0;)
            sift_down(head, i, n, topic, oracle, arity, calls);

    std::size_t extract = std::min(cfg.top_sorted, n);
    std::vector<HeadItem> out;
    out.reserve(n);
    std::size_t heap_size = n;
    for (std::size_t e = 0; e < extract; ++e) {
        out.push_back(head[0]);
        std::swap(head[0], head[heap_size - 1]);
        --heap_size;
        if (heap_size > 1) sift_down(head, 0, heap_size, topic, oracle, arity, calls);
    }
    // The residue is left in heap-array order, not re-sorted.
    for (std::size_t i = 0; i < heap_size; ++i) out.push_back(head[i]);
    if (oracle_calls) *oracle_calls += calls;
    return out;
}

Run rerank_tournament(const Run& run, const Topics& topics, const Corpus& corpus,
                      ComparatorOracle& oracle, const RerankConfig& cfg) {
    cfg.validate();
    Run out;
    out.tag = run.tag + ".gpt4rerank";
    for (const auto& [topic_id, list] : run.topics) {
        auto tit = topics.find(topic_id);
        if (tit == topics.end()) {
            std::cerr << "warning: topic " << topic_id << " has no topic record, unchanged\n";
            out.topics[topic_id] = list;
            continue;
        }
        const corpus::Topic& topic = tit->second;
        std::size_t h = std::min(cfg.depth, list.size());
        std::vector<std::string> head_docs(h);
        std::vector<bool> pinned(h, false);
        std::vector<HeadItem> items;
        for (std::size_t i = 0; i < h; ++i) {
            head_docs[i] = list[i].first;
            auto dit = corpus.find(list[i].first);
            if (dit == corpus.end() || corpus::tokenize(dit->second.body).empty()) {
                std::cerr << "warning: no text for " << list[i].first
                          << ", keeping its position\n";
                pinned[i] = true;
                continue;
            }
            SelectedPassage sel = select_best_passage(dit->second, topic, oracle,
                                                      cfg.passage_tokens);
            items.push_back({{sel.passage.passage_id, list[i].first, list[i].second},
                             std::move(sel.text)});
        }
        std::vector<std::string> ordered;
        if (!items.empty()) {
            std::vector<HeadItem> sorted = heapsort_rerank(std::move(items), topic, oracle, cfg);
            ordered.reserve(sorted.size());
            for (const HeadItem& it : sorted) ordered.push_back(it.sp.doc_id);
        }
        out.topics[topic_id] = stitch_scores(merge_pinned(head_docs, pinned, ordered), list);
    }
    return out;
}

std::vector<HeadItem> rerank_listwise_once(const std::vector<HeadItem>& head,
                                           const corpus::Topic& topic, ListwiseOracle& oracle) {
    if (head.empty()) throw SizeError("rerank_listwise_once needs a non-empty head");
    std::vector<std::string> texts;
    texts.reserve(head.size());
    for (const HeadItem& it : head) texts.push_back(it.text);
    std::optional<std::vector<std::size_t>> perm = oracle.order(topic, texts);
    if (perm) {
        std::vector<bool> used(head.size(), false);
        bool valid = perm->size() == head.size();
        for (std::size_t i : *perm) {
            if (i >= head.size() || used[i]) { valid = false; break; }
            used[i] = true;
        }
        if (valid) {
            std::vector<HeadItem> out;
            out.reserve(head.size());
            for (std::size_t i : *perm) out.push_back(head[i]);
            return out;
        }
    }
    return head; // Failure or invalid permutation: identity
}

Run rerank_listwise(const Run& run, const Topics& topics, const Corpus& corpus,
                    ListwiseOracle& oracle, const RerankConfig& cfg) {
    cfg.validate();
    Run out;
    out.tag = run.tag + ".listwise";
    for (const auto& [topic_id, list] : run.topics) {
        auto tit = topics.find(topic_id);
        if (tit == topics.end()) {
            std::cerr << "warning: topic " << topic_id << " has no topic record, unchanged\n";
            out.topics[topic_id] = list;
            continue;
        }
        const corpus::Topic& topic = tit->second;
        std::size_t h = std::min(cfg.depth, list.size());
        std::vector<std::string> head_docs(h);
        std::vector<bool> pinned(h, false);
        std::vector<HeadItem> items;
        for (std::size_t i = 0; i < h; ++i) {
            head_docs[i] = list[i].first;
            auto dit = corpus.find(list[i].first);
            std::vector<std::string> tokens;
            if (dit != corpus.end()) tokens = corpus::tokenize(dit->second.body);
            if (tokens.empty()) {
                std::cerr << "warning: no text for " << list[i].first
                          << ", keeping its position\n";
                pinned[i] = true;
                continue;
            }
            // The first passage_tokens window stands in for the document.
            corpus::Passage p = corpus::window_passages(
                dit->second.doc_id, tokens.size(),
                corpus::WindowConfig{cfg.passage_tokens, cfg.passage_tokens}).front();
            items.push_back({{p.passage_id, list[i].first, list[i].second},
                             passage_text(dit->second, p, tokens)});
        }
        std::vector<std::string> ordered;
        if (!items.empty()) {
            std::vector<HeadItem> sorted = rerank_listwise_once(items, topic, oracle);
            for (const HeadItem& it : sorted) ordered.push_back(it.sp.doc_id);
        }
        out.topics[topic_id] = stitch_scores(merge_pinned(head_docs, pinned, ordered), list);
    }
    return out;
}

} // namespace clir::rerank
