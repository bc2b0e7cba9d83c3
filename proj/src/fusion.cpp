#include "clir/fusion.hpp"

#include <algorithm>
#include <map>

#include "clir/errors.hpp"

namespace clir::fusion {

namespace {

std::vector<std::pair<std::string, double>> sorted_list(
    const std::map<std::string, double>& scores) {
    std::vector<std::pair<std::string, double>> out(scores.begin(), scores.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

} // namespace

Run rrf_fuse(const std::vector<Run>& runs, double k_rrf) {
    if (runs.empty()) throw SizeError("rrf_fuse needs at least one run");
    Run fused;
    fused.tag = "rrf";
    std::map<std::string, std::map<std::string, double>> acc;
    for (const Run& run : runs) {
        for (const auto& [topic, list] : run.topics) {
            auto& topic_acc = acc[topic];
            for (std::size_t r = 0; r < list.size(); ++r)
                topic_acc[list[r].first] += 1.0 / (k_rrf + static_cast<double>(r + 1));
        }
    }
    for (const auto& [topic, scores] : acc) fused.topics[topic] = sorted_list(scores);
    return fused;
}

Run minmax_normalize(const Run& run) {
    Run out;
    out.tag = run.tag;
    for (const auto& [topic, list] : run.topics) {
        if (list.empty()) {
            out.topics[topic] = {};
            continue;
        }
        double lo = list.front().second, hi = list.front().second;
        for (const auto& [doc, s] : list) {
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        auto& dst = out.topics[topic];
        dst.reserve(list.size());
        for (const auto& [doc, s] : list)
            dst.emplace_back(doc, hi == lo ? 1.0 : (s - lo) / (hi - lo));
    }
    return out;
}

Run score_fuse(const std::vector<Run>& runs, bool normalize) {
    if (runs.empty()) throw SizeError("score_fuse needs at least one run");
    Run fused;
    fused.tag = normalize ? "score-norm" : "score";
    std::map<std::string, std::map<std::string, double>> acc;
    for (const Run& raw : runs) {
        Run run = normalize ? minmax_normalize(raw) : raw;
        for (const auto& [topic, list] : run.topics) {
            auto& topic_acc = acc[topic];
            for (const auto& [doc, s] : list) topic_acc[doc] += s;
        }
    }
    for (const auto& [topic, scores] : acc) fused.topics[topic] = sorted_list(scores);
    return fused;
}

} // namespace clir::fusion
