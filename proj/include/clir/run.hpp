#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace clir {

// TREC run semantics: per-topic ranked (doc_id, score) lists, scores
// non-increasing in list order.
struct Run {
    std::string tag;
    std::map<std::string, std::vector<std::pair<std::string, double>>> topics;
};

} // namespace clir
