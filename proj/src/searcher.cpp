#include "clir/searcher.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "clir/errors.hpp"

namespace clir::search {

double maxsim(const embed::TokenMatrix& q, const embed::TokenMatrix& d) {
    if (q.rows() > 0 && d.rows() > 0 && q.dim != d.dim)
        throw DimError("maxsim dim mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) {
        std::span<const float> qi = q.row(i);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < d.rows(); ++j) {
            std::span<const float> dj = d.row(j);
            double dot = 0.0;
            for (std::size_t x = 0; x < q.dim; ++x)
                dot += static_cast<double>(qi[x]) * static_cast<double>(dj[x]);
            best = std::max(best, dot);
        }
        if (d.rows() > 0) total += best;
    }
    return total;
}

std::vector<std::uint32_t> candidates(const embed::TokenMatrix& q,
                                      const index::QuantizedIndex& idx, std::size_t nprobe) {
    if (nprobe < 1) throw ConfigError("nprobe must be >= 1");
    std::size_t k = idx.centroids.k;
    std::vector<char> seen(idx.passages.size(), 0);
    std::vector<std::pair<double, std::uint32_t>> scored(k);
    for (std::size_t i = 0; i < q.rows(); ++i) {
        std::span<const float> qi = q.row(i);
        for (std::size_t c = 0; c < k; ++c) {
            std::span<const float> cv = idx.centroids.row(c);
            double dot = 0.0;
            for (std::size_t x = 0; x < q.dim; ++x)
                dot += static_cast<double>(qi[x]) * static_cast<double>(cv[x]);
            scored[c] = {-dot, static_cast<std::uint32_t>(c)}; // sort ascending = dot desc, id asc
        }
        std::size_t take = std::min(nprobe, k);
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                          scored.end());
        for (std::size_t p = 0; p < take; ++p)
            for (std::uint32_t code_idx : idx.postings[scored[p].second])
                seen[idx.code_refs[code_idx].passage_ordinal] = 1;
    }
    std::vector<std::uint32_t> out;
    for (std::size_t p = 0; p < seen.size(); ++p)
        if (seen[p]) out.push_back(static_cast<std::uint32_t>(p));
    return out;
}

embed::TokenMatrix reconstruct_passage(const index::QuantizedIndex& idx,
                                       std::uint32_t passage_ordinal) {
    auto [offset, count] = idx.passage_code_span[passage_ordinal];
    embed::TokenMatrix m;
    m.passage_id = idx.passages[passage_ordinal].passage_id;
    m.dim = idx.centroids.dim;
    m.data.reserve(static_cast<std::size_t>(count) * m.dim);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::vector<float> row = index::reconstruct(idx.codes[offset + i], idx.centroids,
                                                    idx.scales);
        m.data.insert(m.data.end(), row.begin(), row.end());
    }
    return m;
}

std::vector<ScoredPassage> search(const embed::TokenMatrix& q, const index::QuantizedIndex& idx,
                                  const SearchParams& params, const RawStore* raw) {
    if (params.k_passages < 1) throw ConfigError("k_passages must be >= 1");
    std::vector<std::uint32_t> cands = candidates(q, idx, params.nprobe);
    std::vector<ScoredPassage> scored;
    scored.reserve(cands.size());
    for (std::uint32_t p : cands) {
        const index::PassageInfo& info = idx.passages[p];
        double score;
        if (params.exact && raw != nullptr) {
            auto it = raw->find(info.passage_id);
            if (it == raw->end())
                throw ConfigError("raw store is missing passage \"" + info.passage_id + "\"");
            score = maxsim(q, it->second);
        } else {
            score = maxsim(q, reconstruct_passage(idx, p));
        }
        scored.push_back({info.passage_id, info.doc_id, score});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredPassage& a, const ScoredPassage& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage_id < b.passage_id;
    });
    if (scored.size() > params.k_passages) scored.resize(params.k_passages);
    return scored;
}

std::vector<std::pair<std::string, double>> maxp_aggregate(
    const std::vector<ScoredPassage>& passages) {
    std::map<std::string, double> best;
    for (const ScoredPassage& p : passages) {
        auto [it, inserted] = best.emplace(p.doc_id, p.score);
        if (!inserted) it->second = std::max(it->second, p.score);
    }
    std::vector<std::pair<std::string, double>> out(best.begin(), best.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

} // namespace clir::search
