#include "clir/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "clir/errors.hpp"

namespace clir::eval {

std::string format_score(double value) {
    char buf[64];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
        if (std::strtod(buf, nullptr) == value) break;
    }
    return buf;
}

Run read_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open run file: " + path.string());
    Run run;
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> expected_rank;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string topic, q0, doc, rank_s, score_s, tag, extra;
        if (!(ss >> topic >> q0 >> doc >> rank_s >> score_s >> tag) || (ss >> extra))
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": expected exactly 6 fields");
        std::size_t rank = 0;
        double score = 0.0;
        try {
            rank = std::stoull(rank_s);
            score = std::stod(score_s);
        } catch (const std::exception&) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": bad rank or score");
        }
        auto& list = run.topics[topic];
        if (rank != ++expected_rank[topic])
            throw ConsistencyError(path.string() + ":" + std::to_string(line_no) +
                                   ": rank " + rank_s + " out of sequence");
        if (!list.empty() && score > list.back().second)
            throw ConsistencyError(path.string() + ":" + std::to_string(line_no) +
                                   ": scores increase within topic " + topic);
        list.emplace_back(doc, score);
        if (run.tag.empty()) run.tag = tag;
    }
    return run;
}

void write_run(const Run& run, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    std::string tag = run.tag.empty() ? "clir" : run.tag;
    for (const auto& [topic, list] : run.topics) {
        std::size_t limit = std::min<std::size_t>(list.size(), 1000);
        for (std::size_t i = 0; i < limit; ++i)
            out << topic << " Q0 " << list[i].first << " " << (i + 1) << " "
                << format_score(list[i].second) << " " << tag << "\n";
    }
    if (!out) throw FormatError("write failed: " + path.string());
}

Qrels read_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open qrels file: " + path.string());
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string topic, zero, doc, grade_s, extra;
        if (!(ss >> topic >> zero >> doc >> grade_s) || (ss >> extra))
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": expected 4 fields");
        int grade = 0;
        auto [ptr, ec] = std::from_chars(grade_s.data(), grade_s.data() + grade_s.size(), grade);
        if (ec != std::errc{} || ptr != grade_s.data() + grade_s.size())
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": non-integer grade \"" + grade_s + "\"");
        if (grade < 0) {
            std::cerr << "warning: " << path.string() << ":" << line_no
                      << ": negative grade clamped to 0\n";
            grade = 0;
        }
        auto& topic_map = qrels[topic];
        if (topic_map.contains(doc))
            std::cerr << "warning: " << path.string() << ":" << line_no << ": duplicate entry for "
                      << topic << "/" << doc << ", last wins\n";
        topic_map[doc] = grade;
    }
    return qrels;
}

namespace {

double gain(int grade, bool exp_gain) {
    return exp_gain ? std::exp2(static_cast<double>(grade)) - 1.0
                    : static_cast<double>(grade);
}

bool has_relevant(const std::map<std::string, int>& judged) {
    for (const auto& [doc, g] : judged)
        if (g > 0) return true;
    return false;
}

} // namespace

MetricResult ndcg_at(const Run& run, const Qrels& qrels, std::size_t k, bool exp_gain) {
    if (k < 1) throw ConfigError("k must be >= 1");
    MetricResult res;
    double total = 0.0;
    for (const auto& [topic, list] : run.topics) {
        auto qit = qrels.find(topic);
        if (qit == qrels.end()) {
            std::cerr << "warning: topic " << topic << " absent from qrels, skipped\n";
            continue;
        }
        const auto& judged = qit->second;
        if (!has_relevant(judged)) {
            res.per_topic[topic] = 0.0;
            continue;
        }
        double dcg = 0.0;
        for (std::size_t i = 0; i < std::min(k, list.size()); ++i) {
            auto g = judged.find(list[i].first);
            if (g != judged.end())
                dcg += gain(g->second, exp_gain) / std::log2(static_cast<double>(i + 2));
        }
        std::vector<int> grades;
        grades.reserve(judged.size());
        for (const auto& [doc, g] : judged)
            if (g > 0) grades.push_back(g);
        std::sort(grades.rbegin(), grades.rend());
        double idcg = 0.0;
        for (std::size_t i = 0; i < std::min(k, grades.size()); ++i)
            idcg += gain(grades[i], exp_gain) / std::log2(static_cast<double>(i + 2));
        double v = dcg / idcg;
        res.per_topic[topic] = v;
        total += v;
        res.evaluated_topics += 1;
    }
    res.mean = res.evaluated_topics == 0 ? 0.0 : total / static_cast<double>(res.evaluated_topics);
    return res;
}

MetricResult recall_at(const Run& run, const Qrels& qrels, std::size_t k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    MetricResult res;
    double total = 0.0;
    for (const auto& [topic, list] : run.topics) {
        auto qit = qrels.find(topic);
        if (qit == qrels.end()) {
            std::cerr << "warning: topic " << topic << " absent from qrels, skipped\n";
            continue;
        }
        const auto& judged = qit->second;
        std::size_t relevant = 0;
        for (const auto& [doc, g] : judged)
            if (g > 0) ++relevant;
        if (relevant == 0) {
            res.per_topic[topic] = 0.0;
            continue;
        }
        std::size_t hit = 0;
        for (std::size_t i = 0; i < std::min(k, list.size()); ++i) {
            auto g = judged.find(list[i].first);
            if (g != judged.end() && g->second > 0) ++hit;
        }
        double v = static_cast<double>(hit) / static_cast<double>(relevant);
        res.per_topic[topic] = v;
        total += v;
        res.evaluated_topics += 1;
    }
    res.mean = res.evaluated_topics == 0 ? 0.0 : total / static_cast<double>(res.evaluated_topics);
    return res;
}

} // namespace clir::eval
