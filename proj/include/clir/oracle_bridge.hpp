#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clir/reranker.hpp"

namespace clir::oracle {

struct OracleEndpoint {
    std::string base_url;
    std::string auth_token_env; // empty -> no auth header
    double timeout_s = 30.0;
    int max_retries = 2;
    double rate_limit = 0.0;      // calls/second, 0 = unlimited
    double backoff_initial_s = 0.1;
};

// system message + user prompt, byte-deterministic; passages numbered from 1
// in the given order. 2..5 passages, else ArityError.
std::pair<std::string, std::string> build_best_of_prompt(
    const std::string& title, const std::string& description,
    const std::vector<std::string>& passages);

// Accepts "[k]" with optional surrounding whitespace, 1 <= k <= n_passages,
// returning k-1; anything else is Failure (nullopt).
std::optional<std::size_t> parse_best_of_response(const std::string& text,
                                                  std::size_t n_passages);

struct MockOracleSpec {
    std::map<std::string, double> hidden_scores;
    // call ordinals are 1-based; the call fails when failure_every > 0 and
    // ordinal % failure_every == 0 (1 = always, 0 = never)
    std::size_t failure_every = 0;
    // key passages by their first whitespace token instead of the full text
    bool key_by_first_token = false;
};

class MockComparator : public rerank::ComparatorOracle {
  public:
    explicit MockComparator(MockOracleSpec spec) : spec_(std::move(spec)) {}

    std::optional<std::size_t> best_of(const std::string& title, const std::string& description,
                                       const std::vector<std::string>& passages) override;

    std::size_t calls() const { return ordinal_.load(); }

  private:
    MockOracleSpec spec_;
    std::atomic<std::size_t> ordinal_{0};
};

class MockPointwise : public rerank::PointwiseScorer {
  public:
    explicit MockPointwise(MockOracleSpec spec) : spec_(std::move(spec)) {}

    std::optional<double> score(const std::string& query_text,
                                const std::string& passage_text) override;

  private:
    MockOracleSpec spec_;
    std::atomic<std::size_t> ordinal_{0};
};

class MockListwise : public rerank::ListwiseOracle {
  public:
    explicit MockListwise(MockOracleSpec spec) : spec_(std::move(spec)) {}

    std::optional<std::vector<std::size_t>> order(
        const corpus::Topic& topic, const std::vector<std::string>& passages) override;

  private:
    MockOracleSpec spec_;
    std::atomic<std::size_t> ordinal_{0};
};

double hidden_score_for(const MockOracleSpec& spec, const std::string& passage_text);

// POSTs {system, prompt, max_tokens} to {base_url}/v1/complete and parses the
// returned {text}. Transport errors retry with exponential backoff; parse
// failures do not.
class WireComparator : public rerank::ComparatorOracle {
  public:
    explicit WireComparator(OracleEndpoint endpoint); // ConfigError if auth env var missing

    std::optional<std::size_t> best_of(const std::string& title, const std::string& description,
                                       const std::vector<std::string>& passages) override;

  private:
    void rate_limit_wait();

    OracleEndpoint endpoint_;
    std::string auth_token_;
    std::mutex rate_mutex_;
    std::chrono::steady_clock::time_point next_allowed_{};
};

} // namespace clir::oracle
