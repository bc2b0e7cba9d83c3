#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clir::corpus {

struct Document {
    std::string doc_id;
    std::optional<std::string> title;
    std::string body;
};

struct Topic {
    std::string topic_id;
    std::string title;
    std::string description;
};

struct Passage {
    std::string passage_id; // doc_id + "#" + ordinal
    std::string doc_id;
    std::size_t start = 0;  // token offset
    std::size_t length = 0; // token count
};

struct WindowConfig {
    std::size_t window = 180;
    std::size_t stride = 90;

    bool valid() const { return stride >= 1 && stride <= window; }
};

// Splits on Unicode whitespace. Empty text yields an empty list.
std::vector<std::string> tokenize(std::string_view text);

// Canonical name recorded in index metadata.
inline const char* default_tokenizer_name() { return "whitespace"; }

// Windows start at 0, stride, 2*stride, ...; generation stops once a window's
// end reaches the document end, so no window duplicates a suffix of the
// previous one.
std::vector<Passage> window_passages(const std::string& doc_id, std::size_t n_tokens,
                                     const WindowConfig& cfg);

// title + single space + description, used everywhere a query string is needed.
std::string build_query_text(const Topic& topic);

// JSONL, one object per line with fields id / title / text.
std::vector<Document> read_documents_jsonl(const std::filesystem::path& path);

// JSONL with topic_id / title / description. Unknown keys are rejected.
std::vector<Topic> read_topics_jsonl(const std::filesystem::path& path);

} // namespace clir::corpus
