#include "clir/corpus.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "clir/errors.hpp"

namespace clir::corpus {

namespace {

bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case U'\t': case U'\n': case U'\v': case U'\f': case U'\r': case U' ':
        case 0x0085: case 0x00A0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Decodes one UTF-8 codepoint at pos; malformed bytes are treated as Latin-1.
char32_t decode_utf8(std::string_view s, std::size_t& pos) {
    unsigned char c = s[pos];
    std::size_t extra = 0;
    char32_t cp = c;
    if (c >= 0xF0) { extra = 3; cp = c & 0x07; }
    else if (c >= 0xE0) { extra = 2; cp = c & 0x0F; }
    else if (c >= 0xC0) { extra = 1; cp = c & 0x1F; }
    if (pos + extra >= s.size() && extra > 0) { pos += 1; return c; }
    for (std::size_t i = 1; i <= extra; ++i) {
        unsigned char cc = s[pos + i];
        if ((cc & 0xC0) != 0x80) { pos += 1; return c; }
        cp = (cp << 6) | (cc & 0x3F);
    }
    pos += extra + 1;
    return cp;
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    std::size_t tok_start = 0;
    bool in_token = false;
    while (pos < text.size()) {
        std::size_t cp_start = pos;
        char32_t cp = decode_utf8(text, pos);
        if (is_unicode_space(cp)) {
            if (in_token) {
                tokens.emplace_back(text.substr(tok_start, cp_start - tok_start));
                in_token = false;
            }
        } else if (!in_token) {
            tok_start = cp_start;
            in_token = true;
        }
    }
    if (in_token) tokens.emplace_back(text.substr(tok_start));
    return tokens;
}

std::vector<Passage> window_passages(const std::string& doc_id, std::size_t n_tokens,
                                     const WindowConfig& cfg) {
    if (!cfg.valid()) throw ConfigError("window config invalid: stride must be in [1, window]");
    std::vector<Passage> out;
    std::size_t ordinal = 0;
    for (std::size_t start = 0; start < n_tokens; start += cfg.stride) {
        std::size_t end = std::min(start + cfg.window, n_tokens);
        out.push_back(Passage{doc_id + "#" + std::to_string(ordinal), doc_id, start, end - start});
        ++ordinal;
        if (end == n_tokens) break; // a later window would only repeat this suffix
    }
    return out;
}

std::string build_query_text(const Topic& topic) {
    return topic.title + " " + topic.description;
}

namespace {

nlohmann::json parse_line(const std::string& line, const std::filesystem::path& path,
                          std::size_t line_no) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON object");
    return j;
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::filesystem::path& path, std::size_t line_no) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) { ok = true; break; }
        if (!ok)
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": unknown field \"" + key + "\"");
    }
}

} // namespace

std::vector<Document> read_documents_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open document file: " + path.string());
    std::vector<Document> docs;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = parse_line(line, path, line_no);
        reject_unknown_keys(j, {"id", "title", "text"}, path, line_no);
        if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": missing or empty \"id\"");
        Document d;
        d.doc_id = j["id"].get<std::string>();
        if (!seen.insert(d.doc_id).second)
            throw DupError(path.string() + ":" + std::to_string(line_no) +
                           ": duplicate doc_id \"" + d.doc_id + "\"");
        if (j.contains("title") && !j["title"].is_null()) d.title = j["title"].get<std::string>();
        if (j.contains("text")) d.body = j["text"].get<std::string>();
        docs.push_back(std::move(d));
    }
    return docs;
}

std::vector<Topic> read_topics_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open topic file: " + path.string());
    std::vector<Topic> topics;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = parse_line(line, path, line_no);
        reject_unknown_keys(j, {"topic_id", "title", "description"}, path, line_no);
        if (!j.contains("topic_id") || !j["topic_id"].is_string() ||
            j["topic_id"].get<std::string>().empty())
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": missing or empty \"topic_id\"");
        Topic t;
        t.topic_id = j["topic_id"].get<std::string>();
        if (j.contains("title")) t.title = j["title"].get<std::string>();
        if (j.contains("description")) t.description = j["description"].get<std::string>();
        topics.push_back(std::move(t));
    }
    return topics;
}

} // namespace clir::corpus
