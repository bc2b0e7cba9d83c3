#include "clir/embed_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "clir/errors.hpp"
#include "clir/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace clir::embed {

namespace {

constexpr char kMagic[4] = {'L', 'F', 'V', '1'};
constexpr double kNormTolerance = 1e-4;

template <typename T>
void write_le(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw FormatError("truncated embeddings file");
    return value;
}

std::filesystem::path manifest_path(const std::filesystem::path& path) {
    return path.string() + ".json";
}

void validate_norms(const TokenMatrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double sq = 0.0;
        for (float x : m.row(i)) sq += static_cast<double>(x) * x;
        double norm = std::sqrt(sq);
        if (std::abs(norm - 1.0) > kNormTolerance)
            throw NormError("row " + std::to_string(i) + " of passage " + m.passage_id +
                            " has norm " + std::to_string(norm));
    }
}

} // namespace

EmbeddingManifest write_embeddings(const std::vector<TokenMatrix>& matrices,
                                   const std::filesystem::path& path,
                                   const std::string& tokenizer_name,
                                   const std::string& encoder_tag) {
    std::size_t dim = matrices.empty() ? 0 : matrices.front().dim;
    std::unordered_set<std::string> seen;
    for (const TokenMatrix& m : matrices) {
        if (m.dim != dim)
            throw DimError("dimension mismatch: " + std::to_string(m.dim) + " vs " +
                           std::to_string(dim) + " (passage " + m.passage_id + ")");
        if (!seen.insert(m.passage_id).second)
            throw DupError("duplicate passage_id \"" + m.passage_id + "\"");
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out.write(kMagic, 4);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
    for (const TokenMatrix& m : matrices) {
        if (m.passage_id.size() > 0xFFFF)
            throw FormatError("passage_id too long: " + m.passage_id.substr(0, 32));
        write_le<std::uint16_t>(out, static_cast<std::uint16_t>(m.passage_id.size()));
        out.write(m.passage_id.data(), static_cast<std::streamsize>(m.passage_id.size()));
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
        out.write(reinterpret_cast<const char*>(m.data.data()),
                  static_cast<std::streamsize>(m.data.size() * sizeof(float)));
    }
    out.close();
    if (!out) throw FormatError("write failed: " + path.string());

    EmbeddingManifest manifest{dim, matrices.size(), tokenizer_name, encoder_tag};
    nlohmann::json j;
    j["dim"] = manifest.dim;
    j["count"] = manifest.count;
    j["tokenizer_name"] = manifest.tokenizer_name;
    j["encoder_tag"] = manifest.encoder_tag;
    std::ofstream mout(manifest_path(path), std::ios::trunc);
    mout << j.dump(2) << "\n";
    return manifest;
}

EmbeddingManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream min(manifest_path(path));
    if (!min) throw FormatError("missing manifest: " + manifest_path(path).string());
    nlohmann::json j = nlohmann::json::parse(min, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw FormatError("corrupt manifest: " + manifest_path(path).string());
    EmbeddingManifest m;
    m.dim = j.value("dim", std::size_t{0});
    m.count = j.value("count", std::size_t{0});
    m.tokenizer_name = j.value("tokenizer_name", std::string{});
    m.encoder_tag = j.value("encoder_tag", std::string{});
    return m;
}

std::vector<TokenMatrix> read_embeddings(const std::filesystem::path& path) {
    EmbeddingManifest manifest = read_manifest(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("bad magic in " + path.string());
    auto dim = read_le<std::uint32_t>(in);
    if (dim != manifest.dim) throw FormatError("manifest dim does not match data file");

    std::vector<TokenMatrix> out;
    while (true) {
        std::uint16_t id_len;
        in.read(reinterpret_cast<char*>(&id_len), sizeof(id_len));
        if (in.eof()) break;
        if (!in) throw FormatError("truncated embeddings file");
        TokenMatrix m;
        m.passage_id.resize(id_len);
        in.read(m.passage_id.data(), id_len);
        if (!in) throw FormatError("truncated embeddings file");
        auto rows = read_le<std::uint32_t>(in);
        m.dim = dim;
        m.data.resize(static_cast<std::size_t>(rows) * dim);
        in.read(reinterpret_cast<char*>(m.data.data()),
                static_cast<std::streamsize>(m.data.size() * sizeof(float)));
        if (!in) throw FormatError("truncated embeddings file");
        validate_norms(m);
        out.push_back(std::move(m));
    }
    if (out.size() != manifest.count)
        throw FormatError("manifest count " + std::to_string(manifest.count) +
                          " does not match data file (" + std::to_string(out.size()) + ")");
    return out;
}

TokenMatrix synthetic_embed(const std::vector<std::string>& tokens, std::size_t dim,
                            std::uint64_t seed, const std::string& passage_id) {
    if (dim < 2) throw DimError("synthetic_embed requires dim >= 2");
    TokenMatrix m;
    m.passage_id = passage_id;
    m.dim = dim;
    m.data.reserve(tokens.size() * dim);
    std::vector<double> row(dim);
    for (const std::string& tok : tokens) {
        SplitMix64 g(mix64(fnv1a64(tok), seed));
        double sq = 0.0;
        do {
            sq = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                row[j] = 2.0 * g.next_double() - 1.0;
                sq += row[j] * row[j];
            }
        } while (sq < 1e-18); // all-zero draw: take the next counter block
        double inv = 1.0 / std::sqrt(sq);
        for (std::size_t j = 0; j < dim; ++j)
            m.data.push_back(static_cast<float>(row[j] * inv));
    }
    return m;
}

std::string synthetic_encoder_tag(std::size_t dim, std::uint64_t seed) {
    return "synthetic:dim=" + std::to_string(dim) + ":seed=" + std::to_string(seed);
}

bool parse_synthetic_encoder_tag(const std::string& tag, std::size_t& dim, std::uint64_t& seed) {
    const std::string prefix = "synthetic:dim=";
    if (tag.rfind(prefix, 0) != 0) return false;
    std::size_t pos = prefix.size();
    std::size_t sep = tag.find(":seed=", pos);
    if (sep == std::string::npos) return false;
    try {
        dim = std::stoull(tag.substr(pos, sep - pos));
        seed = std::stoull(tag.substr(sep + 6));
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

} // namespace clir::embed
