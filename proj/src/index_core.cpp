#include "clir/index_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "clir/errors.hpp"
#include "clir/rng.hpp"

namespace clir::index {

namespace {

double sq_dist(std::span<const float> a, std::span<const float> b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
        d += diff * diff;
    }
    return d;
}

struct KMeansResult {
    std::vector<float> centroids; // k * dim
    std::vector<std::uint32_t> assign;
};

std::uint32_t nearest(std::span<const float> v, const std::vector<float>& centroids,
                      std::size_t k, std::size_t dim) {
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        double d = sq_dist(v, {centroids.data() + c * dim, dim});
        if (d < best_d) { // strict: ties keep the lowest id
            best_d = d;
            best = static_cast<std::uint32_t>(c);
        }
    }
    return best;
}

KMeansResult run_kmeans(const float* data, std::size_t n, std::size_t dim, std::size_t k,
                        std::uint64_t seed, std::size_t max_iters) {
    auto point = [&](std::size_t i) { return std::span<const float>(data + i * dim, dim); };
    SplitMix64 g(seed);
    KMeansResult r;
    r.centroids.resize(k * dim);

    // k-means++ seeding
    std::size_t first = static_cast<std::size_t>(g.next_below(n));
    std::copy_n(data + first * dim, dim, r.centroids.begin());
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(point(i), point(first));
    for (std::size_t c = 1; c < k; ++c) {
        double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick;
        if (total <= 0.0) {
            pick = static_cast<std::size_t>(g.next_below(n));
        } else {
            double target = g.next_double() * total;
            double cum = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cum += d2[i];
                if (cum >= target) { pick = i; break; }
            }
        }
        std::copy_n(data + pick * dim, dim, r.centroids.begin() + c * dim);
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], sq_dist(point(i), point(pick)));
    }

    r.assign.assign(n, 0);
    std::vector<std::uint32_t> prev(n, std::numeric_limits<std::uint32_t>::max());
    std::vector<double> sums(k * dim);
    std::vector<std::size_t> counts(k);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        for (std::size_t i = 0; i < n; ++i)
            r.assign[i] = nearest(point(i), r.centroids, k, dim);
        if (r.assign == prev) break;
        prev = r.assign;

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t c = r.assign[i];
            counts[c] += 1;
            for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] += data[i * dim + j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t j = 0; j < dim; ++j)
                r.centroids[c * dim + j] = static_cast<float>(sums[c * dim + j] / counts[c]);
        }
        // Empty clusters grab the point farthest from its current centroid.
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                double d = sq_dist(point(i),
                                   {r.centroids.data() + r.assign[i] * dim, dim});
                if (d > far_d) { far_d = d; far = i; }
            }
            std::copy_n(data + far * dim, dim, r.centroids.begin() + c * dim);
            counts[r.assign[far]] -= 1;
            counts[c] = 1;
            r.assign[far] = static_cast<std::uint32_t>(c);
        }
    }
    return r;
}

} // namespace

void QuantizedIndex::rebuild_lookup() {
    passage_ordinal.clear();
    passage_ordinal.reserve(passages.size());
    for (std::size_t i = 0; i < passages.size(); ++i)
        passage_ordinal.emplace(passages[i].passage_id, static_cast<std::uint32_t>(i));
}

Centroids train_centroids(const std::vector<float>& sample, std::size_t n, std::size_t dim,
                          std::size_t k, std::uint64_t seed, std::size_t max_iters) {
    if (k < 1) throw SizeError("k must be >= 1");
    if (n < k) throw SizeError("sample of " + std::to_string(n) + " points cannot train k=" +
                               std::to_string(k) + " centroids");
    if (sample.size() != n * dim) throw DimError("sample size does not match n*dim");
    KMeansResult r = run_kmeans(sample.data(), n, dim, k, seed, max_iters);
    Centroids c;
    c.k = k;
    c.dim = dim;
    c.data = std::move(r.centroids);
    for (float x : c.data)
        if (!std::isfinite(x)) throw SizeError("non-finite centroid");
    return c;
}

Scales compute_scales(const std::vector<float>& residuals, std::size_t n, std::size_t dim) {
    if (n == 0) throw SizeError("cannot fit scales on an empty residual sample");
    if (residuals.size() != n * dim) throw DimError("residual sample size does not match n*dim");
    Scales s;
    s.per_dim.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += std::abs(static_cast<double>(residuals[i * dim + j]));
        s.per_dim[j] = static_cast<float>(acc / n);
    }
    return s;
}

TokenCode quantize(std::span<const float> v, const Centroids& centroids, const Scales& scales) {
    if (v.size() != centroids.dim) throw DimError("vector dim does not match centroids");
    TokenCode code;
    code.centroid_id = nearest(v, centroids.data, centroids.k, centroids.dim);
    code.sign_bits.assign((centroids.dim + 7) / 8, 0);
    std::span<const float> c = centroids.row(code.centroid_id);
    for (std::size_t j = 0; j < centroids.dim; ++j)
        if (v[j] - c[j] >= 0.0f) code.sign_bits[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
    (void)scales;
    return code;
}

std::vector<float> reconstruct(const TokenCode& code, const Centroids& centroids,
                               const Scales& scales) {
    std::vector<float> v(centroids.dim);
    std::span<const float> c = centroids.row(code.centroid_id);
    for (std::size_t j = 0; j < centroids.dim; ++j)
        v[j] = c[j] + (code.bit(j) ? scales.per_dim[j] : -scales.per_dim[j]);
    return v;
}

embed::TokenMatrix pool_tokens(const embed::TokenMatrix& m, std::uint32_t factor,
                               std::uint64_t seed) {
    if (factor < 1) throw ConfigError("pool factor must be >= 1");
    std::size_t n = m.rows();
    if (factor == 1 || n <= 1) return m;
    std::size_t k = (n + factor - 1) / factor;
    KMeansResult r = run_kmeans(m.data.data(), n, m.dim, k, seed, 25);

    // Order clusters by the smallest token ordinal they contain.
    std::vector<std::size_t> first_member(k, n);
    for (std::size_t i = 0; i < n; ++i)
        first_member[r.assign[i]] = std::min(first_member[r.assign[i]], i);
    std::vector<std::uint32_t> order(k);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return first_member[a] < first_member[b]; });

    embed::TokenMatrix out;
    out.passage_id = m.passage_id;
    out.dim = m.dim;
    out.data.reserve(k * m.dim);
    std::vector<double> mean(m.dim);
    for (std::uint32_t c : order) {
        std::fill(mean.begin(), mean.end(), 0.0);
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (r.assign[i] != c) continue;
            ++count;
            for (std::size_t j = 0; j < m.dim; ++j) mean[j] += m.data[i * m.dim + j];
        }
        if (count == 0) { // empty-cluster fallback: its seeded centroid point
            for (std::size_t j = 0; j < m.dim; ++j) mean[j] = r.centroids[c * m.dim + j];
            count = 1;
        }
        double sq = 0.0;
        for (std::size_t j = 0; j < m.dim; ++j) {
            mean[j] /= static_cast<double>(count);
            sq += mean[j] * mean[j];
        }
        double inv = sq > 1e-18 ? 1.0 / std::sqrt(sq) : 0.0;
        for (std::size_t j = 0; j < m.dim; ++j)
            out.data.push_back(static_cast<float>(inv == 0.0 ? mean[j] : mean[j] * inv));
    }
    return out;
}

namespace {

std::size_t default_k(std::size_t total_tokens) {
    double root = std::sqrt(static_cast<double>(total_tokens));
    std::size_t k = 1;
    while (static_cast<double>(k) < root) k <<= 1;
    return k;
}

} // namespace

QuantizedIndex build_index(const std::vector<embed::TokenMatrix>& embeddings,
                           const std::vector<PassageInfo>& passage_table,
                           const IndexMeta& meta_template, const BuildConfig& cfg) {
    if (embeddings.empty()) throw SizeError("cannot build an index from an empty stream");
    std::size_t dim = embeddings.front().dim;
    std::unordered_map<std::string, std::uint32_t> table_pos;
    table_pos.reserve(passage_table.size());
    for (std::size_t i = 0; i < passage_table.size(); ++i)
        table_pos.emplace(passage_table[i].passage_id, static_cast<std::uint32_t>(i));

    QuantizedIndex idx;
    idx.meta = meta_template;
    idx.meta.dim = static_cast<std::uint32_t>(dim);
    idx.meta.pool_factor = cfg.pool_factor;
    idx.meta.seed = cfg.seed;

    // Pool per passage, keeping input order as the passage ordinal order.
    std::vector<embed::TokenMatrix> pooled;
    pooled.reserve(embeddings.size());
    std::size_t total_tokens = 0;
    for (const embed::TokenMatrix& m : embeddings) {
        if (m.dim != dim) throw DimError("mixed dims in embedding stream");
        if (!table_pos.contains(m.passage_id))
            throw SpecError("passage_table does not cover passage \"" + m.passage_id + "\"");
        pooled.push_back(cfg.pool_factor > 1
                             ? pool_tokens(m, cfg.pool_factor, mix64(cfg.seed, fnv1a64(m.passage_id)))
                             : m);
        total_tokens += pooled.back().rows();
    }
    if (total_tokens == 0) throw SizeError("no token vectors to index");

    // Deterministic reservoir sample (algorithm R) over the pooled stream.
    std::size_t cap = std::min(cfg.sample_size, total_tokens);
    std::vector<float> sample;
    sample.reserve(cap * dim);
    {
        SplitMix64 g(mix64(cfg.seed, 0x5a5a5a5aULL));
        std::size_t seen = 0;
        for (const embed::TokenMatrix& m : pooled) {
            for (std::size_t r = 0; r < m.rows(); ++r) {
                if (seen < cap) {
                    sample.insert(sample.end(), m.row(r).begin(), m.row(r).end());
                } else {
                    std::size_t slot = static_cast<std::size_t>(g.next_below(seen + 1));
                    if (slot < cap)
                        std::copy(m.row(r).begin(), m.row(r).end(),
                                  sample.begin() + static_cast<std::ptrdiff_t>(slot * dim));
                }
                ++seen;
            }
        }
    }
    std::size_t sample_n = sample.size() / dim;

    std::size_t k = cfg.k == 0 ? default_k(total_tokens) : cfg.k;
    k = std::min(k, sample_n);
    idx.meta.k = static_cast<std::uint32_t>(k);
    idx.centroids = train_centroids(sample, sample_n, dim, k, cfg.seed, cfg.max_iters);

    // Scales come from the same sample's residuals.
    std::vector<float> residuals(sample.size());
    for (std::size_t i = 0; i < sample_n; ++i) {
        std::span<const float> v(sample.data() + i * dim, dim);
        std::uint32_t c = nearest(v, idx.centroids.data, k, dim);
        std::span<const float> cv = idx.centroids.row(c);
        for (std::size_t j = 0; j < dim; ++j) residuals[i * dim + j] = v[j] - cv[j];
    }
    idx.scales = compute_scales(residuals, sample_n, dim);

    idx.postings.resize(k);
    idx.codes.reserve(total_tokens);
    idx.code_refs.reserve(total_tokens);
    idx.passages.reserve(pooled.size());
    idx.passage_code_span.reserve(pooled.size());
    for (std::size_t p = 0; p < pooled.size(); ++p) {
        const embed::TokenMatrix& m = pooled[p];
        idx.passages.push_back(passage_table[table_pos.at(m.passage_id)]);
        std::uint32_t offset = static_cast<std::uint32_t>(idx.codes.size());
        for (std::size_t r = 0; r < m.rows(); ++r) {
            TokenCode code = quantize(m.row(r), idx.centroids, idx.scales);
            idx.postings[code.centroid_id].push_back(static_cast<std::uint32_t>(idx.codes.size()));
            idx.code_refs.push_back(
                {static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(r)});
            idx.codes.push_back(std::move(code));
        }
        idx.passage_code_span.emplace_back(offset,
                                           static_cast<std::uint32_t>(idx.codes.size()) - offset);
    }
    idx.rebuild_lookup();
    return idx;
}

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw FormatError(std::string("truncated ") + what);
    return value;
}

void write_floats(const std::filesystem::path& p, std::span<const std::uint32_t> header,
                  std::span<const float> values) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + p.string());
    for (std::uint32_t h : header) write_le(out, h);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (!out) throw FormatError("write failed: " + p.string());
}

} // namespace

void save_index(const QuantizedIndex& idx, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    nlohmann::json meta;
    meta["window"] = idx.meta.window.window;
    meta["stride"] = idx.meta.window.stride;
    meta["tokenizer_name"] = idx.meta.tokenizer_name;
    meta["encoder_tag"] = idx.meta.encoder_tag;
    meta["pool_factor"] = idx.meta.pool_factor;
    meta["dim"] = idx.meta.dim;
    meta["k"] = idx.meta.k;
    meta["seed"] = idx.meta.seed;
    std::ofstream mout(dir / "meta.json", std::ios::trunc);
    mout << meta.dump(2) << "\n";

    write_floats(dir / "centroids.bin",
                 std::array<std::uint32_t, 2>{static_cast<std::uint32_t>(idx.centroids.k),
                                              static_cast<std::uint32_t>(idx.centroids.dim)},
                 idx.centroids.data);
    write_floats(dir / "scales.bin",
                 std::array<std::uint32_t, 1>{static_cast<std::uint32_t>(idx.scales.per_dim.size())},
                 idx.scales.per_dim);

    {
        std::ofstream out(dir / "codes.bin", std::ios::binary | std::ios::trunc);
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(idx.codes.size()));
        write_le<std::uint32_t>(out, idx.meta.dim);
        for (std::size_t i = 0; i < idx.codes.size(); ++i) {
            write_le<std::uint32_t>(out, idx.code_refs[i].passage_ordinal);
            write_le<std::uint32_t>(out, idx.code_refs[i].token_ordinal);
            write_le<std::uint32_t>(out, idx.codes[i].centroid_id);
            out.write(reinterpret_cast<const char*>(idx.codes[i].sign_bits.data()),
                      static_cast<std::streamsize>(idx.codes[i].sign_bits.size()));
        }
        if (!out) throw FormatError("write failed: codes.bin");
    }
    {
        std::ofstream out(dir / "postings.bin", std::ios::binary | std::ios::trunc);
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(idx.postings.size()));
        for (const auto& list : idx.postings) {
            write_le<std::uint32_t>(out, static_cast<std::uint32_t>(list.size()));
            for (std::uint32_t ref : list) write_le(out, ref);
        }
        if (!out) throw FormatError("write failed: postings.bin");
    }
    {
        std::ofstream out(dir / "passages.jsonl", std::ios::trunc);
        for (const PassageInfo& p : idx.passages) {
            nlohmann::json j;
            j["passage_id"] = p.passage_id;
            j["doc_id"] = p.doc_id;
            j["start"] = p.start;
            j["length"] = p.length;
            out << j.dump() << "\n";
        }
        if (!out) throw FormatError("write failed: passages.jsonl");
    }
}

QuantizedIndex load_index(const std::filesystem::path& dir) {
    QuantizedIndex idx;
    {
        std::ifstream in(dir / "meta.json");
        if (!in) throw FormatError("missing meta.json in " + dir.string());
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw FormatError("corrupt meta.json");
        idx.meta.window.window = j.at("window").get<std::size_t>();
        idx.meta.window.stride = j.at("stride").get<std::size_t>();
        idx.meta.tokenizer_name = j.at("tokenizer_name").get<std::string>();
        idx.meta.encoder_tag = j.at("encoder_tag").get<std::string>();
        idx.meta.pool_factor = j.at("pool_factor").get<std::uint32_t>();
        idx.meta.dim = j.at("dim").get<std::uint32_t>();
        idx.meta.k = j.at("k").get<std::uint32_t>();
        idx.meta.seed = j.at("seed").get<std::uint64_t>();
    }
    {
        std::ifstream in(dir / "centroids.bin", std::ios::binary);
        if (!in) throw FormatError("missing centroids.bin");
        idx.centroids.k = read_le<std::uint32_t>(in, "centroids.bin");
        idx.centroids.dim = read_le<std::uint32_t>(in, "centroids.bin");
        idx.centroids.data.resize(idx.centroids.k * idx.centroids.dim);
        in.read(reinterpret_cast<char*>(idx.centroids.data.data()),
                static_cast<std::streamsize>(idx.centroids.data.size() * sizeof(float)));
        if (!in) throw FormatError("truncated centroids.bin");
    }
    {
        std::ifstream in(dir / "scales.bin", std::ios::binary);
        if (!in) throw FormatError("missing scales.bin");
        auto n = read_le<std::uint32_t>(in, "scales.bin");
        idx.scales.per_dim.resize(n);
        in.read(reinterpret_cast<char*>(idx.scales.per_dim.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
        if (!in) throw FormatError("truncated scales.bin");
    }
    {
        std::ifstream in(dir / "codes.bin", std::ios::binary);
        if (!in) throw FormatError("missing codes.bin");
        auto count = read_le<std::uint32_t>(in, "codes.bin");
        auto dim = read_le<std::uint32_t>(in, "codes.bin");
        std::size_t nbytes = (dim + 7) / 8;
        idx.codes.resize(count);
        idx.code_refs.resize(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            idx.code_refs[i].passage_ordinal = read_le<std::uint32_t>(in, "codes.bin");
            idx.code_refs[i].token_ordinal = read_le<std::uint32_t>(in, "codes.bin");
            idx.codes[i].centroid_id = read_le<std::uint32_t>(in, "codes.bin");
            idx.codes[i].sign_bits.resize(nbytes);
            in.read(reinterpret_cast<char*>(idx.codes[i].sign_bits.data()),
                    static_cast<std::streamsize>(nbytes));
            if (!in) throw FormatError("truncated codes.bin");
        }
    }
    {
        std::ifstream in(dir / "postings.bin", std::ios::binary);
        if (!in) throw FormatError("missing postings.bin");
        auto k = read_le<std::uint32_t>(in, "postings.bin");
        idx.postings.resize(k);
        for (std::uint32_t c = 0; c < k; ++c) {
            auto len = read_le<std::uint32_t>(in, "postings.bin");
            idx.postings[c].resize(len);
            for (std::uint32_t i = 0; i < len; ++i)
                idx.postings[c][i] = read_le<std::uint32_t>(in, "postings.bin");
        }
    }
    {
        std::ifstream in(dir / "passages.jsonl");
        if (!in) throw FormatError("missing passages.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded()) throw FormatError("corrupt passages.jsonl");
            PassageInfo p;
            p.passage_id = j.at("passage_id").get<std::string>();
            p.doc_id = j.at("doc_id").get<std::string>();
            p.start = j.at("start").get<std::uint32_t>();
            p.length = j.at("length").get<std::uint32_t>();
            idx.passages.push_back(std::move(p));
        }
    }
    // Per-passage code spans: codes are stored passage-major.
    idx.passage_code_span.assign(idx.passages.size(), {0, 0});
    for (std::size_t i = 0; i < idx.codes.size(); ++i) {
        auto& span = idx.passage_code_span[idx.code_refs[i].passage_ordinal];
        if (span.second == 0) span.first = static_cast<std::uint32_t>(i);
        span.second += 1;
    }
    idx.rebuild_lookup();
    return idx;
}

} // namespace clir::index
