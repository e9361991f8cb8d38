#include "nsar/providers.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nsar/corpus.hpp"
#include "nsar/digest.hpp"
#include "nsar/errors.hpp"

namespace nsar {

namespace {

std::uint64_t fnv1a(std::uint64_t seed, const unsigned char* data, std::size_t len) {
    std::uint64_t h = 1469598103934665603ull ^ seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= data[i];
        h *= 1099511628211ull;
    }
    return h;
}

void normalize(EmbeddingVector& v) {
    double norm = 0.0;
    for (float x : v.values) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        v.values[0] = 1.0f;
        return;
    }
    for (float& x : v.values) x = static_cast<float>(x / norm);
}

std::vector<std::string> default_markers() {
    std::vector<std::string> markers;
    for (Language lang : all_languages()) {
        markers.push_back(NeedleTable::builtin().marker(lang));
    }
    return markers;
}

}  // namespace

HashEmbeddingProvider::HashEmbeddingProvider(Options opts) : opts_(std::move(opts)) {
    if (opts_.dim <= 0) throw InvalidArgumentError("provider dim must be positive");
    if (opts_.needle_markers.empty()) opts_.needle_markers = default_markers();

    const char* mode = opts_.mode == Mode::plain       ? "plain"
                       : opts_.mode == Mode::oracle    ? "oracle"
                                                       : "adversarial";
    std::ostringstream id;
    id << "hash-ngram/v1?dim=" << opts_.dim << "&seed=" << opts_.seed
       << "&mode=" << mode;
    identity_ = id.str();

    // Fixed anchor direction shared by the query and (in oracle mode) every
    // needle-bearing text.
    anchor_ = hashed("\x01nsar-query-anchor\x01");
}

EmbeddingVector HashEmbeddingProvider::hashed(const std::string& text) const {
    EmbeddingVector v;
    v.values.assign(static_cast<std::size_t>(opts_.dim), 0.0f);
    const auto* bytes = reinterpret_cast<const unsigned char*>(text.data());
    const std::size_t n = text.size();
    if (n == 0) {
        v.values[0] = 1.0f;
        return v;
    }
    const std::size_t gram = 3;
    if (n < gram) {
        std::uint64_t h = fnv1a(opts_.seed, bytes, n);
        v.values[h % static_cast<std::uint64_t>(opts_.dim)] = (h >> 63) ? -1.0f : 1.0f;
        normalize(v);
        return v;
    }
    for (std::size_t i = 0; i + gram <= n; ++i) {
        std::uint64_t h = fnv1a(opts_.seed, bytes + i, gram);
        std::size_t bucket = static_cast<std::size_t>(
            (h >> 1) % static_cast<std::uint64_t>(opts_.dim));
        v.values[bucket] += (h & 1) ? 1.0f : -1.0f;
    }
    normalize(v);
    return v;
}

bool HashEmbeddingProvider::needle_like(const std::string& text) const {
    for (const std::string& marker : opts_.needle_markers) {
        if (text.find(marker) != std::string::npos) return true;
    }
    return false;
}

EmbeddingVector HashEmbeddingProvider::embed_one(const std::string& text) const {
    if (opts_.mode == Mode::plain) return hashed(text);

    const bool is_query = !opts_.query_anchor.empty() && text == opts_.query_anchor;
    const bool is_needle = needle_like(text);
    if (!is_query && !is_needle) return hashed(text);

    // Anchor-dominated vector with a small text-specific component so equal
    // roles still embed to distinct points.
    double sign = 1.0;
    if (opts_.mode == Mode::adversarial && is_needle && !is_query) sign = -1.0;
    EmbeddingVector base = hashed(text);
    EmbeddingVector v;
    v.values.resize(base.values.size());
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        v.values[i] = static_cast<float>(sign) * anchor_.values[i] +
                      0.05f * base.values[i];
    }
    normalize(v);
    return v;
}

std::vector<EmbeddingVector> HashEmbeddingProvider::embed(
    std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& text : texts) out.push_back(embed_one(text));
    return out;
}

CachedEmbeddingProvider::CachedEmbeddingProvider(
    std::shared_ptr<EmbeddingProvider> inner, std::filesystem::path cache_dir)
    : inner_(std::move(inner)), dir_(std::move(cache_dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path CachedEmbeddingProvider::key_path(const std::string& text) const {
    std::string key = sha256_hex(inner_->identity() + "\n" + text);
    return dir_ / key.substr(0, 2) / (key + ".f32");
}

bool CachedEmbeddingProvider::load(const std::filesystem::path& p,
                                   EmbeddingVector& out) const {
    std::ifstream in(p, std::ios::binary);
    if (!in) return false;
    in.seekg(0, std::ios::end);
    auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    if (bytes == 0 || bytes % sizeof(float) != 0) return false;
    out.values.resize(bytes / sizeof(float));
    in.read(reinterpret_cast<char*>(out.values.data()),
            static_cast<std::streamsize>(bytes));
    return static_cast<bool>(in);
}

void CachedEmbeddingProvider::store(const std::filesystem::path& p,
                                    const EmbeddingVector& v) const {
    std::filesystem::create_directories(p.parent_path());
    std::filesystem::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out.write(reinterpret_cast<const char*>(v.values.data()),
                  static_cast<std::streamsize>(v.values.size() * sizeof(float)));
    }
    std::filesystem::rename(tmp, p);
}

std::vector<EmbeddingVector> CachedEmbeddingProvider::embed(
    std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::size_t> misses;
    {
        std::lock_guard<std::mutex> lock(io_mutex_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (!load(key_path(texts[i]), out[i])) misses.push_back(i);
        }
    }
    if (!misses.empty()) {
        std::vector<std::string> inputs;
        inputs.reserve(misses.size());
        for (std::size_t i : misses) inputs.push_back(texts[i]);
        auto fresh = inner_->embed(inputs);
        if (fresh.size() != misses.size()) {
            throw ProviderError("inner provider returned wrong batch size", false);
        }
        std::lock_guard<std::mutex> lock(io_mutex_);
        for (std::size_t j = 0; j < misses.size(); ++j) {
            out[misses[j]] = std::move(fresh[j]);
            store(key_path(texts[misses[j]]), out[misses[j]]);
        }
    }
    return out;
}

std::shared_ptr<EmbeddingProvider> make_provider(
    const std::string& provider_id, const std::string& query_anchor,
    const RemoteEmbeddingProvider::Options& remote) {
    HashEmbeddingProvider::Options opts;
    opts.query_anchor = query_anchor;
    if (provider_id == "hash" || provider_id.empty()) {
        opts.mode = HashEmbeddingProvider::Mode::plain;
        return std::make_shared<HashEmbeddingProvider>(std::move(opts));
    }
    if (provider_id == "hash-oracle") {
        opts.mode = HashEmbeddingProvider::Mode::oracle;
        return std::make_shared<HashEmbeddingProvider>(std::move(opts));
    }
    if (provider_id == "hash-adversarial") {
        opts.mode = HashEmbeddingProvider::Mode::adversarial;
        return std::make_shared<HashEmbeddingProvider>(std::move(opts));
    }
    if (provider_id == "remote") {
        return std::make_shared<RemoteEmbeddingProvider>(remote);
    }
    throw NotFoundError("unknown embedding provider id: " + provider_id);
}

}  // namespace nsar
