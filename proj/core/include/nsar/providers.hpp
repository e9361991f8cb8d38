#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "nsar/retrieval.hpp"

namespace nsar {

/// Deterministic, model-free embeddings: seeded hashes of byte trigrams
/// scattered over the unit sphere.
///
/// Modes:
///   plain       - hashing only; useful for scale and ranking-shape tests.
///   oracle      - the query anchor and any text containing a needle marker
///                 land next to a fixed anchor direction, so needle recall
///                 is perfect by construction.
///   adversarial - needle-like texts are pushed to the anchor's antipode, so
///                 they always lose the ranking; forces retrieval errors.
class HashEmbeddingProvider : public EmbeddingProvider {
public:
    enum class Mode { plain, oracle, adversarial };

    struct Options {
        int dim = 1024;
        std::uint64_t seed = 0;
        Mode mode = Mode::plain;
        /// Text treated as "the query" in oracle/adversarial modes.
        std::string query_anchor;
        /// Substrings that mark a needle sentence; defaults to the built-in
        /// needle table's per-language markers.
        std::vector<std::string> needle_markers;
    };

    explicit HashEmbeddingProvider(Options opts);

    const std::string& identity() const override { return identity_; }
    int dim() const override { return opts_.dim; }
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

private:
    EmbeddingVector embed_one(const std::string& text) const;
    EmbeddingVector hashed(const std::string& text) const;
    bool needle_like(const std::string& text) const;

    Options opts_;
    std::string identity_;
    EmbeddingVector anchor_;
};

/// Remote embedding service speaking the de-facto embeddings wire shape:
/// POST {model, input: [strings]} -> {data: [{index, embedding: [floats]}]}.
class RemoteEmbeddingProvider : public EmbeddingProvider {
public:
    struct Options {
        std::string endpoint_url;   // e.g. http://host:port/v1/embeddings
        std::string model = "bge-m3";
        int dim = 1024;
        std::string api_key;             // literal token, or
        std::string api_key_env = "NSAR_API_KEY"; // read from this env var
        std::chrono::milliseconds timeout{30000};
    };

    explicit RemoteEmbeddingProvider(Options opts);

    const std::string& identity() const override { return identity_; }
    int dim() const override { return opts_.dim; }
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

private:
    Options opts_;
    std::string identity_;
    std::string host_;
    int port_ = 80;
    std::string path_;
};

/// On-disk vector cache keyed by (provider identity, content hash). Wraps
/// another provider; hits skip the inner call entirely.
class CachedEmbeddingProvider : public EmbeddingProvider {
public:
    CachedEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner,
                            std::filesystem::path cache_dir);

    const std::string& identity() const override { return inner_->identity(); }
    int dim() const override { return inner_->dim(); }
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

private:
    std::filesystem::path key_path(const std::string& text) const;
    bool load(const std::filesystem::path& p, EmbeddingVector& out) const;
    void store(const std::filesystem::path& p, const EmbeddingVector& v) const;

    std::shared_ptr<EmbeddingProvider> inner_;
    std::filesystem::path dir_;
    std::mutex io_mutex_;
};

/// Builds a provider from an id like "hash", "hash-oracle",
/// "hash-adversarial" or "remote". Remote options come from `remote`.
std::shared_ptr<EmbeddingProvider> make_provider(
    const std::string& provider_id, const std::string& query_anchor,
    const RemoteEmbeddingProvider::Options& remote = {});

}  // namespace nsar
