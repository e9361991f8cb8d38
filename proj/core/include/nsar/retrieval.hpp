#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nsar/language.hpp"

namespace nsar {

struct Sentence {
    int index = 0;            // 0-based document order
    std::string text;         // trimmed of surrounding whitespace
    std::size_t span_begin = 0; // byte offsets into the source context
    std::size_t span_end = 0;
};

struct EmbeddingVector {
    std::vector<float> values;
    int dim() const { return static_cast<int>(values.size()); }
};

struct RetrievalConfig {
    int k = 3;
    std::string provider_id;
    bool preserve_document_order = true;
    int batch_size = 64;
    int max_retries = 3;
    /// Optional instruction prepended to the query before embedding.
    std::string query_prefix;
};

struct RetrievalResult {
    std::vector<Sentence> selected;
    std::vector<double> scores; // cosine similarity, aligned to selected
    std::string query;
};

/// Embeds batches of texts. Implementations must be safe for concurrent
/// calls and deterministic per (identity, text) within a run.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual const std::string& identity() const = 0;
    virtual int dim() const = 0;
    /// One vector per input, in input order. Throws ProviderError on failure.
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
};

/// Splits text into an ordered, non-overlapping cover of its non-whitespace
/// content. Terminal marks: . ! ? U+061F U+0964 U+2026, with guards for
/// decimals, initials and common abbreviations.
std::vector<Sentence> segment_sentences(std::string_view text, Language lang);

/// dot(a,b) / (|a||b|). Throws InvalidArgumentError on dim mismatch or a
/// zero-norm operand.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct ScoredIndex {
    int index = 0;
    double score = 0.0;
};

/// Full similarity ranking of `sentences` against the query: descending
/// score, ties broken by lower sentence index. Embedding requests go out in
/// batches of config.batch_size with retry-with-backoff on transient
/// provider failures. The grid runner ranks once per context and slices per k.
std::vector<ScoredIndex> rank_sentences(std::string_view query,
                                        std::span<const Sentence> sentences,
                                        EmbeddingProvider& provider,
                                        const RetrievalConfig& config);

/// First min(k, n) entries of a ranking, as a RetrievalResult.
RetrievalResult take_top_k(const std::vector<ScoredIndex>& ranking,
                           std::span<const Sentence> sentences, int k,
                           bool preserve_document_order, std::string query);

/// The k sentences most similar to the query.
RetrievalResult top_k(std::string_view query, std::span<const Sentence> sentences,
                      EmbeddingProvider& provider, const RetrievalConfig& config);

/// Batched embedding with retry/backoff; used by rank_sentences and reusable
/// by callers that cache vectors themselves.
std::vector<EmbeddingVector> embed_all(EmbeddingProvider& provider,
                                       std::span<const std::string> texts,
                                       int batch_size, int max_retries);

}  // namespace nsar
