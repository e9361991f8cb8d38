#include "nsar/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "nsar/errors.hpp"

namespace nsar {

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw InvalidArgumentError("cosine_similarity: dimension mismatch (" +
                                   std::to_string(a.dim()) + " vs " +
                                   std::to_string(b.dim()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        double x = a.values[i];
        double y = b.values[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) {
        throw InvalidArgumentError("cosine_similarity: zero-norm vector");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<EmbeddingVector> embed_all(EmbeddingProvider& provider,
                                       std::span<const std::string> texts,
                                       int batch_size, int max_retries) {
    if (batch_size <= 0) batch_size = 64;
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    std::size_t pos = 0;
    while (pos < texts.size()) {
        std::size_t len = std::min<std::size_t>(batch_size, texts.size() - pos);
        std::span<const std::string> batch = texts.subspan(pos, len);
        int attempt = 0;
        std::chrono::milliseconds backoff{100};
        for (;;) {
            try {
                auto vectors = provider.embed(batch);
                if (vectors.size() != batch.size()) {
                    throw ProviderError("provider returned " +
                                            std::to_string(vectors.size()) +
                                            " vectors for " +
                                            std::to_string(batch.size()) + " inputs",
                                        false);
                }
                for (auto& v : vectors) out.push_back(std::move(v));
                break;
            } catch (const ProviderError& err) {
                ++attempt;
                if (!err.transient() || attempt > max_retries) throw;
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
        }
        pos += len;
    }
    return out;
}

std::vector<ScoredIndex> rank_sentences(std::string_view query,
                                        std::span<const Sentence> sentences,
                                        EmbeddingProvider& provider,
                                        const RetrievalConfig& config) {
    if (sentences.empty()) {
        throw InvalidArgumentError("rank_sentences: no sentences");
    }
    std::vector<std::string> inputs;
    inputs.reserve(sentences.size() + 1);
    inputs.push_back(config.query_prefix + std::string(query));
    for (const Sentence& s : sentences) inputs.push_back(s.text);

    auto vectors = embed_all(provider, inputs, config.batch_size, config.max_retries);
    const EmbeddingVector& qv = vectors.front();

    std::vector<ScoredIndex> ranking(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        double score;
        try {
            score = cosine_similarity(qv, vectors[i + 1]);
        } catch (const InvalidArgumentError&) {
            // A degenerate (zero-norm) sentence vector never wins.
            score = -2.0;
        }
        ranking[i] = {sentences[i].index, score};
    }
    std::sort(ranking.begin(), ranking.end(), [](const ScoredIndex& a, const ScoredIndex& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
    });
    return ranking;
}

RetrievalResult take_top_k(const std::vector<ScoredIndex>& ranking,
                           std::span<const Sentence> sentences, int k,
                           bool preserve_document_order, std::string query) {
    if (k < 1) throw InvalidArgumentError("k must be >= 1");
    std::size_t take = std::min<std::size_t>(k, ranking.size());
    std::vector<ScoredIndex> picked(ranking.begin(), ranking.begin() + take);
    if (preserve_document_order) {
        std::sort(picked.begin(), picked.end(),
                  [](const ScoredIndex& a, const ScoredIndex& b) {
                      return a.index < b.index;
                  });
    }

    RetrievalResult result;
    result.query = std::move(query);
    result.selected.reserve(picked.size());
    result.scores.reserve(picked.size());
    for (const ScoredIndex& si : picked) {
        const Sentence* found = nullptr;
        if (si.index >= 0 && static_cast<std::size_t>(si.index) < sentences.size() &&
            sentences[static_cast<std::size_t>(si.index)].index == si.index) {
            found = &sentences[static_cast<std::size_t>(si.index)];
        } else {
            auto it = std::find_if(sentences.begin(), sentences.end(),
                                   [&](const Sentence& s) { return s.index == si.index; });
            if (it != sentences.end()) found = &*it;
        }
        if (found == nullptr) {
            throw InvalidArgumentError("ranking refers to unknown sentence index " +
                                       std::to_string(si.index));
        }
        result.selected.push_back(*found);
        result.scores.push_back(si.score);
    }
    return result;
}

RetrievalResult top_k(std::string_view query, std::span<const Sentence> sentences,
                      EmbeddingProvider& provider, const RetrievalConfig& config) {
    auto ranking = rank_sentences(query, sentences, provider, config);
    return take_top_k(ranking, sentences, config.k, config.preserve_document_order,
                      std::string(query));
}

}  // namespace nsar
