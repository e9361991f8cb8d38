#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsar/corpus.hpp"
#include "nsar/evaluation.hpp"
#include "nsar/llmclient.hpp"
#include "nsar/prompts.hpp"
#include "nsar/providers.hpp"
#include "nsar/retrieval.hpp"

namespace nsar {

struct ExperimentConfig {
    std::vector<std::string> strategies = {"vanilla", "cot", "react",
                                           "self_reflection", "nsar", "nsar_plus3"};
    std::vector<Language> languages = {Language::en};
    std::vector<std::int64_t> context_lengths = {2000};
    std::vector<int> k_values = {3, 5, 10, 20, 50};
    int runs = 2;
    std::uint64_t base_seed = 42;
    ModelConfig model;
    std::string provider_id = "hash-oracle";
    int parallelism = 4;
    std::filesystem::path output_dir = "out";
    std::filesystem::path filler_dir;    // empty -> shipped assets
    std::filesystem::path templates_dir; // empty -> shipped assets
    bool save_transcripts = false;
    bool resume = false;

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& json_text);
    static ExperimentConfig from_json_file(const std::filesystem::path& path);
};

struct TrialCoords {
    std::string strategy;
    Language language = Language::en;
    std::int64_t context_length = 0;
    int k = 0;
    int run_index = 0;
};

/// Self-contained record of one trial: enough to re-run both error
/// taxonomies without touching any model again.
struct TrialRecord {
    std::string trial_id;
    TrialCoords coords;
    std::uint64_t context_seed = 0;

    std::vector<Needle> needles;
    std::vector<int> needle_sentence_indices; // segmenter numbering

    std::vector<int> retrieved_indices;
    std::vector<double> retrieved_scores;

    std::string prompt_digest;
    std::int64_t prompt_chars = 0;
    std::optional<std::string> completion_text; // stored only when asked

    std::string status = "ok"; // ok | transport_error | request_error
    std::optional<std::string> status_message;
    int attempt_count = 0;

    FactSet facts;
    std::optional<exec::ExecOutcome> exec_outcome;

    Judgment judgment;
    ErrorKind error = ErrorKind::none;

    double generation_ms = 0.0;
    double retrieval_ms = 0.0;
    double completion_ms = 0.0;
    double total_ms = 0.0;

    std::string to_json() const;
    static TrialRecord from_json(const std::string& json_text);
};

/// Pluggable collaborators for a grid run. Tests swap in scripted clients
/// and deterministic providers; the CLI builds one from the config.
struct GridEnv {
    std::shared_ptr<EmbeddingProvider> provider;
    std::shared_ptr<ChatClient> client;
    std::shared_ptr<const TemplateRegistry> registry;
    const NeedleTable* needle_table = nullptr;
    /// Filler corpus per language (loaded once, reused across runs).
    std::function<FillerCorpus(Language)> filler_source;
};

/// Builds the default environment: provider from config.provider_id, HTTP
/// chat client from config.model, registry and filler from the asset dirs.
/// model.endpoint_url == "demo" wires in the offline demo client.
GridEnv make_default_env(const ExperimentConfig& config);

/// Offline stand-in for a model: reads the needle sentences out of the
/// prompt and replies with facts, code and the correct maximum. Lets the
/// whole pipeline run end-to-end without any endpoint.
std::shared_ptr<ChatClient> make_demo_client();

/// Segmentation plus one full similarity ranking of a context; shared by
/// every (strategy, k) trial that consumes the same context.
struct ContextIndex {
    std::vector<Sentence> sentences;
    std::vector<ScoredIndex> ranking;
    std::vector<int> needle_sentence_indices;
    double retrieval_ms = 0.0;
};

ContextIndex build_context_index(const GeneratedContext& ctx, const GridEnv& env,
                                 const RetrievalConfig& rcfg);

/// Runs the full pipeline for one strategy on a prepared context. Transport
/// failures are recorded in the trial, never thrown.
TrialRecord run_trial(const TrialCoords& coords, const GeneratedContext& ctx,
                      const ContextIndex& index, const GridEnv& env,
                      bool save_transcript);

/// Convenience overload that segments and ranks the context itself.
TrialRecord run_trial(const TrialCoords& coords, const GeneratedContext& ctx,
                      const GridEnv& env, bool save_transcript = false);

/// Iterates the full grid x runs, reusing one generated context per
/// (language, length, run) across strategies and k values. Appends records
/// to <output_dir>/results.jsonl; with config.resume, completed trial ids
/// are skipped. Returns the results path.
std::filesystem::path run_grid(const ExperimentConfig& config, GridEnv& env);

std::vector<TrialRecord> load_results(const std::filesystem::path& results_path);

/// Re-runs the error taxonomy over stored records.
void reclassify_records(std::vector<TrialRecord>& records);

TrialEvidence evidence_from_record(const TrialRecord& record);
ErrorKind classify_error(const TrialRecord& record);
TrialOutcome outcome_from_record(const TrialRecord& record);

/// Emits CSV and plot-ready JSON for one grouping into output_dir.
/// Groupings: by-length | by-language | by-k | by-strategy | errors.
/// Unknown groupings throw NotFoundError.
std::vector<std::filesystem::path> report(const std::filesystem::path& results_path,
                                          const std::string& grouping,
                                          const std::filesystem::path& output_dir);

std::vector<std::string> known_groupings();

}  // namespace nsar
