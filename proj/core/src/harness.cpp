#include "nsar/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "nsar/assets.hpp"
#include "nsar/digest.hpp"
#include "nsar/errors.hpp"
#include "nsar/safeexec.hpp"

#include "json.hpp"

namespace nsar {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

nlohmann::json model_config_to_json(const ModelConfig& m) {
    return {{"endpoint_url", m.endpoint_url},
            {"model_name", m.model_name},
            {"temperature", m.temperature},
            {"max_output_tokens", m.max_output_tokens},
            {"timeout_ms", m.timeout.count()},
            {"max_retries", m.max_retries},
            {"initial_backoff_ms", m.initial_backoff.count()},
            {"backoff_multiplier", m.backoff_multiplier},
            {"api_key_env", m.api_key_env},
            {"requests_per_minute", m.requests_per_minute}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig m;
    m.endpoint_url = j.value("endpoint_url", std::string{});
    m.model_name = j.value("model_name", std::string{});
    m.temperature = j.value("temperature", 0.0);
    m.max_output_tokens = j.value("max_output_tokens", 1024);
    m.timeout = std::chrono::milliseconds(j.value("timeout_ms", std::int64_t{60000}));
    m.max_retries = j.value("max_retries", 3);
    m.initial_backoff =
        std::chrono::milliseconds(j.value("initial_backoff_ms", std::int64_t{250}));
    m.backoff_multiplier = j.value("backoff_multiplier", 2.0);
    m.api_key_env = j.value("api_key_env", std::string{"NSAR_API_KEY"});
    m.requests_per_minute = j.value("requests_per_minute", 0);
    return m;
}

}  // namespace

std::string ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["strategies"] = strategies;
    std::vector<std::string> langs;
    for (Language l : languages) langs.emplace_back(to_code(l));
    j["languages"] = langs;
    j["context_lengths"] = context_lengths;
    j["k_values"] = k_values;
    j["runs"] = runs;
    j["base_seed"] = base_seed;
    j["model"] = model_config_to_json(model);
    j["provider_id"] = provider_id;
    j["parallelism"] = parallelism;
    j["output_dir"] = output_dir.string();
    j["filler_dir"] = filler_dir.string();
    j["templates_dir"] = templates_dir.string();
    j["save_transcripts"] = save_transcripts;
    j["resume"] = resume;
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    ExperimentConfig c;
    if (j.contains("strategies")) c.strategies = j["strategies"].get<std::vector<std::string>>();
    if (j.contains("languages")) {
        c.languages.clear();
        for (const auto& code : j["languages"]) {
            c.languages.push_back(language_from_code(code.get<std::string>()));
        }
    }
    if (j.contains("context_lengths")) {
        c.context_lengths = j["context_lengths"].get<std::vector<std::int64_t>>();
    }
    if (j.contains("k_values")) c.k_values = j["k_values"].get<std::vector<int>>();
    c.runs = j.value("runs", 2);
    c.base_seed = j.value("base_seed", std::uint64_t{42});
    if (j.contains("model")) c.model = model_config_from_json(j["model"]);
    c.provider_id = j.value("provider_id", std::string{"hash-oracle"});
    c.parallelism = j.value("parallelism", 4);
    c.output_dir = j.value("output_dir", std::string{"out"});
    c.filler_dir = j.value("filler_dir", std::string{});
    c.templates_dir = j.value("templates_dir", std::string{});
    c.save_transcripts = j.value("save_transcripts", false);
    c.resume = j.value("resume", false);
    return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgumentError("cannot open config: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::string TrialRecord::to_json() const {
    nlohmann::json j;
    j["trial_id"] = trial_id;
    j["strategy"] = coords.strategy;
    j["language"] = std::string(to_code(coords.language));
    j["context_length"] = coords.context_length;
    j["k"] = coords.k;
    j["run_index"] = coords.run_index;
    j["context_seed"] = context_seed;

    nlohmann::json needles_json = nlohmann::json::array();
    for (const Needle& n : needles) {
        needles_json.push_back({{"city", n.city},
                                {"number", n.number},
                                {"language", std::string(to_code(n.language))},
                                {"text", n.text}});
    }
    j["needles"] = std::move(needles_json);
    j["needle_sentence_indices"] = needle_sentence_indices;
    j["retrieved_indices"] = retrieved_indices;
    j["retrieved_scores"] = retrieved_scores;
    j["prompt_digest"] = prompt_digest;
    j["prompt_chars"] = prompt_chars;
    if (completion_text.has_value()) j["completion_text"] = *completion_text;
    j["status"] = status;
    if (status_message.has_value()) j["status_message"] = *status_message;
    j["attempt_count"] = attempt_count;
    j["facts"] = nlohmann::json::parse(fact_set_to_json(facts));
    if (exec_outcome.has_value()) {
        j["exec_outcome"] = nlohmann::json::parse(exec::outcome_to_json(*exec_outcome));
    }
    j["judgment"] = {
        {"predicted", judgment.predicted.has_value()
                          ? nlohmann::json(*judgment.predicted)
                          : nlohmann::json(nullptr)},
        {"expected", judgment.expected},
        {"correct", judgment.correct},
        {"extraction_method", std::string(to_string(judgment.extraction_method))}};
    j["error"] = std::string(to_string(error));
    j["timings_ms"] = {{"generation", generation_ms},
                       {"retrieval", retrieval_ms},
                       {"completion", completion_ms},
                       {"total", total_ms}};
    return j.dump();
}

TrialRecord TrialRecord::from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    TrialRecord r;
    r.trial_id = j.at("trial_id").get<std::string>();
    r.coords.strategy = j.at("strategy").get<std::string>();
    r.coords.language = language_from_code(j.at("language").get<std::string>());
    r.coords.context_length = j.at("context_length").get<std::int64_t>();
    r.coords.k = j.at("k").get<int>();
    r.coords.run_index = j.at("run_index").get<int>();
    r.context_seed = j.value("context_seed", std::uint64_t{0});
    for (const auto& n : j.at("needles")) {
        Needle needle;
        needle.city = n.at("city").get<std::string>();
        needle.number = n.at("number").get<std::int64_t>();
        needle.language = language_from_code(n.at("language").get<std::string>());
        needle.text = n.at("text").get<std::string>();
        r.needles.push_back(std::move(needle));
    }
    r.needle_sentence_indices = j.at("needle_sentence_indices").get<std::vector<int>>();
    r.retrieved_indices = j.at("retrieved_indices").get<std::vector<int>>();
    r.retrieved_scores = j.at("retrieved_scores").get<std::vector<double>>();
    r.prompt_digest = j.value("prompt_digest", std::string{});
    r.prompt_chars = j.value("prompt_chars", std::int64_t{0});
    if (j.contains("completion_text")) {
        r.completion_text = j.at("completion_text").get<std::string>();
    }
    r.status = j.value("status", std::string{"ok"});
    if (j.contains("status_message")) {
        r.status_message = j.at("status_message").get<std::string>();
    }
    r.attempt_count = j.value("attempt_count", 0);
    r.facts = fact_set_from_json(j.at("facts").dump());
    if (j.contains("exec_outcome")) {
        r.exec_outcome = exec::outcome_from_json(j.at("exec_outcome").dump());
    }
    const auto& jj = j.at("judgment");
    if (!jj.at("predicted").is_null()) {
        r.judgment.predicted = jj.at("predicted").get<std::int64_t>();
    }
    r.judgment.expected = jj.at("expected").get<std::int64_t>();
    r.judgment.correct = jj.at("correct").get<bool>();
    r.judgment.extraction_method =
        extraction_method_from_string(jj.at("extraction_method").get<std::string>());
    r.error = error_kind_from_string(j.at("error").get<std::string>());
    if (j.contains("timings_ms")) {
        const auto& t = j.at("timings_ms");
        r.generation_ms = t.value("generation", 0.0);
        r.retrieval_ms = t.value("retrieval", 0.0);
        r.completion_ms = t.value("completion", 0.0);
        r.total_ms = t.value("total", 0.0);
    }
    return r;
}

std::shared_ptr<ChatClient> make_demo_client() {
    return std::make_shared<CallbackClient>([](const RenderedPrompt& prompt) {
        std::vector<std::int64_t> numbers;
        for (Language lang : all_languages()) {
            const std::string& marker = NeedleTable::builtin().marker(lang);
            std::size_t pos = 0;
            while ((pos = prompt.text.find(marker, pos)) != std::string::npos) {
                std::size_t from = pos + marker.size();
                std::size_t eol = prompt.text.find('\n', from);
                std::string_view window =
                    std::string_view(prompt.text).substr(from, eol - from);
                if (auto n = last_number(window); n.has_value()) {
                    numbers.push_back(*n);
                }
                pos = from;
            }
        }
        if (numbers.empty()) return std::string("UNANSWERABLE");
        std::sort(numbers.begin(), numbers.end());
        numbers.erase(std::unique(numbers.begin(), numbers.end()), numbers.end());
        std::ostringstream out;
        for (std::size_t i = 0; i < numbers.size(); ++i) {
            out << "FACT(\"needle_" << i << "\", \"special_magic_number\", "
                << numbers[i] << ")\n";
        }
        out << "```python\nnumbers = [";
        for (std::size_t i = 0; i < numbers.size(); ++i) {
            if (i > 0) out << ", ";
            out << numbers[i];
        }
        out << "]\nanswer = max(numbers)\n```\n" << numbers.back() << "\n";
        return out.str();
    });
}

GridEnv make_default_env(const ExperimentConfig& config) {
    GridEnv env;
    RemoteEmbeddingProvider::Options remote;
    remote.endpoint_url = std::getenv("NSAR_EMBED_ENDPOINT") != nullptr
                              ? std::getenv("NSAR_EMBED_ENDPOINT")
                              : "";
    env.provider = make_provider(config.provider_id, std::string(kQuestion), remote);

    if (config.model.endpoint_url == "demo") {
        env.client = make_demo_client();
    } else if (!config.model.endpoint_url.empty()) {
        env.client = std::make_shared<HttpChatClient>(config.model);
    }

    auto templates_dir =
        config.templates_dir.empty() ? default_templates_dir() : config.templates_dir;
    env.registry =
        std::make_shared<const TemplateRegistry>(TemplateRegistry::load_dir(templates_dir));
    env.needle_table = &NeedleTable::builtin();

    auto filler_dir = config.filler_dir.empty() ? default_filler_dir() : config.filler_dir;
    env.filler_source = [filler_dir](Language lang) {
        return load_filler_file(filler_dir / (std::string(to_code(lang)) + ".txt"), lang);
    };
    return env;
}

ContextIndex build_context_index(const GeneratedContext& ctx, const GridEnv& env,
                                 const RetrievalConfig& rcfg) {
    ContextIndex index;
    auto start = Clock::now();
    index.sentences = segment_sentences(ctx.text, ctx.spec.language);
    index.ranking = rank_sentences(kQuestion, index.sentences, *env.provider, rcfg);
    index.retrieval_ms = ms_since(start);

    // Map each needle's char span to the sentence that contains it. A miss
    // (filler that confuses the segmenter) records -1, which downstream
    // classification treats as "not retrieved".
    for (std::size_t ni = 0; ni < ctx.needle_char_spans.size(); ++ni) {
        auto [b, e] = ctx.needle_char_spans[ni];
        int found = -1;
        for (const Sentence& s : index.sentences) {
            if (s.span_begin <= b && e <= s.span_end) {
                found = s.index;
                break;
            }
            if (s.span_begin > b) break;
        }
        index.needle_sentence_indices.push_back(found);
    }
    return index;
}

namespace {

std::string make_trial_id(const TrialCoords& c) {
    std::ostringstream id;
    id << c.strategy << '-' << to_code(c.language) << '-' << c.context_length << "w-k"
       << c.k << "-r" << c.run_index;
    return id.str();
}

}  // namespace

TrialRecord run_trial(const TrialCoords& coords, const GeneratedContext& ctx,
                      const ContextIndex& index, const GridEnv& env,
                      bool save_transcript) {
    auto start = Clock::now();
    TrialRecord record;
    record.coords = coords;
    record.trial_id = make_trial_id(coords);
    record.context_seed = ctx.spec.rng_seed;
    record.needles = ctx.needles;
    record.needle_sentence_indices = index.needle_sentence_indices;
    record.retrieval_ms = index.retrieval_ms;

    RetrievalResult retrieval = take_top_k(index.ranking, index.sentences, coords.k,
                                           /*preserve_document_order=*/true,
                                           std::string(kQuestion));
    for (std::size_t i = 0; i < retrieval.selected.size(); ++i) {
        record.retrieved_indices.push_back(retrieval.selected[i].index);
        record.retrieved_scores.push_back(retrieval.scores[i]);
    }

    const PromptTemplate& tmpl = env.registry->get(coords.strategy);
    std::string joined = join_retrieved(retrieval.selected);
    if (joined.empty()) joined = " ";  // keep render()'s non-empty contract
    RenderedPrompt prompt = env.registry->render(coords.strategy, joined);
    record.prompt_digest = sha256_hex(prompt.text);
    record.prompt_chars = static_cast<std::int64_t>(prompt.text.size());

    std::string completion;
    auto llm_start = Clock::now();
    try {
        if (env.client == nullptr) {
            throw TransportError("no chat client configured", 0);
        }
        CompletionResult result = env.client->complete(prompt);
        completion = result.text;
        record.attempt_count = result.attempt_count;
        record.status = "ok";
    } catch (const RequestError& err) {
        record.status = "request_error";
        record.status_message = err.what();
    } catch (const TransportError& err) {
        record.status = "transport_error";
        record.status_message = err.what();
        record.attempt_count = err.attempts();
    } catch (const ScriptExhaustedError& err) {
        record.status = "transport_error";
        record.status_message = err.what();
    }
    record.completion_ms = ms_since(llm_start);
    if (save_transcript) record.completion_text = completion;

    const exec::ExecOutcome* exec_ptr = nullptr;
    if (tmpl.expects_facts) {
        record.facts = extract_facts(completion);
    }
    if (tmpl.expects_code) {
        std::string code = exec::extract_code_block(completion);
        record.exec_outcome = exec::run_source(code, record.facts);
        exec_ptr = &*record.exec_outcome;
    }

    auto [predicted, method] =
        extract_predicted(coords.strategy, completion, exec_ptr);
    record.judgment = judge(predicted, record.needles);
    record.judgment.extraction_method = method;
    record.error = classify_error(record);
    record.total_ms = ms_since(start);
    return record;
}

TrialRecord run_trial(const TrialCoords& coords, const GeneratedContext& ctx,
                      const GridEnv& env, bool save_transcript) {
    RetrievalConfig rcfg;
    rcfg.k = coords.k;
    ContextIndex index = build_context_index(ctx, env, rcfg);
    return run_trial(coords, ctx, index, env, save_transcript);
}

TrialEvidence evidence_from_record(const TrialRecord& record) {
    TrialEvidence ev;
    ev.correct = record.judgment.correct;
    ev.strategy_expects_facts =
        record.coords.strategy == "nsar" || record.coords.strategy == "nsar_plus3";
    ev.needle_sentence_indices = record.needle_sentence_indices;
    ev.retrieved_indices = record.retrieved_indices;
    ev.expected_number = record.judgment.expected;
    ev.facts = &record.facts;
    ev.exec_outcome = record.exec_outcome.has_value() ? &*record.exec_outcome : nullptr;
    return ev;
}

ErrorKind classify_error(const TrialRecord& record) {
    return classify_error(evidence_from_record(record));
}

TrialOutcome outcome_from_record(const TrialRecord& record) {
    return TrialOutcome{record.coords.strategy,
                        std::string(to_code(record.coords.language)),
                        record.coords.context_length,
                        record.coords.k,
                        record.judgment.correct,
                        record.error};
}

void reclassify_records(std::vector<TrialRecord>& records) {
    for (TrialRecord& r : records) r.error = classify_error(r);
}

std::vector<TrialRecord> load_results(const std::filesystem::path& results_path) {
    std::ifstream in(results_path);
    if (!in) {
        throw InvalidArgumentError("cannot open results: " + results_path.string());
    }
    std::vector<TrialRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(TrialRecord::from_json(line));
    }
    return out;
}

namespace {

GeneratedContext obtain_context(const ExperimentConfig& config, const GridEnv& env,
                                Language lang, std::int64_t length, int run,
                                FillerCorpus& filler, double& generation_ms) {
    std::filesystem::path dir = config.output_dir / "contexts";
    std::ostringstream stem_s;
    stem_s << "ctx_" << to_code(lang) << '_' << length << "w_r" << run;
    std::string stem = stem_s.str();
    std::filesystem::path text_path = dir / (stem + ".txt");
    std::filesystem::path meta_path = dir / (stem + ".json");

    auto start = Clock::now();
    if (std::filesystem::exists(text_path) && std::filesystem::exists(meta_path)) {
        GeneratedContext ctx = load_context(text_path, meta_path);
        generation_ms = ms_since(start);
        return ctx;
    }
    HaystackSpec spec;
    spec.language = lang;
    spec.target_words = length;
    spec.needle_count = 3;
    spec.rng_seed = config.base_seed + static_cast<std::uint64_t>(run);
    const NeedleTable& table =
        env.needle_table != nullptr ? *env.needle_table : NeedleTable::builtin();
    GeneratedContext ctx = build_haystack(spec, filler, table);
    save_context(ctx, dir, stem);
    generation_ms = ms_since(start);
    return ctx;
}

class ResultsWriter {
public:
    ResultsWriter(const std::filesystem::path& path, bool append)
        : out_(path, append ? std::ios::app : std::ios::trunc) {
        if (!out_) throw InvalidArgumentError("cannot open results for writing: " +
                                              path.string());
    }

    void write(const TrialRecord& record) {
        std::string line = record.to_json();
        line.push_back('\n');
        std::lock_guard<std::mutex> lock(mutex_);
        out_ << line;       // one buffered write per record
        out_.flush();
    }

private:
    std::ofstream out_;
    std::mutex mutex_;
};

}  // namespace

std::filesystem::path run_grid(const ExperimentConfig& config, GridEnv& env) {
    if (config.strategies.empty() || config.languages.empty() ||
        config.context_lengths.empty() || config.k_values.empty() || config.runs < 1) {
        throw InvalidArgumentError("experiment config has an empty axis");
    }
    for (const std::string& s : config.strategies) {
        env.registry->get(s);  // fail fast on unknown strategies
    }

    std::filesystem::create_directories(config.output_dir);
    std::filesystem::path results_path = config.output_dir / "results.jsonl";

    std::set<std::string> done;
    if (config.resume && std::filesystem::exists(results_path)) {
        for (const TrialRecord& r : load_results(results_path)) done.insert(r.trial_id);
    }
    ResultsWriter writer(results_path, config.resume);

    std::unique_ptr<std::ofstream> transcripts;
    std::mutex transcripts_mutex;
    if (config.save_transcripts) {
        transcripts = std::make_unique<std::ofstream>(
            config.output_dir / "transcripts.jsonl", std::ios::app);
    }

    std::map<Language, FillerCorpus> filler_cache;
    auto filler_for = [&](Language lang) -> FillerCorpus& {
        auto it = filler_cache.find(lang);
        if (it == filler_cache.end()) {
            it = filler_cache.emplace(lang, env.filler_source(lang)).first;
        }
        return it->second;
    };

    std::vector<std::string> failed;
    std::mutex failed_mutex;
    std::int64_t written = 0;

    for (int run = 0; run < config.runs; ++run) {
        for (Language lang : config.languages) {
            for (std::int64_t length : config.context_lengths) {
                // One context per (language, length, run), shared by every
                // strategy and k below.
                std::vector<TrialCoords> pending;
                for (int k : config.k_values) {
                    for (const std::string& strategy : config.strategies) {
                        TrialCoords coords{strategy, lang, length, k, run};
                        if (done.count(make_trial_id(coords)) == 0) {
                            pending.push_back(std::move(coords));
                        }
                    }
                }
                if (pending.empty()) continue;

                double generation_ms = 0.0;
                GeneratedContext ctx = obtain_context(config, env, lang, length, run,
                                                      filler_for(lang), generation_ms);
                RetrievalConfig rcfg;
                rcfg.provider_id = config.provider_id;
                ContextIndex index = build_context_index(ctx, env, rcfg);

                auto work = [&](const TrialCoords& coords) {
                    try {
                        TrialRecord record = run_trial(coords, ctx, index, env,
                                                       config.save_transcripts);
                        record.generation_ms = generation_ms;
                        if (transcripts) {
                            nlohmann::json t = {
                                {"trial_id", record.trial_id},
                                {"prompt_digest", record.prompt_digest},
                                {"completion",
                                 record.completion_text.value_or(std::string{})}};
                            std::lock_guard<std::mutex> lock(transcripts_mutex);
                            *transcripts << t.dump() << '\n';
                            transcripts->flush();
                        }
                        writer.write(record);
                    } catch (const std::exception& e) {
                        std::lock_guard<std::mutex> lock(failed_mutex);
                        failed.push_back(make_trial_id(coords) + ": " + e.what());
                    }
                };

                int workers = std::max(1, config.parallelism);
                if (workers == 1) {
                    for (const TrialCoords& coords : pending) work(coords);
                } else {
                    std::atomic<std::size_t> next{0};
                    std::vector<std::thread> pool;
                    int n = std::min<int>(workers, static_cast<int>(pending.size()));
                    pool.reserve(static_cast<std::size_t>(n));
                    for (int w = 0; w < n; ++w) {
                        pool.emplace_back([&] {
                            for (;;) {
                                std::size_t i = next.fetch_add(1);
                                if (i >= pending.size()) return;
                                work(pending[i]);
                            }
                        });
                    }
                    for (std::thread& t : pool) t.join();
                }
                written += static_cast<std::int64_t>(pending.size());
            }
        }
    }

    if (!failed.empty()) {
        std::cerr << failed.size() << " trial(s) failed to record:\n";
        for (const std::string& f : failed) std::cerr << "  " << f << '\n';
    }
    return results_path;
}

}  // namespace nsar
