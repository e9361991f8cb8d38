#include "nsar/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "nsar/errors.hpp"
#include "nsar/text.hpp"

#include "json.hpp"

namespace nsar {

namespace {

bool is_grouping_separator(char32_t cp) {
    switch (cp) {
        case U',':
        case 0x066C:  // Arabic thousands separator
        case 0x2009:  // thin space
        case 0x202F:  // narrow no-break space
        case 0x00A0:  // no-break space
        case U'\'':   // Swiss-style grouping
            return true;
        default:
            return false;
    }
}

constexpr std::string_view kUnanswerable = "UNANSWERABLE";
constexpr std::string_view kFinalAnswerMarker = "Final Answer:";

}  // namespace

std::string_view to_string(ExtractionMethod m) {
    switch (m) {
        case ExtractionMethod::code_execution: return "code_execution";
        case ExtractionMethod::final_answer_marker: return "final_answer_marker";
        case ExtractionMethod::last_number: return "last_number";
        case ExtractionMethod::unanswerable: return "unanswerable";
    }
    return "unknown";
}

ExtractionMethod extraction_method_from_string(std::string_view s) {
    if (s == "code_execution") return ExtractionMethod::code_execution;
    if (s == "final_answer_marker") return ExtractionMethod::final_answer_marker;
    if (s == "last_number") return ExtractionMethod::last_number;
    if (s == "unanswerable") return ExtractionMethod::unanswerable;
    throw InvalidArgumentError("unknown extraction method: " + std::string(s));
}

std::string_view to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::none: return "none";
        case ErrorKind::retrieval_error: return "retrieval_error";
        case ErrorKind::llm_error: return "llm_error";
        case ErrorKind::fact_error: return "fact_error";
        case ErrorKind::code_error: return "code_error";
    }
    return "unknown";
}

ErrorKind error_kind_from_string(std::string_view s) {
    if (s == "none") return ErrorKind::none;
    if (s == "retrieval_error") return ErrorKind::retrieval_error;
    if (s == "llm_error") return ErrorKind::llm_error;
    if (s == "fact_error") return ErrorKind::fact_error;
    if (s == "code_error") return ErrorKind::code_error;
    throw InvalidArgumentError("unknown error kind: " + std::string(s));
}

std::optional<std::int64_t> normalize_number(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    std::int64_t value = 0;
    int digits = 0;
    Utf8Decoder dec{text};
    while (!dec.done()) {
        char32_t cp = dec.next();
        int d = digit_value(cp);
        if (d >= 0) {
            if (value > (std::numeric_limits<std::int64_t>::max() - d) / 10) {
                return std::nullopt;
            }
            value = value * 10 + d;
            ++digits;
            continue;
        }
        if (is_grouping_separator(cp)) continue;
        return std::nullopt;
    }
    if (digits == 0) return std::nullopt;
    return value;
}

std::optional<std::int64_t> last_number(std::string_view text) {
    std::optional<std::int64_t> found;
    std::size_t run_begin = std::string_view::npos;
    bool run_has_digit = false;

    Utf8Decoder dec{text};
    auto close_run = [&](std::size_t end) {
        if (run_begin == std::string_view::npos) return;
        if (run_has_digit) {
            auto candidate = normalize_number(text.substr(run_begin, end - run_begin));
            if (candidate.has_value()) found = candidate;
        }
        run_begin = std::string_view::npos;
        run_has_digit = false;
    };
    while (!dec.done()) {
        std::size_t at = dec.pos;
        char32_t cp = dec.next();
        bool digit = digit_value(cp) >= 0;
        if (digit || (run_begin != std::string_view::npos && is_grouping_separator(cp))) {
            if (run_begin == std::string_view::npos) run_begin = at;
            run_has_digit = run_has_digit || digit;
        } else {
            close_run(at);
        }
    }
    close_run(text.size());
    return found;
}

namespace {

std::optional<std::int64_t> coerce_exec_answer(const exec::Value& answer) {
    if (const auto* i = std::get_if<std::int64_t>(&answer.data)) return *i;
    if (const auto* d = std::get_if<double>(&answer.data)) {
        double r = std::nearbyint(*d);
        if (std::isfinite(r) && std::fabs(*d - r) < 1e-9 && std::fabs(r) < 9.2e18) {
            return static_cast<std::int64_t>(r);
        }
        return std::nullopt;
    }
    if (const auto* s = std::get_if<std::string>(&answer.data)) {
        return normalize_number(*s);
    }
    return std::nullopt;
}

bool strategy_expects_code(std::string_view strategy_id) {
    return strategy_id == "nsar" || strategy_id == "nsar_plus3";
}

}  // namespace

std::pair<std::optional<std::int64_t>, ExtractionMethod> extract_predicted(
    std::string_view strategy_id, std::string_view completion_text,
    const exec::ExecOutcome* exec_outcome) {
    if (strategy_expects_code(strategy_id) && exec_outcome != nullptr &&
        exec_outcome->status == exec::ExecStatus::ok && exec_outcome->answer) {
        return {coerce_exec_answer(*exec_outcome->answer),
                ExtractionMethod::code_execution};
    }

    std::string_view trimmed = trim(completion_text);
    if (trimmed == kUnanswerable) {
        return {std::nullopt, ExtractionMethod::unanswerable};
    }

    std::size_t marker = completion_text.rfind(kFinalAnswerMarker);
    if (marker != std::string_view::npos) {
        std::string_view after = completion_text.substr(marker + kFinalAnswerMarker.size());
        // Only the marker's own line answers.
        std::size_t eol = after.find('\n');
        std::string_view line = eol == std::string_view::npos ? after : after.substr(0, eol);
        if (trim(line).find(kUnanswerable) != std::string_view::npos) {
            return {std::nullopt, ExtractionMethod::unanswerable};
        }
        auto value = last_number(line);
        if (!value.has_value()) value = last_number(after);
        return {value, ExtractionMethod::final_answer_marker};
    }

    if (auto value = last_number(completion_text); value.has_value()) {
        return {value, ExtractionMethod::last_number};
    }
    if (trimmed.find(kUnanswerable) != std::string_view::npos) {
        return {std::nullopt, ExtractionMethod::unanswerable};
    }
    return {std::nullopt, ExtractionMethod::unanswerable};
}

Judgment judge(std::optional<std::int64_t> predicted, std::span<const Needle> needles) {
    if (needles.empty()) {
        throw InvalidArgumentError("judge: needle list must be non-empty");
    }
    Judgment j;
    j.predicted = predicted;
    j.expected = needles[0].number;
    for (const Needle& n : needles) j.expected = std::max(j.expected, n.number);
    j.correct = predicted.has_value() && *predicted == j.expected;
    return j;
}

ErrorKind classify_error(const TrialEvidence& evidence) {
    if (evidence.correct) return ErrorKind::none;

    std::set<int> retrieved(evidence.retrieved_indices.begin(),
                            evidence.retrieved_indices.end());
    for (int needle_index : evidence.needle_sentence_indices) {
        if (retrieved.find(needle_index) == retrieved.end()) {
            return ErrorKind::retrieval_error;
        }
    }

    if (evidence.strategy_expects_facts) {
        bool max_present = false;
        if (evidence.facts != nullptr) {
            for (const Fact& f : evidence.facts->facts) {
                if (const auto* i = std::get_if<std::int64_t>(&f.value)) {
                    if (*i == evidence.expected_number) max_present = true;
                } else if (const auto* s = std::get_if<std::string>(&f.value)) {
                    auto n = normalize_number(*s);
                    if (n.has_value() && *n == evidence.expected_number) {
                        max_present = true;
                    }
                }
            }
        }
        return max_present ? ErrorKind::code_error : ErrorKind::fact_error;
    }
    return ErrorKind::llm_error;
}

void CellStats::add(bool correct, ErrorKind kind) {
    ++trial_count;
    if (correct) ++correct_count;
    error_histogram[static_cast<std::size_t>(kind)] += 1;
}

void CellStats::merge(const CellStats& other) {
    trial_count += other.trial_count;
    correct_count += other.correct_count;
    for (std::size_t i = 0; i < kErrorKindCount; ++i) {
        error_histogram[i] += other.error_histogram[i];
    }
}

AccuracyTable aggregate(std::span<const TrialOutcome> outcomes) {
    AccuracyTable table;
    for (const TrialOutcome& t : outcomes) {
        CellKey key{t.strategy, t.language, t.context_length, t.k};
        table.cells[key].add(t.correct, t.error);
    }
    return table;
}

AccuracyTable AccuracyTable::rollup(bool keep_strategy, bool keep_language,
                                    bool keep_length, bool keep_k) const {
    AccuracyTable out;
    for (const auto& [key, stats] : cells) {
        CellKey reduced{keep_strategy ? key.strategy : "*",
                        keep_language ? key.language : "*",
                        keep_length ? key.context_length : -1, keep_k ? key.k : -1};
        out.cells[reduced].merge(stats);
    }
    return out;
}

CellStats AccuracyTable::totals() const {
    CellStats total;
    for (const auto& [_, stats] : cells) total.merge(stats);
    return total;
}

std::string AccuracyTable::to_csv() const {
    std::ostringstream out;
    out << "strategy,language,context_length,k,trials,correct,accuracy";
    for (std::size_t i = 0; i < kErrorKindCount; ++i) {
        out << ',' << to_string(static_cast<ErrorKind>(i));
    }
    out << '\n';
    for (const auto& [key, stats] : cells) {
        out << key.strategy << ',' << key.language << ',' << key.context_length << ','
            << key.k << ',' << stats.trial_count << ',' << stats.correct_count << ','
            << stats.accuracy();
        for (std::size_t i = 0; i < kErrorKindCount; ++i) {
            out << ',' << stats.error_histogram[i];
        }
        out << '\n';
    }
    return out.str();
}

std::string AccuracyTable::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [key, stats] : cells) {
        nlohmann::json histogram;
        for (std::size_t i = 0; i < kErrorKindCount; ++i) {
            histogram[std::string(to_string(static_cast<ErrorKind>(i)))] =
                stats.error_histogram[i];
        }
        rows.push_back({{"strategy", key.strategy},
                        {"language", key.language},
                        {"context_length", key.context_length},
                        {"k", key.k},
                        {"trials", stats.trial_count},
                        {"correct", stats.correct_count},
                        {"accuracy", stats.accuracy()},
                        {"errors", std::move(histogram)}});
    }
    return nlohmann::json{{"cells", std::move(rows)}}.dump(2);
}

}  // namespace nsar
