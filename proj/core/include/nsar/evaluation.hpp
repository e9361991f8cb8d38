#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nsar/corpus.hpp"
#include "nsar/factlang.hpp"
#include "nsar/safeexec.hpp"

namespace nsar {

enum class ExtractionMethod {
    code_execution,
    final_answer_marker,
    last_number,
    unanswerable,
};

std::string_view to_string(ExtractionMethod m);
ExtractionMethod extraction_method_from_string(std::string_view s);

struct Judgment {
    std::optional<std::int64_t> predicted;
    std::int64_t expected = 0;
    bool correct = false;
    ExtractionMethod extraction_method = ExtractionMethod::unanswerable;
};

enum class ErrorKind {
    none,
    retrieval_error,
    llm_error,
    fact_error,
    code_error,
};

inline constexpr std::size_t kErrorKindCount = 5;

std::string_view to_string(ErrorKind k);
ErrorKind error_kind_from_string(std::string_view s);

/// Maps Unicode decimal digits to values, strips grouping separators
/// (comma, thin/narrow spaces, Arabic thousands separator) and returns the
/// integer if the remainder is a pure digit run.
std::optional<std::int64_t> normalize_number(std::string_view text);

/// Last normalizable number in free text, if any.
std::optional<std::int64_t> last_number(std::string_view text);

/// Answer extraction. NSAR strategies with a successful execution take the
/// coerced code answer; otherwise a "Final Answer:" marker, then the last
/// number in the text. A literal UNANSWERABLE reply yields no prediction.
std::pair<std::optional<std::int64_t>, ExtractionMethod> extract_predicted(
    std::string_view strategy_id, std::string_view completion_text,
    const exec::ExecOutcome* exec_outcome);

/// expected = max needle number; correct iff predicted == expected.
/// Throws InvalidArgumentError on an empty needle list.
Judgment judge(std::optional<std::int64_t> predicted,
               std::span<const Needle> needles);

/// Everything classification needs, projected out of a trial record.
struct TrialEvidence {
    bool correct = false;
    bool strategy_expects_facts = false;
    std::vector<int> needle_sentence_indices;
    std::vector<int> retrieved_indices;
    std::int64_t expected_number = 0;
    const FactSet* facts = nullptr;              // NSAR strategies only
    const exec::ExecOutcome* exec_outcome = nullptr;
};

/// Precedence: correct -> none; any needle sentence missing from the
/// retrieved set -> retrieval_error; NSAR strategies split fact_error
/// (max needle number absent from extracted fact values) from code_error;
/// everything else -> llm_error.
ErrorKind classify_error(const TrialEvidence& evidence);

struct CellKey {
    std::string strategy;
    std::string language;        // code, or "*" in roll-ups
    std::int64_t context_length; // -1 in roll-ups
    int k;                       // -1 in roll-ups

    auto operator<=>(const CellKey&) const = default;
};

struct CellStats {
    std::int64_t trial_count = 0;
    std::int64_t correct_count = 0;
    std::array<std::int64_t, kErrorKindCount> error_histogram{};

    double accuracy() const {
        return trial_count == 0
                   ? 0.0
                   : static_cast<double>(correct_count) / static_cast<double>(trial_count);
    }
    void add(bool correct, ErrorKind kind);
    void merge(const CellStats& other);
};

/// One cell per (strategy, language, context_length, k) coordinate.
struct AccuracyTable {
    std::map<CellKey, CellStats> cells;

    /// Folds axes away (wildcards "*" / -1); marginals are axis-order
    /// independent because cell stats merge associatively.
    AccuracyTable rollup(bool keep_strategy, bool keep_language,
                         bool keep_length, bool keep_k) const;

    CellStats totals() const;

    std::string to_csv() const;
    std::string to_json() const;
};

/// Minimal trial view used for aggregation (the harness provides adapters
/// from full records).
struct TrialOutcome {
    std::string strategy;
    std::string language;
    std::int64_t context_length = 0;
    int k = 0;
    bool correct = false;
    ErrorKind error = ErrorKind::none;
};

AccuracyTable aggregate(std::span<const TrialOutcome> outcomes);

}  // namespace nsar
