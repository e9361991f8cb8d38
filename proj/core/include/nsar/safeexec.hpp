#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nsar/factlang.hpp"

namespace nsar::exec {

/// Runtime value of the restricted interpreter. Collections are immutable
/// once built (the subset has no mutating operations), so sharing is safe.
struct Value;
using ValueList = std::vector<Value>;
using ValueDict = std::vector<std::pair<Value, Value>>; // insertion order

struct Value {
    std::variant<std::monostate, bool, std::int64_t, double, std::string,
                 std::shared_ptr<const ValueList>,
                 std::shared_ptr<const ValueDict>>
        data;

    Value() = default;
    Value(bool b) : data(b) {}
    Value(std::int64_t i) : data(i) {}
    Value(int i) : data(static_cast<std::int64_t>(i)) {}
    Value(double d) : data(d) {}
    Value(std::string s) : data(std::move(s)) {}
    Value(const char* s) : data(std::string(s)) {}
    Value(ValueList items)
        : data(std::make_shared<const ValueList>(std::move(items))) {}
    Value(ValueDict items)
        : data(std::make_shared<const ValueDict>(std::move(items))) {}

    bool is_none() const { return std::holds_alternative<std::monostate>(data); }
};

/// Python-style repr; also the comparison form used by the conformance suite.
std::string repr(const Value& v);

/// Structural equality with int/real/bool numeric cross-comparison.
bool value_equal(const Value& a, const Value& b);

struct ExecLimits {
    std::int64_t max_steps = 100000;
    std::int64_t max_collection_len = 100000;
    std::chrono::milliseconds wall_clock_cap{2000};
};

enum class ExecStatus {
    ok,
    parse_error,
    unsupported_construct,
    runtime_error,
    limit_exceeded,
};

std::string_view to_string(ExecStatus s);
ExecStatus exec_status_from_string(std::string_view s);

struct ExecOutcome {
    ExecStatus status = ExecStatus::ok;
    std::optional<Value> answer; // present iff status == ok
    std::int64_t steps_used = 0;
    std::optional<std::string> message;
};

/// Parsed straight-line program. Only whitelisted node kinds exist in the
/// AST, so no reachable execution can express I/O, imports or reflection.
class Program {
public:
    struct Impl;  // AST, internal to the interpreter sources

    std::size_t statement_count() const;
    const std::string& source() const { return source_; }

private:
    std::shared_ptr<const Impl> impl_;
    std::string source_;

    friend Program parse_program(std::string_view source);
    friend ExecOutcome execute(const Program& program, const FactSet& facts,
                               const ExecLimits& limits);
};

/// Contents of the first fenced code block (``` or ```lang). Without fences,
/// the maximal suffix of contiguous lines that parses as statements; empty
/// string if neither exists.
std::string extract_code_block(std::string_view model_output);

/// Statements are `name = expr` or bare `expr`. Expressions cover literals,
/// list/dict displays, names, unary minus, + - * / // %, comparisons,
/// and/or/not, conditional expressions, subscripts, single-name list
/// comprehensions, and calls to the whitelisted builtins
/// {max, min, sum, len, sorted, abs, int, float, str, round}.
/// Throws ParseError or UnsupportedConstructError.
Program parse_program(std::string_view source);

/// Evaluates statements in order in a fresh environment pre-seeded with
/// `facts` = list of [entity, attribute, value] triples. The answer is the
/// final binding of `answer`, else the last bare expression's value.
/// Never throws: failures land in the outcome status.
ExecOutcome execute(const Program& program, const FactSet& facts,
                    const ExecLimits& limits = {});

/// extract -> parse -> execute, folding parse failures into the outcome.
ExecOutcome run_source(std::string_view source, const FactSet& facts,
                       const ExecLimits& limits = {});

/// JSON {status, answer, steps_used, message} for the trial record.
std::string outcome_to_json(const ExecOutcome& outcome);
ExecOutcome outcome_from_json(const std::string& json_text);

}  // namespace nsar::exec
