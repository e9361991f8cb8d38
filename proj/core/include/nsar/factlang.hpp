#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nsar {

/// Value slot of a fact triple. Quoted numeric-looking terms stay strings;
/// numeric literals outside the 64-bit signed range also stay strings (with
/// a diagnostic) rather than being truncated.
using FactValue = std::variant<std::int64_t, double, std::string>;

struct Fact {
    std::string entity;
    std::string attribute;
    FactValue value;

    bool operator==(const Fact&) const = default;
};

struct FactDiagnostic {
    std::size_t line = 0;   // 1-based line in the scanned output
    std::size_t column = 0; // 1-based column of the failure
    std::string message;
};

struct FactSet {
    std::vector<Fact> facts;
    std::vector<std::size_t> source_line_numbers; // aligned with facts
    std::vector<FactDiagnostic> diagnostics;

    bool empty() const { return facts.empty(); }
    std::size_t size() const { return facts.size(); }
};

/// Parses one `FACT(term, term, term)` line. Terms are single- or
/// double-quoted strings (backslash escapes) or decimal numeric literals.
/// Throws ParseError (with column) or ArityError.
Fact parse_fact(std::string_view line);

/// Scans every line of model output — fenced code blocks included — for fact
/// syntax. Lines that start with FACT( but fail to parse become diagnostics,
/// never errors; everything else is skipped silently.
FactSet extract_facts(std::string_view model_output);

/// Normal form: double-quoted strings with escapes, bare numerics, single
/// spaces after commas. parse_fact(canonical_format(f)) == f.
std::string canonical_format(const Fact& fact);

/// JSON array of {entity, attribute, value, line}.
std::string fact_set_to_json(const FactSet& set);
FactSet fact_set_from_json(const std::string& json_text);

}  // namespace nsar
