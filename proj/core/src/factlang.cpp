#include "nsar/factlang.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "nsar/errors.hpp"

#include "json.hpp"

namespace nsar {

namespace {

// Single-line scanner for `FACT ( term , term , term )`.
struct FactScanner {
    std::string_view line;
    std::size_t pos = 0;
    std::size_t line_no = 1;
    std::vector<FactDiagnostic>* notes = nullptr;

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(message, line_no, pos + 1);
    }

    void skip_ws() {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    }

    bool eat(char c) {
        if (pos < line.size() && line[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void note(const std::string& message) {
        if (notes != nullptr) notes->push_back({line_no, pos + 1, message});
    }

    std::string quoted(char quote) {
        ++pos;  // opening quote
        std::string out;
        while (pos < line.size()) {
            char c = line[pos];
            if (c == quote) {
                ++pos;
                return out;
            }
            if (c == '\\') {
                ++pos;
                if (pos >= line.size()) fail("dangling escape");
                char esc = line[pos];
                switch (esc) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case 'r': out.push_back('\r'); break;
                    default: out.push_back(esc); break;  // \" \' \\ pass through
                }
                ++pos;
                continue;
            }
            out.push_back(c);
            ++pos;
        }
        fail("unterminated string");
    }

    FactValue numeric() {
        std::size_t begin = pos;
        if (pos < line.size() && (line[pos] == '+' || line[pos] == '-')) ++pos;
        std::size_t digits_begin = pos;
        while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) {
            ++pos;
        }
        bool fractional = false;
        if (pos < line.size() && line[pos] == '.') {
            fractional = true;
            ++pos;
            while (pos < line.size() &&
                   std::isdigit(static_cast<unsigned char>(line[pos]))) {
                ++pos;
            }
        }
        if (pos == digits_begin || (fractional && pos == digits_begin + 1)) {
            pos = begin;
            fail("expected a quoted string or numeric literal");
        }
        std::string_view lexeme = line.substr(begin, pos - begin);
        if (!fractional) {
            std::int64_t value = 0;
            auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(),
                                             value);
            if (ec == std::errc{} && ptr == lexeme.data() + lexeme.size()) {
                return value;
            }
            // Out of 64-bit range: keep the digits, never truncate.
            note("integer literal out of 64-bit range kept as string: " +
                 std::string(lexeme));
            return std::string(lexeme);
        }
        double value = std::strtod(std::string(lexeme).c_str(), nullptr);
        if (!std::isfinite(value)) {
            note("real literal out of range kept as string: " + std::string(lexeme));
            return std::string(lexeme);
        }
        return value;
    }

    FactValue term() {
        skip_ws();
        if (pos >= line.size()) fail("expected a term");
        char c = line[pos];
        if (c == '"' || c == '\'') return quoted(c);
        return numeric();
    }

    Fact parse() {
        skip_ws();
        if (line.compare(pos, 4, "FACT") != 0) fail("expected FACT");
        pos += 4;
        skip_ws();
        if (!eat('(')) fail("expected '('");

        std::vector<FactValue> terms;
        skip_ws();
        if (!eat(')')) {
            for (;;) {
                terms.push_back(term());
                skip_ws();
                if (eat(',')) continue;
                if (eat(')')) break;
                fail("expected ',' or ')'");
            }
        }
        skip_ws();
        if (pos != line.size()) fail("unexpected trailing characters");

        if (terms.size() != 3) {
            throw ArityError("FACT takes exactly 3 terms, got " +
                                 std::to_string(terms.size()),
                             line_no, pos, terms.size());
        }
        // Numeric entities/attributes are legal per the term grammar; they
        // are stored as their decimal rendering.
        auto as_text = [&](const FactValue& v) -> std::string {
            if (const auto* s = std::get_if<std::string>(&v)) return *s;
            if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
            std::ostringstream out;
            out << std::get<double>(v);
            return out.str();
        };
        Fact fact;
        fact.entity = as_text(terms[0]);
        fact.attribute = as_text(terms[1]);
        if (fact.entity.empty()) fail("entity must be non-empty");
        if (fact.attribute.empty()) fail("attribute must be non-empty");
        fact.value = std::move(terms[2]);
        return fact;
    }
};

bool looks_like_fact_line(std::string_view line, std::size_t& start) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (line.compare(i, 4, "FACT") != 0) return false;
    std::size_t j = i + 4;
    while (j < line.size() && (line[j] == ' ' || line[j] == '\t')) ++j;
    if (j >= line.size() || line[j] != '(') return false;
    start = i;
    return true;
}

}  // namespace

Fact parse_fact(std::string_view line) {
    FactScanner scanner{line};
    return scanner.parse();
}

FactSet extract_facts(std::string_view model_output) {
    FactSet set;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= model_output.size()) {
        std::size_t eol = model_output.find('\n', pos);
        std::string_view line = model_output.substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;

        std::size_t start = 0;
        if (looks_like_fact_line(line, start)) {
            FactScanner scanner{line, 0, line_no, &set.diagnostics};
            try {
                Fact fact = scanner.parse();
                set.facts.push_back(std::move(fact));
                set.source_line_numbers.push_back(line_no);
            } catch (const ParseError& err) {
                set.diagnostics.push_back({line_no, err.column(), err.what()});
            }
        }

        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return set;
}

std::string canonical_format(const Fact& fact) {
    auto quote = [](const std::string& s) {
        std::string out = "\"";
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default: out.push_back(c);
            }
        }
        out.push_back('"');
        return out;
    };
    auto format_value = [&](const FactValue& v) -> std::string {
        if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
        if (const auto* d = std::get_if<double>(&v)) {
            char buf[64];
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), *d);
            std::string s(buf, ptr);
            // Keep a fractional marker so the literal parses back as real.
            if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
                s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
                s += ".0";
            }
            return s;
        }
        return quote(std::get<std::string>(v));
    };
    return "FACT(" + quote(fact.entity) + ", " + quote(fact.attribute) + ", " +
           format_value(fact.value) + ")";
}

namespace {

nlohmann::json value_to_json(const FactValue& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    if (const auto* d = std::get_if<double>(&v)) return *d;
    return std::get<std::string>(v);
}

FactValue value_from_json(const nlohmann::json& j) {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    return j.get<std::string>();
}

}  // namespace

std::string fact_set_to_json(const FactSet& set) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < set.facts.size(); ++i) {
        arr.push_back({{"entity", set.facts[i].entity},
                       {"attribute", set.facts[i].attribute},
                       {"value", value_to_json(set.facts[i].value)},
                       {"line", set.source_line_numbers[i]}});
    }
    return arr.dump();
}

FactSet fact_set_from_json(const std::string& json_text) {
    FactSet set;
    nlohmann::json arr = nlohmann::json::parse(json_text);
    for (const auto& item : arr) {
        Fact fact;
        fact.entity = item.at("entity").get<std::string>();
        fact.attribute = item.at("attribute").get<std::string>();
        fact.value = value_from_json(item.at("value"));
        set.facts.push_back(std::move(fact));
        set.source_line_numbers.push_back(item.at("line").get<std::size_t>());
    }
    return set;
}

}  // namespace nsar
