#include <array>
#include <cctype>
#include <string>

#include "nsar/retrieval.hpp"
#include "nsar/text.hpp"

namespace nsar {

namespace {

bool is_terminal_mark(char32_t cp) {
    switch (cp) {
        case U'.': case U'!': case U'?':
        case 0x061F:  // Arabic question mark
        case 0x0964:  // Devanagari danda
        case 0x0965:  // Devanagari double danda
        case 0x2026:  // horizontal ellipsis
            return true;
        default:
            return false;
    }
}

// Quotes/brackets absorbed into the sentence when they trail its terminal.
bool is_closing_mark(char32_t cp) {
    switch (cp) {
        case U'"': case U'\'': case U')': case U']':
        case 0x2019: case 0x201D: case 0x00BB:
            return true;
        default:
            return false;
    }
}

bool is_ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

bool is_upper_letter(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return true;
    if (cp >= 0x0410 && cp <= 0x042F) return true;  // Cyrillic А-Я
    if (cp == 0x0401) return true;                  // Ё
    return false;
}

bool is_lower_letter(char32_t cp) {
    if (cp >= U'a' && cp <= U'z') return true;
    if (cp >= 0x0430 && cp <= 0x044F) return true;  // Cyrillic а-я
    if (cp == 0x0451) return true;                  // ё
    // Latin-1 Supplement / Latin Extended lowercase used by Vietnamese.
    if (cp >= 0x00DF && cp <= 0x00FF && cp != 0x00F7) return true;
    if (cp >= 0x0100 && cp <= 0x017F) return (cp & 1) == 1;
    if (cp >= 0x1E00 && cp <= 0x1EFF) return (cp & 1) == 1;
    return false;
}

bool is_ascii_letter(char32_t cp) {
    return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
}

// Common abbreviations whose trailing period does not end a sentence.
bool is_known_abbreviation(const std::u32string& token) {
    static const std::array<std::u32string, 18> kList = {
        U"mr",  U"mrs", U"ms",  U"dr",  U"prof", U"sr",  U"jr", U"st", U"vs",
        U"etc", U"fig", U"no",  U"al",  U"inc",  U"ltd", U"co", U"approx",
        U"dept"};
    std::u32string lowered;
    lowered.reserve(token.size());
    for (char32_t cp : token) {
        lowered.push_back(cp < 0x80 ? static_cast<char32_t>(std::tolower(
                                          static_cast<int>(cp)))
                                    : cp);
    }
    for (const auto& abbr : kList) {
        if (lowered == abbr) return true;
    }
    return false;
}

struct CodePoint {
    char32_t cp;
    std::size_t begin;  // byte offset
    std::size_t end;
};

}  // namespace

std::vector<Sentence> segment_sentences(std::string_view text, Language /*lang*/) {
    std::vector<CodePoint> cps;
    cps.reserve(text.size());
    {
        Utf8Decoder dec{text};
        while (!dec.done()) {
            std::size_t begin = dec.pos;
            char32_t cp = dec.next();
            cps.push_back({cp, begin, dec.pos});
        }
    }

    std::vector<Sentence> out;
    std::size_t start = 0;  // index into cps of first cp after last boundary
    auto flush = [&](std::size_t end_cp_exclusive) {
        // Trim whitespace on both sides of the candidate range.
        std::size_t lo = start;
        std::size_t hi = end_cp_exclusive;
        while (lo < hi && is_space_cp(cps[lo].cp)) ++lo;
        while (hi > lo && is_space_cp(cps[hi - 1].cp)) --hi;
        if (lo >= hi) {
            start = end_cp_exclusive;
            return;
        }
        std::size_t byte_begin = cps[lo].begin;
        std::size_t byte_end = cps[hi - 1].end;
        Sentence s;
        s.index = static_cast<int>(out.size());
        s.text.assign(text.substr(byte_begin, byte_end - byte_begin));
        s.span_begin = byte_begin;
        s.span_end = byte_end;
        out.push_back(std::move(s));
        start = end_cp_exclusive;
    };

    const std::size_t n = cps.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_terminal_mark(cps[i].cp)) continue;

        // Collapse a run of terminal marks ("?!", "...") into one candidate.
        std::size_t cluster_end = i;
        while (cluster_end + 1 < n && is_terminal_mark(cps[cluster_end + 1].cp)) {
            ++cluster_end;
        }

        bool boundary = true;
        if (cps[i].cp == U'.' && cluster_end == i) {
            char32_t prev = (i > 0) ? cps[i - 1].cp : U' ';
            char32_t next = (i + 1 < n) ? cps[i + 1].cp : U' ';
            // Decimal point.
            if (is_ascii_digit(prev) && is_ascii_digit(next)) boundary = false;
            if (boundary) {
                // Token immediately before the period.
                std::u32string token;
                std::size_t t = i;
                while (t > 0 && is_ascii_letter(cps[t - 1].cp)) {
                    token.insert(token.begin(), cps[t - 1].cp);
                    --t;
                }
                char32_t before_token = (t > 0) ? cps[t - 1].cp : U' ';
                if (is_known_abbreviation(token)) boundary = false;
                // Initials: "J. Smith", and the inner dots of "U.S.".
                if (token.size() == 1 &&
                    (is_upper_letter(token[0]) || before_token == U'.')) {
                    boundary = false;
                }
            }
            if (boundary) {
                // A following lowercase letter keeps the sentence open.
                std::size_t j = i + 1;
                while (j < n && is_space_cp(cps[j].cp)) ++j;
                if (j < n && j > i + 1 && is_lower_letter(cps[j].cp)) boundary = false;
            }
        }
        if (!boundary) {
            i = cluster_end;
            continue;
        }

        // Absorb trailing closing quotes/brackets.
        std::size_t tail = cluster_end;
        while (tail + 1 < n && is_closing_mark(cps[tail + 1].cp)) ++tail;

        flush(tail + 1);
        i = tail;
    }
    flush(n);
    return out;
}

}  // namespace nsar
