#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace nsar {

/// Minimal UTF-8 walker. Malformed bytes decode as U+FFFD, one byte at a time,
/// so offsets always advance and cover the whole input.
struct Utf8Decoder {
    std::string_view text;
    std::size_t pos = 0;

    bool done() const { return pos >= text.size(); }

    /// Decodes the code point at `pos` and advances past it.
    char32_t next();

    /// Decodes the code point at `at` without moving. Returns its byte length.
    static std::size_t decode(std::string_view text, std::size_t at, char32_t& out);
};

bool is_space_cp(char32_t cp);

/// Trims Unicode whitespace from both ends.
std::string_view trim(std::string_view s);

/// Decimal value of a Unicode digit in the scripts the corpus uses
/// (ASCII, Arabic-Indic, Extended Arabic-Indic, Devanagari), or -1.
int digit_value(char32_t cp);

std::string to_utf8(char32_t cp);

}  // namespace nsar
