#include "nsar/text.hpp"

namespace nsar {

std::size_t Utf8Decoder::decode(std::string_view text, std::size_t at, char32_t& out) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(text.data());
    unsigned char b0 = bytes[at];
    std::size_t remaining = text.size() - at;

    auto cont = [&](std::size_t i) {
        return i < remaining && (bytes[at + i] & 0xC0) == 0x80;
    };

    if (b0 < 0x80) {
        out = b0;
        return 1;
    }
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        char32_t cp = ((b0 & 0x1Fu) << 6) | (bytes[at + 1] & 0x3Fu);
        if (cp >= 0x80) {
            out = cp;
            return 2;
        }
    } else if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        char32_t cp = ((b0 & 0x0Fu) << 12) | ((bytes[at + 1] & 0x3Fu) << 6) |
                      (bytes[at + 2] & 0x3Fu);
        if (cp >= 0x800 && !(cp >= 0xD800 && cp <= 0xDFFF)) {
            out = cp;
            return 3;
        }
    } else if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        char32_t cp = ((b0 & 0x07u) << 18) | ((bytes[at + 1] & 0x3Fu) << 12) |
                      ((bytes[at + 2] & 0x3Fu) << 6) | (bytes[at + 3] & 0x3Fu);
        if (cp >= 0x10000 && cp <= 0x10FFFF) {
            out = cp;
            return 4;
        }
    }
    out = 0xFFFD;
    return 1;
}

char32_t Utf8Decoder::next() {
    char32_t cp = 0;
    pos += decode(text, pos, cp);
    return cp;
}

bool is_space_cp(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
        case 0x00A0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
        case 0x0085:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

std::string_view trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t last_nonspace_end = 0;
    bool seen = false;
    Utf8Decoder dec{s};
    while (!dec.done()) {
        std::size_t at = dec.pos;
        char32_t cp = dec.next();
        if (!is_space_cp(cp)) {
            if (!seen) {
                begin = at;
                seen = true;
            }
            last_nonspace_end = dec.pos;
        }
    }
    if (!seen) return {};
    return s.substr(begin, last_nonspace_end - begin);
}

int digit_value(char32_t cp) {
    if (cp >= U'0' && cp <= U'9') return static_cast<int>(cp - U'0');
    if (cp >= 0x0660 && cp <= 0x0669) return static_cast<int>(cp - 0x0660); // Arabic-Indic
    if (cp >= 0x06F0 && cp <= 0x06F9) return static_cast<int>(cp - 0x06F0); // Extended Arabic-Indic
    if (cp >= 0x0966 && cp <= 0x096F) return static_cast<int>(cp - 0x0966); // Devanagari
    return -1;
}

std::string to_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

}  // namespace nsar
