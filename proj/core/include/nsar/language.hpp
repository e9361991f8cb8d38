#pragma once

#include <array>
#include <string>
#include <string_view>

namespace nsar {

/// The seven haystack languages. Queries are always English.
enum class Language { en, vi, sw, fa, ru, hi, ar };

inline constexpr std::size_t kLanguageCount = 7;

constexpr std::array<Language, kLanguageCount> all_languages() {
    return {Language::en, Language::vi, Language::sw, Language::fa,
            Language::ru, Language::hi, Language::ar};
}

std::string_view to_code(Language lang);

/// Parses a two-letter code. Throws InvalidArgumentError for anything else.
Language language_from_code(std::string_view code);

}  // namespace nsar
