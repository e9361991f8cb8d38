#include "nsar/language.hpp"

#include "nsar/errors.hpp"

namespace nsar {

std::string_view to_code(Language lang) {
    switch (lang) {
        case Language::en: return "en";
        case Language::vi: return "vi";
        case Language::sw: return "sw";
        case Language::fa: return "fa";
        case Language::ru: return "ru";
        case Language::hi: return "hi";
        case Language::ar: return "ar";
    }
    throw InvalidArgumentError("unknown language enumerator");
}

Language language_from_code(std::string_view code) {
    for (Language lang : all_languages()) {
        if (to_code(lang) == code) return lang;
    }
    throw InvalidArgumentError("unsupported language code: " + std::string(code));
}

}  // namespace nsar
