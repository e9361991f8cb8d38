#include <fstream>
#include <sstream>

#include "nsar/corpus.hpp"
#include "nsar/errors.hpp"

#include "json.hpp"

namespace nsar {

namespace {

constexpr const char* kTemplates[kLanguageCount] = {
    // en
    "The special magic {city} number is: {number}.",
    // vi
    "Số kỳ diệu đặc biệt của {city} là: {number}.",
    // sw
    "Namba maalum ya kichawi ya {city} ni: {number}.",
    // fa
    "عدد جادویی ویژه {city} برابر است با: {number}.",
    // ru
    "Специальное магическое число {city} равно: {number}.",
    // hi
    "{city} की विशेष जादुई संख्या है: {number}।",
    // ar
    "الرقم السحري الخاص بمدينة {city} هو: {number}.",
};

// City order follows the published list; non-English names are the shipped
// default renderings and can be overridden from JSON.
constexpr const char* kCities[kLanguageCount][kCityCount] = {
    {"Chicago", "Yangon", "Antananarivo", "Colombo", "Almaty", "Sydney",
     "Mexico City", "Seattle", "Lagos", "Amsterdam", "Belgrade", "Cairo",
     "Baghdad", "Damascus", "Kigali", "Dakar", "Sofia", "Victoria", "Tashkent",
     "Mumbai", "Barcelona", "Amman", "Toronto"},
    {"Chicago", "Yangon", "Antananarivo", "Colombo", "Almaty", "Sydney",
     "Thành phố Mexico", "Seattle", "Lagos", "Amsterdam", "Beograd", "Cairo",
     "Baghdad", "Damascus", "Kigali", "Dakar", "Sofia", "Victoria", "Tashkent",
     "Mumbai", "Barcelona", "Amman", "Toronto"},
    {"Chicago", "Yangon", "Antananarivo", "Colombo", "Almaty", "Sydney",
     "Jiji la Meksiko", "Seattle", "Lagos", "Amsterdam", "Belgrade", "Kairo",
     "Baghdad", "Damasko", "Kigali", "Dakar", "Sofia", "Victoria", "Tashkent",
     "Mumbai", "Barcelona", "Amman", "Toronto"},
    {"شیکاگو", "یانگون", "آنتاناناریوو", "کلمبو", "آلماتی", "سیدنی",
     "مکزیکوسیتی", "سیاتل", "لاگوس", "آمستردام", "بلگراد", "قاهره", "بغداد",
     "دمشق", "کیگالی", "داکار", "صوفیه", "ویکتوریا", "تاشکند", "مومبای",
     "بارسلونا", "عمان", "تورنتو"},
    {"Чикаго", "Янгон", "Антананариву", "Коломбо", "Алматы", "Сидней",
     "Мехико", "Сиэтл", "Лагос", "Амстердам", "Белград", "Каир", "Багдад",
     "Дамаск", "Кигали", "Дакар", "София", "Виктория", "Ташкент", "Мумбаи",
     "Барселона", "Амман", "Торонто"},
    {"शिकागो", "यांगून", "अंटानानारिवो", "कोलंबो", "अल्माटी", "सिडनी",
     "मेक्सिको सिटी", "सिएटल", "लागोस", "एम्स्टर्डम", "बेलग्रेड", "काहिरा",
     "बगदाद", "दमिश्क", "किगाली", "डकार", "सोफिया", "विक्टोरिया", "ताशकंद",
     "मुंबई", "बार्सिलोना", "अम्मान", "टोरंटो"},
    {"شيكاغو", "يانغون", "أنتاناناريفو", "كولومبو", "ألماتي", "سيدني",
     "مكسيكو سيتي", "سياتل", "لاغوس", "أمستردام", "بلغراد", "القاهرة", "بغداد",
     "دمشق", "كيغالي", "داكار", "صوفيا", "فيكتوريا", "طشقند", "مومباي",
     "برشلونة", "عمان", "تورونتو"},
};

std::size_t lang_index(Language lang) { return static_cast<std::size_t>(lang); }

/// Longest literal run of the template outside the {city}/{number} slots.
/// This is the needle fingerprint: filler must not contain it, and searching
/// a context for it finds each needle exactly once.
std::string longest_literal_segment(const std::string& tmpl) {
    std::string best;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t open = tmpl.find('{', pos);
        std::size_t seg_end = (open == std::string::npos) ? tmpl.size() : open;
        if (seg_end - pos > best.size()) best = tmpl.substr(pos, seg_end - pos);
        if (open == std::string::npos) break;
        std::size_t close = tmpl.find('}', open);
        if (close == std::string::npos) break;
        pos = close + 1;
    }
    return best;
}

}  // namespace

NeedleTable make_builtin_table() {
    NeedleTable table;
    for (std::size_t li = 0; li < kLanguageCount; ++li) {
        table.templates_[li] = kTemplates[li];
        for (int ci = 0; ci < kCityCount; ++ci) {
            table.cities_[li][ci] = kCities[li][ci];
        }
    }
    table.rebuild_markers();
    return table;
}

const NeedleTable& NeedleTable::builtin() {
    static const NeedleTable table = make_builtin_table();
    return table;
}

void NeedleTable::rebuild_markers() {
    for (std::size_t li = 0; li < kLanguageCount; ++li) {
        markers_[li] = longest_literal_segment(templates_[li]);
        if (markers_[li].empty()) {
            throw InvalidArgumentError(
                "needle template for " +
                std::string(to_code(static_cast<Language>(li))) +
                " has no literal text outside placeholders");
        }
    }
}

NeedleTable NeedleTable::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgumentError("cannot open needle table: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);

    NeedleTable table = builtin();
    if (j.contains("templates")) {
        for (auto& [code, value] : j.at("templates").items()) {
            Language lang = language_from_code(code);
            std::string tmpl = value.get<std::string>();
            if (tmpl.find("{city}") == std::string::npos ||
                tmpl.find("{number}") == std::string::npos) {
                throw InvalidArgumentError("template for " + code +
                                           " must contain {city} and {number}");
            }
            table.templates_[lang_index(lang)] = std::move(tmpl);
        }
    }
    if (j.contains("cities")) {
        for (auto& [code, value] : j.at("cities").items()) {
            Language lang = language_from_code(code);
            if (!value.is_array() || value.size() != kCityCount) {
                throw InvalidArgumentError("cities for " + code + " must list exactly " +
                                           std::to_string(kCityCount) + " names");
            }
            for (int ci = 0; ci < kCityCount; ++ci) {
                table.cities_[lang_index(lang)][ci] = value.at(ci).get<std::string>();
            }
        }
    }
    table.rebuild_markers();
    return table;
}

const std::string& NeedleTable::sentence_template(Language lang) const {
    return templates_[lang_index(lang)];
}

const std::string& NeedleTable::city_name(Language lang, int city_index) const {
    if (city_index < 0 || city_index >= kCityCount) {
        throw InvalidArgumentError("city_index out of range: " +
                                   std::to_string(city_index));
    }
    return cities_[lang_index(lang)][static_cast<std::size_t>(city_index)];
}

int NeedleTable::city_index(std::string_view english_name) const {
    for (int ci = 0; ci < kCityCount; ++ci) {
        if (cities_[lang_index(Language::en)][static_cast<std::size_t>(ci)] ==
            english_name) {
            return ci;
        }
    }
    throw NotFoundError("unknown city: " + std::string(english_name));
}

const std::string& NeedleTable::marker(Language lang) const {
    return markers_[lang_index(lang)];
}

}  // namespace nsar
