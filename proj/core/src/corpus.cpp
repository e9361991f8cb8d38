#include "nsar/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "nsar/errors.hpp"
#include "nsar/random.hpp"
#include "nsar/text.hpp"

#include "json.hpp"

namespace nsar {

namespace {

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

void validate_unit(const std::string& unit, const NeedleTable& table) {
    if (trim(unit).empty()) {
        throw InvalidArgumentError("filler unit is empty");
    }
    for (Language lang : all_languages()) {
        if (unit.find(table.marker(lang)) != std::string::npos) {
            throw InvalidArgumentError(
                "filler unit contains the needle marker for language " +
                std::string(to_code(lang)) + ": " + unit);
        }
    }
}

}  // namespace

Needle make_needle(int city_index, std::int64_t number, Language lang,
                   const NeedleTable& table) {
    if (city_index < 0 || city_index >= kCityCount) {
        throw InvalidArgumentError("city_index out of range: " +
                                   std::to_string(city_index));
    }
    if (number < kNeedleNumberMin || number > kNeedleNumberMax) {
        throw InvalidArgumentError("needle number must have exactly 7 digits, got " +
                                   std::to_string(number));
    }
    Needle needle;
    needle.city = table.city_name(lang, city_index);
    needle.number = number;
    needle.language = lang;
    needle.text = replace_all(table.sentence_template(lang), "{city}", needle.city);
    needle.text = replace_all(needle.text, "{number}", std::to_string(number));
    return needle;
}

std::int64_t count_words(std::string_view text, Language /*lang*/) {
    std::int64_t count = 0;
    bool in_word = false;
    Utf8Decoder dec{text};
    while (!dec.done()) {
        bool space = is_space_cp(dec.next());
        if (!space && !in_word) ++count;
        in_word = !space;
    }
    return count;
}

GeneratedContext build_haystack(const HaystackSpec& spec, const FillerCorpus& filler,
                                const NeedleTable& table) {
    if (spec.target_words <= 0) {
        throw InvalidArgumentError("target_words must be positive");
    }
    if (spec.needle_count < 0 || spec.needle_count > kCityCount) {
        throw InvalidArgumentError("needle_count must be in [0, " +
                                   std::to_string(kCityCount) + "]");
    }
    if (filler.language != spec.language) {
        throw InvalidArgumentError("filler language does not match spec language");
    }
    if (filler.units.empty()) {
        throw CorpusExhaustedError("filler corpus has no units");
    }

    Rng rng(spec.rng_seed);

    // Needles first so the filler budget can account for their words.
    std::vector<Needle> needles;
    {
        std::set<int> cities;
        std::set<std::int64_t> numbers;
        while (static_cast<int>(needles.size()) < spec.needle_count) {
            int city = static_cast<int>(rng.below(kCityCount));
            if (!cities.insert(city).second) continue;
            std::int64_t number;
            do {
                number = static_cast<std::int64_t>(
                    rng.between(kNeedleNumberMin, kNeedleNumberMax));
            } while (!numbers.insert(number).second);
            needles.push_back(make_needle(city, number, spec.language, table));
        }
    }
    std::int64_t needle_words = 0;
    for (const Needle& n : needles) needle_words += count_words(n.text, spec.language);

    // Filler sentences are consumed in shuffled cycles; each pass reshuffles.
    std::vector<std::string> sentences;
    std::vector<std::size_t> order(filler.units.size());
    std::int64_t words = 0;
    const std::int64_t budget = std::max<std::int64_t>(0, spec.target_words - needle_words);
    std::size_t cursor = order.size();
    while (words < budget) {
        if (cursor == order.size()) {
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            rng.shuffle(order);
            cursor = 0;
        }
        const std::string& unit = filler.units[order[cursor++]];
        std::int64_t len = count_words(unit, spec.language);
        if (len == 0) continue;
        // Greedy stop: skip the final sentence when stopping is closer to
        // the budget than overshooting.
        if (words + len > budget && (words + len - budget) > (budget - words)) break;
        sentences.push_back(unit);
        words += len;
    }

    // Insertion slots, uniform over the N+1 sentence gaps. Distinct gaps when
    // there are enough; sorted duplicates otherwise (the final sentence
    // indices stay distinct either way because each insertion shifts the rest).
    std::vector<std::size_t> gaps;
    const std::size_t gap_count = sentences.size() + 1;
    const bool want_distinct = gap_count >= static_cast<std::size_t>(spec.needle_count);
    while (gaps.size() < static_cast<std::size_t>(spec.needle_count)) {
        std::size_t g = static_cast<std::size_t>(rng.below(gap_count));
        if (want_distinct && std::find(gaps.begin(), gaps.end(), g) != gaps.end()) {
            continue;
        }
        gaps.push_back(g);
    }
    std::sort(gaps.begin(), gaps.end());

    GeneratedContext ctx;
    ctx.spec = spec;
    ctx.needles = needles;

    std::string text;
    text.reserve(static_cast<std::size_t>(spec.target_words) * 8);
    std::size_t needle_cursor = 0;
    int sentence_index = 0;
    auto append_sentence = [&](const std::string& s) {
        if (!text.empty()) text.push_back(' ');
        text.append(s);
        ++sentence_index;
    };
    auto append_needle = [&](const Needle& n) {
        if (!text.empty()) text.push_back(' ');
        std::size_t begin = text.size();
        text.append(n.text);
        ctx.needle_sentence_indices.push_back(sentence_index);
        ctx.needle_char_spans.emplace_back(begin, text.size());
        ++sentence_index;
    };
    for (std::size_t i = 0; i <= sentences.size(); ++i) {
        while (needle_cursor < gaps.size() && gaps[needle_cursor] == i) {
            append_needle(needles[needle_cursor]);
            ++needle_cursor;
        }
        if (i < sentences.size()) append_sentence(sentences[i]);
    }

    ctx.text = std::move(text);
    ctx.word_count = count_words(ctx.text, spec.language);
    return ctx;
}

FillerCorpus make_filler(Language lang, std::vector<std::string> units,
                         std::string source_id, const NeedleTable& table) {
    for (const std::string& unit : units) validate_unit(unit, table);
    return FillerCorpus{lang, std::move(units), std::move(source_id)};
}

FillerCorpus load_filler_file(const std::filesystem::path& path, Language lang,
                              const NeedleTable& table) {
    std::ifstream in(path);
    if (!in) throw InvalidArgumentError("cannot open filler file: " + path.string());
    std::vector<std::string> units;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        units.push_back(line);
    }
    return make_filler(lang, std::move(units), path.filename().string(), table);
}

std::string context_to_sidecar_json(const GeneratedContext& ctx) {
    nlohmann::json j;
    j["spec"] = {{"language", std::string(to_code(ctx.spec.language))},
                 {"target_words", ctx.spec.target_words},
                 {"needle_count", ctx.spec.needle_count},
                 {"rng_seed", ctx.spec.rng_seed}};
    j["word_count"] = ctx.word_count;
    j["needle_sentence_indices"] = ctx.needle_sentence_indices;
    nlohmann::json needles = nlohmann::json::array();
    for (const Needle& n : ctx.needles) {
        needles.push_back({{"city", n.city},
                           {"number", n.number},
                           {"language", std::string(to_code(n.language))},
                           {"text", n.text}});
    }
    j["needles"] = std::move(needles);
    nlohmann::json spans = nlohmann::json::array();
    for (auto [b, e] : ctx.needle_char_spans) {
        spans.push_back({{"begin", b}, {"end", e}});
    }
    j["needle_char_spans"] = std::move(spans);
    return j.dump(2);
}

GeneratedContext context_from_sidecar_json(const std::string& json_text,
                                           std::string context_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    GeneratedContext ctx;
    ctx.text = std::move(context_text);
    const auto& spec = j.at("spec");
    ctx.spec.language = language_from_code(spec.at("language").get<std::string>());
    ctx.spec.target_words = spec.at("target_words").get<std::int64_t>();
    ctx.spec.needle_count = spec.at("needle_count").get<int>();
    ctx.spec.rng_seed = spec.at("rng_seed").get<std::uint64_t>();
    ctx.word_count = j.at("word_count").get<std::int64_t>();
    ctx.needle_sentence_indices =
        j.at("needle_sentence_indices").get<std::vector<int>>();
    for (const auto& n : j.at("needles")) {
        Needle needle;
        needle.city = n.at("city").get<std::string>();
        needle.number = n.at("number").get<std::int64_t>();
        needle.language = language_from_code(n.at("language").get<std::string>());
        needle.text = n.at("text").get<std::string>();
        ctx.needles.push_back(std::move(needle));
    }
    for (const auto& s : j.at("needle_char_spans")) {
        ctx.needle_char_spans.emplace_back(s.at("begin").get<std::size_t>(),
                                           s.at("end").get<std::size_t>());
    }
    return ctx;
}

std::pair<std::filesystem::path, std::filesystem::path> save_context(
    const GeneratedContext& ctx, const std::filesystem::path& dir,
    const std::string& stem) {
    std::filesystem::create_directories(dir);
    std::filesystem::path text_path = dir / (stem + ".txt");
    std::filesystem::path meta_path = dir / (stem + ".json");
    {
        std::ofstream out(text_path, std::ios::binary);
        out << ctx.text;
    }
    {
        std::ofstream out(meta_path, std::ios::binary);
        out << context_to_sidecar_json(ctx) << '\n';
    }
    return {text_path, meta_path};
}

GeneratedContext load_context(const std::filesystem::path& text_path,
                              const std::filesystem::path& sidecar_path) {
    std::ifstream tin(text_path, std::ios::binary);
    if (!tin) throw InvalidArgumentError("cannot open context: " + text_path.string());
    std::stringstream tbuf;
    tbuf << tin.rdbuf();

    std::ifstream min(sidecar_path, std::ios::binary);
    if (!min) {
        throw InvalidArgumentError("cannot open sidecar: " + sidecar_path.string());
    }
    std::stringstream mbuf;
    mbuf << min.rdbuf();
    return context_from_sidecar_json(mbuf.str(), tbuf.str());
}

}  // namespace nsar
