#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nsar/language.hpp"

namespace nsar {

inline constexpr int kCityCount = 23;
inline constexpr std::int64_t kNeedleNumberMin = 1000000;
inline constexpr std::int64_t kNeedleNumberMax = 9999999;

/// The standard context-length grid, in words.
constexpr std::array<std::int64_t, 8> standard_context_lengths() {
    return {2000, 8000, 16000, 32000, 64000, 128000, 256000, 512000};
}

/// Per-language needle sentence templates and localized city names.
/// The built-in table ships reasonable renderings for all seven languages;
/// operators can override it from a JSON file to match their own translations.
class NeedleTable {
public:
    static const NeedleTable& builtin();

    /// JSON shape: {"templates": {"en": "...{city}...{number}...", ...},
    ///              "cities": {"en": [23 names], ...}}
    /// Missing languages fall back to the built-in entries.
    static NeedleTable from_json_file(const std::filesystem::path& path);

    const std::string& sentence_template(Language lang) const;
    const std::string& city_name(Language lang, int city_index) const;
    int city_index(std::string_view english_name) const;

    /// Literal template prefix before the first placeholder; used both to
    /// spot needle sentences and to reject filler that could fake one.
    const std::string& marker(Language lang) const;

private:
    std::array<std::string, kLanguageCount> templates_;
    std::array<std::array<std::string, kCityCount>, kLanguageCount> cities_;
    std::array<std::string, kLanguageCount> markers_;

    void rebuild_markers();
    friend NeedleTable make_builtin_table();
};

struct HaystackSpec {
    Language language = Language::en;
    std::int64_t target_words = 2000;
    int needle_count = 3;
    std::uint64_t rng_seed = 0;
};

struct Needle {
    std::string city;        // localized name
    std::int64_t number = 0; // 7 digits
    Language language = Language::en;
    std::string text;        // rendered sentence
};

struct GeneratedContext {
    std::string text;
    std::vector<Needle> needles;
    /// Position of each needle in the generation-time sentence sequence.
    std::vector<int> needle_sentence_indices;
    /// Byte span [begin, end) of each needle sentence within `text`.
    std::vector<std::pair<std::size_t, std::size_t>> needle_char_spans;
    std::int64_t word_count = 0;
    HaystackSpec spec;
};

struct FillerCorpus {
    Language language = Language::en;
    std::vector<std::string> units; // one sentence each
    std::string source_id;
};

/// Renders one needle from the template table.
/// city_index in [0, 23), number a 7-digit integer.
Needle make_needle(int city_index, std::int64_t number, Language lang,
                   const NeedleTable& table = NeedleTable::builtin());

/// Assembles filler sentences up to the word budget, then inserts
/// `spec.needle_count` needles (distinct cities, distinct numbers) at
/// sentence boundaries drawn uniformly from the seeded generator.
/// Deterministic: the same (spec, filler) pair always yields identical bytes.
GeneratedContext build_haystack(const HaystackSpec& spec, const FillerCorpus& filler,
                                const NeedleTable& table = NeedleTable::builtin());

/// Number of maximal non-whitespace runs. All seven supported languages are
/// space-delimited, so the language only matters for future counters.
std::int64_t count_words(std::string_view text, Language lang);

/// Loads a one-sentence-per-line UTF-8 filler file, rejecting blank units and
/// units containing any language's needle marker.
FillerCorpus load_filler_file(const std::filesystem::path& path, Language lang,
                              const NeedleTable& table = NeedleTable::builtin());

/// Same validation for an in-memory unit list.
FillerCorpus make_filler(Language lang, std::vector<std::string> units,
                         std::string source_id,
                         const NeedleTable& table = NeedleTable::builtin());

/// Persists context text and a JSON ground-truth sidecar; returns both paths.
std::pair<std::filesystem::path, std::filesystem::path> save_context(
    const GeneratedContext& ctx, const std::filesystem::path& dir,
    const std::string& stem);

GeneratedContext load_context(const std::filesystem::path& text_path,
                              const std::filesystem::path& sidecar_path);

std::string context_to_sidecar_json(const GeneratedContext& ctx);
GeneratedContext context_from_sidecar_json(const std::string& json_text,
                                           std::string context_text);

}  // namespace nsar
