#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <sstream>

#include "nsar/corpus.hpp"
#include "nsar/errors.hpp"

#include "test_util.hpp"

using namespace nsar;

namespace {

// Second, independent word counter: stream extraction over ASCII whitespace.
// The corpus counter must agree on plain space-separated text.
std::int64_t recount_words(const std::string& text) {
    std::istringstream in(text);
    std::string token;
    std::int64_t n = 0;
    while (in >> token) ++n;
    return n;
}

std::size_t count_substr(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

}  // namespace

TEST_CASE("make_needle renders the published template") {
    const auto& table = NeedleTable::builtin();
    Needle cairo = make_needle(table.city_index("Cairo"), 1234567, Language::en);
    CHECK(cairo.text == "The special magic Cairo number is: 1234567.");
    CHECK(cairo.text.find("The special magic Cairo number is: 1234567") !=
          std::string::npos);
    CHECK(cairo.city == "Cairo");
    CHECK(cairo.number == 1234567);

    Needle mumbai = make_needle(table.city_index("Mumbai"), 9999999, Language::en);
    CHECK(mumbai.text.find("The special magic Mumbai number is: 9999999") !=
          std::string::npos);
}

TEST_CASE("make_needle validates inputs") {
    CHECK_THROWS_AS(make_needle(0, 123456, Language::en), InvalidArgumentError);
    CHECK_THROWS_AS(make_needle(0, 10000000, Language::en), InvalidArgumentError);
    CHECK_THROWS_AS(make_needle(-1, 1234567, Language::en), InvalidArgumentError);
    CHECK_THROWS_AS(make_needle(23, 1234567, Language::en), InvalidArgumentError);
}

TEST_CASE("make_needle is deterministic and localized") {
    for (Language lang : all_languages()) {
        Needle a = make_needle(11, 7654321, lang);
        Needle b = make_needle(11, 7654321, lang);
        CHECK(a.text == b.text);
        CHECK(a.text.find("7654321") != std::string::npos);
        CHECK(a.text.find(a.city) != std::string::npos);
        CHECK(a.text.find(NeedleTable::builtin().marker(lang)) != std::string::npos);
    }
}

TEST_CASE("count_words counts maximal non-whitespace runs") {
    CHECK(count_words("a b  c", Language::en) == 3);
    CHECK(count_words("", Language::en) == 0);
    CHECK(count_words("  \t\n ", Language::en) == 0);
    CHECK(count_words("one", Language::en) == 1);
    CHECK(count_words("привет мир", Language::ru) == 2);
    CHECK(count_words("a b", Language::en) == 2);  // NBSP splits too
}

TEST_CASE("build_haystack hits the word budget within tolerance") {
    auto filler = testutil::shipped_filler(Language::en);
    HaystackSpec spec{Language::en, 2000, 3, 7};
    GeneratedContext ctx = build_haystack(spec, filler);

    CHECK(ctx.needles.size() == 3);
    CHECK(ctx.word_count >= 1960);
    CHECK(ctx.word_count <= 2040);
    CHECK(ctx.word_count == count_words(ctx.text, Language::en));
    // Independent recount agrees within the 2% band.
    std::int64_t recount = recount_words(ctx.text);
    CHECK(recount >= 1960);
    CHECK(recount <= 2040);
}

TEST_CASE("build_haystack is byte-identical under a fixed seed") {
    auto filler = testutil::shipped_filler(Language::en);
    HaystackSpec spec{Language::en, 2000, 3, 42};
    GeneratedContext a = build_haystack(spec, filler);
    GeneratedContext b = build_haystack(spec, filler);
    CHECK(a.text == b.text);
    CHECK(a.needle_sentence_indices == b.needle_sentence_indices);
    CHECK(a.needle_char_spans == b.needle_char_spans);

    HaystackSpec other = spec;
    other.rng_seed = 43;
    CHECK(build_haystack(other, filler).text != a.text);
}

TEST_CASE("build_haystack with needle_count=0 yields a pure filler context") {
    auto filler = testutil::shipped_filler(Language::en);
    HaystackSpec spec{Language::en, 2000, 0, 5};
    GeneratedContext ctx = build_haystack(spec, filler);
    CHECK(ctx.needles.empty());
    CHECK(ctx.needle_sentence_indices.empty());
    CHECK(ctx.text.find(NeedleTable::builtin().marker(Language::en)) ==
          std::string::npos);
}

TEST_CASE("needle ground truth: unique occurrence, distinct cities and numbers") {
    for (Language lang : all_languages()) {
        auto filler = testutil::shipped_filler(lang);
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            HaystackSpec spec{lang, 2000, 3, seed};
            GeneratedContext ctx = build_haystack(spec, filler);

            std::set<std::string> cities;
            std::set<std::int64_t> numbers;
            for (const Needle& n : ctx.needles) {
                cities.insert(n.city);
                numbers.insert(n.number);
                CHECK(count_substr(ctx.text, n.text) == 1);
            }
            CHECK(cities.size() == 3);
            CHECK(numbers.size() == 3);
            // Searching for the per-language marker finds exactly the needles.
            CHECK(count_substr(ctx.text, NeedleTable::builtin().marker(lang)) == 3);

            auto idx = ctx.needle_sentence_indices;
            for (std::size_t i = 1; i < idx.size(); ++i) CHECK(idx[i - 1] < idx[i]);

            for (auto [b, e] : ctx.needle_char_spans) {
                CHECK(b < e);
                CHECK(e <= ctx.text.size());
            }
        }
    }
}

TEST_CASE("build_haystack rejects bad inputs") {
    auto filler = testutil::shipped_filler(Language::en);
    FillerCorpus empty{Language::en, {}, "empty"};
    HaystackSpec spec{Language::en, 2000, 3, 1};
    CHECK_THROWS_AS(build_haystack(spec, empty), CorpusExhaustedError);

    FillerCorpus wrong = filler;
    wrong.language = Language::ru;
    CHECK_THROWS_AS(build_haystack(spec, wrong), InvalidArgumentError);

    HaystackSpec bad_count = spec;
    bad_count.needle_count = 24;  // more than the city list
    CHECK_THROWS_AS(build_haystack(bad_count, filler), InvalidArgumentError);
}

TEST_CASE("filler validation rejects needle-bearing units") {
    std::vector<std::string> units = {"A calm sentence.",
                                      "The special magic Cairo number is: 1234567."};
    CHECK_THROWS_AS(make_filler(Language::en, units, "test"), InvalidArgumentError);
    CHECK_THROWS_AS(make_filler(Language::en, {""}, "test"), InvalidArgumentError);
    CHECK_NOTHROW(make_filler(Language::en, {"A calm sentence."}, "test"));
}

TEST_CASE("context round-trips through the sidecar format") {
    testutil::TempDir tmp;
    auto filler = testutil::shipped_filler(Language::hi);
    HaystackSpec spec{Language::hi, 2000, 3, 11};
    GeneratedContext ctx = build_haystack(spec, filler);

    auto [text_path, meta_path] = save_context(ctx, tmp.path, "sample");
    GeneratedContext loaded = load_context(text_path, meta_path);

    CHECK(loaded.text == ctx.text);
    CHECK(loaded.word_count == ctx.word_count);
    CHECK(loaded.needle_sentence_indices == ctx.needle_sentence_indices);
    CHECK(loaded.needle_char_spans == ctx.needle_char_spans);
    CHECK(loaded.spec.rng_seed == ctx.spec.rng_seed);
    CHECK(loaded.needles.size() == ctx.needles.size());
    for (std::size_t i = 0; i < ctx.needles.size(); ++i) {
        CHECK(loaded.needles[i].text == ctx.needles[i].text);
        CHECK(loaded.needles[i].number == ctx.needles[i].number);
    }
}

TEST_CASE("needle table can be overridden from JSON") {
    testutil::TempDir tmp;
    auto path = tmp.path / "needles.json";
    {
        std::ofstream out(path);
        out << R"({"templates": {"en": "Hidden token for {city} reads {number} here."}})";
    }
    NeedleTable table = NeedleTable::from_json_file(path);
    Needle n = make_needle(0, 1234567, Language::en, table);
    CHECK(n.text == "Hidden token for Chicago reads 1234567 here.");
    // Other languages keep the built-in rendering.
    CHECK(table.sentence_template(Language::ru) ==
          NeedleTable::builtin().sentence_template(Language::ru));
}

TEST_CASE("standard grid lengths are the published ones") {
    auto grid = standard_context_lengths();
    CHECK(grid.front() == 2000);
    CHECK(grid.back() == 512000);
    CHECK(grid.size() == 8);
}
