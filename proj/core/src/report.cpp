#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "nsar/errors.hpp"
#include "nsar/harness.hpp"

#include "json.hpp"

namespace nsar {

namespace {

struct GroupingSpec {
    bool by_language = false;
    bool by_length = false;
    bool by_k = false;
};

// Wide pivot: one row per axis value, one accuracy column per strategy.
struct Pivot {
    std::string axis_name;
    std::vector<std::string> axis_values;
    std::vector<std::string> strategies;
    // accuracy[axis][strategy], -1 marks an absent cell
    std::map<std::string, std::map<std::string, double>> accuracy;
};

std::string axis_value_of(const CellKey& key, const GroupingSpec& g) {
    if (g.by_language) return key.language;
    if (g.by_length) return std::to_string(key.context_length);
    return std::to_string(key.k);
}

Pivot pivot_table(const AccuracyTable& table, const std::string& axis_name,
                  const GroupingSpec& g) {
    Pivot p;
    p.axis_name = axis_name;
    std::set<std::string> strategies;
    std::set<std::pair<std::int64_t, std::string>> ordered_axis;  // numeric-sortable
    for (const auto& [key, stats] : table.cells) {
        strategies.insert(key.strategy);
        std::string axis = axis_value_of(key, g);
        std::int64_t sort_key = 0;
        if (g.by_length) sort_key = key.context_length;
        else if (g.by_k) sort_key = key.k;
        ordered_axis.insert({sort_key, axis});
        p.accuracy[axis][key.strategy] = stats.accuracy();
    }
    p.strategies.assign(strategies.begin(), strategies.end());
    for (const auto& [_, axis] : ordered_axis) p.axis_values.push_back(axis);
    return p;
}

std::string pivot_csv(const Pivot& p) {
    std::ostringstream out;
    out << p.axis_name;
    for (const std::string& s : p.strategies) out << ',' << s;
    out << '\n';
    for (const std::string& axis : p.axis_values) {
        out << axis;
        for (const std::string& s : p.strategies) {
            out << ',';
            auto row = p.accuracy.find(axis);
            auto cell = row->second.find(s);
            if (cell != row->second.end()) out << cell->second;
        }
        out << '\n';
    }
    return out.str();
}

std::string pivot_json(const Pivot& p, const std::string& grouping) {
    nlohmann::json rows = nlohmann::json::array();
    for (const std::string& axis : p.axis_values) {
        nlohmann::json cells;
        for (const auto& [strategy, acc] : p.accuracy.at(axis)) cells[strategy] = acc;
        rows.push_back({{p.axis_name, axis}, {"accuracy", std::move(cells)}});
    }
    return nlohmann::json{{"grouping", grouping}, {"rows", std::move(rows)}}.dump(2);
}

// Per-strategy failure rates as % of total queries, the error-histogram view.
std::string errors_csv(const AccuracyTable& by_strategy) {
    std::ostringstream out;
    out << "strategy,trials,accuracy";
    for (std::size_t i = 1; i < kErrorKindCount; ++i) {
        out << ',' << to_string(static_cast<ErrorKind>(i)) << "_rate";
    }
    out << '\n';
    for (const auto& [key, stats] : by_strategy.cells) {
        out << key.strategy << ',' << stats.trial_count << ',' << stats.accuracy();
        for (std::size_t i = 1; i < kErrorKindCount; ++i) {
            double rate = stats.trial_count == 0
                              ? 0.0
                              : static_cast<double>(stats.error_histogram[i]) /
                                    static_cast<double>(stats.trial_count);
            out << ',' << rate;
        }
        out << '\n';
    }
    return out.str();
}

std::string errors_json(const AccuracyTable& by_strategy) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [key, stats] : by_strategy.cells) {
        nlohmann::json rates;
        for (std::size_t i = 1; i < kErrorKindCount; ++i) {
            double rate = stats.trial_count == 0
                              ? 0.0
                              : static_cast<double>(stats.error_histogram[i]) /
                                    static_cast<double>(stats.trial_count);
            rates[std::string(to_string(static_cast<ErrorKind>(i)))] = rate;
        }
        rows.push_back({{"strategy", key.strategy},
                        {"trials", stats.trial_count},
                        {"accuracy", stats.accuracy()},
                        {"failure_rates", std::move(rates)}});
    }
    return nlohmann::json{{"grouping", "errors"}, {"rows", std::move(rows)}}.dump(2);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgumentError("cannot write report: " + path.string());
    out << content;
}

}  // namespace

std::vector<std::string> known_groupings() {
    return {"by-length", "by-language", "by-k", "by-strategy", "errors"};
}

std::vector<std::filesystem::path> report(const std::filesystem::path& results_path,
                                          const std::string& grouping,
                                          const std::filesystem::path& output_dir) {
    std::vector<TrialRecord> records = load_results(results_path);
    std::vector<TrialOutcome> outcomes;
    outcomes.reserve(records.size());
    for (const TrialRecord& r : records) outcomes.push_back(outcome_from_record(r));
    AccuracyTable full = aggregate(outcomes);

    std::filesystem::create_directories(output_dir);
    std::filesystem::path csv_path = output_dir / ("report_" + grouping + ".csv");
    std::filesystem::path json_path = output_dir / ("report_" + grouping + ".json");

    if (grouping == "by-length") {
        auto table = full.rollup(true, false, true, false);
        Pivot p = pivot_table(table, "context_length", {.by_length = true});
        write_file(csv_path, pivot_csv(p));
        write_file(json_path, pivot_json(p, grouping));
    } else if (grouping == "by-language") {
        auto table = full.rollup(true, true, false, false);
        Pivot p = pivot_table(table, "language", {.by_language = true});
        write_file(csv_path, pivot_csv(p));
        write_file(json_path, pivot_json(p, grouping));
    } else if (grouping == "by-k") {
        auto table = full.rollup(true, false, false, true);
        Pivot p = pivot_table(table, "k", {.by_k = true});
        write_file(csv_path, pivot_csv(p));
        write_file(json_path, pivot_json(p, grouping));
    } else if (grouping == "by-strategy") {
        auto table = full.rollup(true, false, false, false);
        write_file(csv_path, table.to_csv());
        write_file(json_path, table.to_json());
    } else if (grouping == "errors") {
        auto table = full.rollup(true, false, false, false);
        write_file(csv_path, errors_csv(table));
        write_file(json_path, errors_json(table));
    } else {
        throw NotFoundError("unknown grouping: " + grouping +
                            " (expected by-length, by-language, by-k, by-strategy, "
                            "errors)");
    }
    return {csv_path, json_path};
}

}  // namespace nsar
