#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "nsar/assets.hpp"
#include "nsar/corpus.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::mt19937_64 rng(std::random_device{}());
        path = base / ("nsar_test_" + std::to_string(rng()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline nsar::FillerCorpus shipped_filler(nsar::Language lang) {
    auto path =
        nsar::default_filler_dir() / (std::string(nsar::to_code(lang)) + ".txt");
    return nsar::load_filler_file(path, lang);
}

}  // namespace testutil
