#pragma once

#include <filesystem>

namespace nsar {

/// Root of the shipped data files (prompt templates, filler corpora).
/// Resolution order: NSAR_ASSET_DIR environment variable, then the source
/// tree location baked in at build time, then the install location.
std::filesystem::path default_asset_dir();

std::filesystem::path default_templates_dir();
std::filesystem::path default_filler_dir();

}  // namespace nsar
