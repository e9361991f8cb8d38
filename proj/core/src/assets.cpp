#include "nsar/assets.hpp"

#include <cstdlib>

namespace nsar {

namespace {

const char* checked(const char* dir) {
    if (dir == nullptr || *dir == '\0') return nullptr;
    std::error_code ec;
    return std::filesystem::is_directory(dir, ec) ? dir : nullptr;
}

}  // namespace

std::filesystem::path default_asset_dir() {
    if (const char* env = checked(std::getenv("NSAR_ASSET_DIR"))) return env;
#ifdef NSAR_SOURCE_ASSET_DIR
    if (const char* src = checked(NSAR_SOURCE_ASSET_DIR)) return src;
#endif
#ifdef NSAR_INSTALL_ASSET_DIR
    if (const char* inst = checked(NSAR_INSTALL_ASSET_DIR)) return inst;
#endif
    return "assets";
}

std::filesystem::path default_templates_dir() {
    return default_asset_dir() / "templates";
}

std::filesystem::path default_filler_dir() {
    return default_asset_dir() / "filler";
}

}  // namespace nsar
