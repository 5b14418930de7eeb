#pragma once

#include "mvseg/scene.hpp"

#include <filesystem>

namespace mvseg {

inline constexpr const char* kBundleFormatVersion = "1";

// Bundle directory layout: manifest.json plus arrays/*.bin blobs.
// Save/load round-trips every array bit-exactly.
void save_bundle(const SceneBundle& bundle, const std::filesystem::path& dir);
SceneBundle load_bundle(const std::filesystem::path& dir);

}  // namespace mvseg
