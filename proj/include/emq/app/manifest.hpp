#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace emq::app {

std::string sha256_file(const std::filesystem::path& path);

/// Writes `manifest.txt` in `dir` with one "<sha256>  <name>" line per
/// artifact, sorted by name. Returns the manifest path.
std::filesystem::path write_manifest(const std::filesystem::path& dir, std::vector<std::string> artifacts);

}  // namespace emq::app
