#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace lsv {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Owns one output directory: every file written through it is listed in
/// manifest.txt as "<sha256>  <name>".
class ArtifactDir {
 public:
  explicit ArtifactDir(std::filesystem::path dir);

  const std::filesystem::path& path() const noexcept { return dir_; }
  void write_text(const std::string& name, const std::string& content);
  /// Pretty-printed JSON with a trailing newline; non-finite numbers become null.
  void write_json(const std::string& name, const nlohmann::json& j);
  /// Writes manifest.txt over every artifact written so far (sorted by name).
  void write_manifest() const;

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

/// Shortest round-trip decimal form of a double ("inf", "-inf", "nan" for non-finite).
std::string format_double(double x);

}  // namespace lsv
