#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace zara {

/// Writes to a sibling temp file and renames it over the target, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// A per-episode directory of stage artifacts. A default-constructed
/// directory is disabled: reads find nothing and writes are dropped.
class CheckpointDir {
 public:
  CheckpointDir() = default;
  explicit CheckpointDir(std::filesystem::path root);

  bool enabled() const { return root_.has_value(); }
  const std::optional<std::filesystem::path>& root() const { return root_; }

  std::optional<nlohmann::json> read_json(std::string_view name) const;
  void write_json(std::string_view name, const nlohmann::json& doc) const;

  std::optional<std::vector<nlohmann::json>> read_jsonl(std::string_view name) const;
  void write_jsonl(std::string_view name, const std::vector<nlohmann::json>& records) const;

 private:
  std::optional<std::filesystem::path> root_;
};

/// Pretty, key-sorted JSON with a trailing newline; byte-stable for equal
/// documents.
std::string stable_dump(const nlohmann::json& doc);

}  // namespace zara
