#include "zara/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "zara/error.hpp"

namespace zara {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string stable_dump(const json& doc) { return doc.dump(2) + "\n"; }

CheckpointDir::CheckpointDir(fs::path root) : root_(std::move(root)) {
  fs::create_directories(*root_);
}

std::optional<json> CheckpointDir::read_json(std::string_view name) const {
  if (!root_) return std::nullopt;
  const fs::path path = *root_ / std::string(name);
  if (!fs::exists(path)) return std::nullopt;
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw DataError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
}

void CheckpointDir::write_json(std::string_view name, const json& doc) const {
  if (!root_) return;
  write_file_atomic(*root_ / std::string(name), stable_dump(doc));
}

std::optional<std::vector<json>> CheckpointDir::read_jsonl(std::string_view name) const {
  if (!root_) return std::nullopt;
  const fs::path path = *root_ / std::string(name);
  if (!fs::exists(path)) return std::nullopt;
  std::vector<json> records;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError(path.string(), line_no, "", std::string("corrupt checkpoint record: ") + e.what());
    }
  }
  return records;
}

void CheckpointDir::write_jsonl(std::string_view name, const std::vector<json>& records) const {
  if (!root_) return;
  std::string content;
  for (const auto& record : records) {
    content += record.dump();
    content += '\n';
  }
  write_file_atomic(*root_ / std::string(name), content);
}

}  // namespace zara
