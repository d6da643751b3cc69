#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zara/types.hpp"

namespace zara::corpus {

inline constexpr std::size_t kBenchmarkTrainSize = 48;
inline constexpr std::size_t kBenchmarkTestSize = 350;

enum class Mode {
  Strict,   // benchmark sizes enforced, unknown keys rejected
  Relaxed,  // any split sizes, unknown keys ignored
};

struct Episode {
  int episode_id = 0;
  Task task = Task::ComVE;
  std::vector<Instance> train;
  std::vector<Instance> test;
  // Set when loaded in relaxed mode; results from such episodes are not
  // comparable to benchmark numbers.
  bool relaxed = false;
};

/// Instances sampled from other episodes for self-training. Gold fields are
/// kept for evaluation only; the pipeline sees them masked.
class UnlabeledPool {
 public:
  UnlabeledPool(int episode_id, std::uint64_t seed, std::vector<Instance> instances);

  int episode_id() const { return episode_id_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return instances_.size(); }

  /// Instances with gold label and rationale stripped.
  std::vector<Instance> pipeline_view() const;
  /// Full instances including gold fields. Only analysis code (strategy
  /// comparison) should read this.
  const std::vector<Instance>& evaluation_view() const { return instances_; }

 private:
  int episode_id_;
  std::uint64_t seed_;
  std::vector<Instance> instances_;
};

// Record <-> JSON. Records are flat objects: id, task, task content keys,
// optional label/rationale, and (in episode files) split.
nlohmann::json instance_to_json(const Instance& instance);
/// `where` is used as the error location prefix (e.g. "file.jsonl:12").
Instance instance_from_json(const nlohmann::json& record, Mode mode,
                            const std::string& path = "<memory>", std::size_t line = 0);

/// Reads a line-delimited record file. A record's `split` key, if any, is
/// accepted and ignored. Throws DataError on malformed records, duplicate ids
/// or (when `expected` is set) records of another task.
std::vector<Instance> read_instances(const std::filesystem::path& path,
                                     std::optional<Task> expected, Mode mode);

/// Loads one episode file. Each record carries `split` = "train" | "test".
/// The episode id is the trailing integer of the file stem
/// ("episode_007.jsonl" -> 7), or 0 if the stem has none.
Episode load_episode(const std::filesystem::path& path, Task task, Mode mode);

/// Writes instances in the format read_instances() accepts. Throws
/// PreconditionError on mixed tasks and Error on I/O failure.
void write_dataset(std::span<const Instance> instances, const std::filesystem::path& path);

/// Writes an episode file (records tagged with their split).
void write_episode(const Episode& episode, const std::filesystem::path& path);

/// Episode files ("*.jsonl") in a task directory, sorted by episode id.
std::vector<std::filesystem::path> list_episode_files(const std::filesystem::path& dir);

/// Samples |target.test| instances uniformly without replacement from the
/// train and test splits of all other same-task episodes, excluding ids that
/// occur in the target episode. Deterministic in (inputs, seed).
UnlabeledPool build_unlabeled_pool(std::span<const Episode> all_episodes,
                                   const Episode& target, std::uint64_t seed);

}  // namespace zara::corpus
