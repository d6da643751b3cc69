#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "zara/approximator.hpp"
#include "zara/backend.hpp"
#include "zara/corpus.hpp"
#include "zara/evalkit.hpp"
#include "zara/promptgen.hpp"
#include "zara/selftrain.hpp"
#include "zara/toy.hpp"
#include "zara_cli/config.hpp"

namespace zara::cli {

struct CommandIo {
  std::ostream& out;  // reports
  std::ostream& err;  // progress lines and diagnostics
};

struct TaskData {
  Task task = Task::ComVE;
  std::vector<corpus::Episode> episodes;  // every episode of the task
  std::vector<std::size_t> selected;      // indices within the configured range
  promptgen::PromptTemplate prompt_template;
};

/// Loads `<data_dir>/<task>/*.jsonl` and the prompt template.
TaskData load_task_data(const RunConfig& config);

/// Mock or HTTP backends according to the config.
backend::BackendSet make_backends(const RunConfig& config, const TaskData& data);

std::filesystem::path task_dir(const RunConfig& config);
std::filesystem::path episode_dir(const RunConfig& config, int episode_id);
std::filesystem::path threshold_path(const RunConfig& config);

/// Deterministic pool for one episode, drawn from every other episode.
corpus::UnlabeledPool pool_for(const RunConfig& config, const TaskData& data, std::size_t index);

/// Fixed alpha, else the calibrated threshold file. Throws ConfigError when
/// neither is available.
double resolve_alpha(const RunConfig& config);

struct RunOutcome {
  std::vector<selftrain::EpisodeResult> results;        // completed, by episode id
  std::vector<std::pair<int, std::string>> failures;    // episode id, message
};

/// Runs the selected episodes with checkpointing under `<out>/<task>/`.
RunOutcome run_episodes(const RunConfig& config, const TaskData& data, const backend::BackendSet& backends,
                        double alpha, const selftrain::ProgressFn& progress);

/// Writes summary.tsv, summary.json and episodes.tsv; returns the summary TSV.
std::string write_reports(const RunConfig& config, std::span<const selftrain::EpisodeResult> results);

int cmd_calibrate(const RunConfig& config, CommandIo& io);
int cmd_run(const RunConfig& config, CommandIo& io);
int cmd_compare_strategies(const RunConfig& config, CommandIo& io);

struct BinsOptions {
  std::filesystem::path ratings;
  std::size_t k = 4;
};
int cmd_bins(const RunConfig& config, const BinsOptions& options, CommandIo& io);

struct EvaluateOptions {
  std::filesystem::path predictions;  // {"id", "text"} per line
  std::filesystem::path gold;         // instance records
  std::optional<std::filesystem::path> ratings;
};
int cmd_evaluate(const RunConfig& config, const EvaluateOptions& options, CommandIo& io);

struct MapDebugOptions {
  std::optional<std::filesystem::path> gold;
  std::optional<std::filesystem::path> predictions;
  bool describe = false;
};
int cmd_map_debug(const RunConfig& config, const MapDebugOptions& options, CommandIo& io);

int cmd_make_toy(const std::filesystem::path& root, const toy::ToySpec& spec, CommandIo& io);

/// Rating records: {"id", "ratings": [labels], "episode"?}.
struct RatingRecord {
  std::optional<int> episode;
  eval::PlausibilityRating rating;
};
std::vector<RatingRecord> read_ratings(const std::filesystem::path& path);

}  // namespace zara::cli
