#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zara/corpus.hpp"
#include "zara/selftrain.hpp"
#include "zara/types.hpp"

namespace zara::cli {

struct BackendEndpoints {
  std::string trainer;
  std::string generator;
  std::vector<std::string> nli;
  std::string embedding;
  int timeout_ms = 60000;
  int retries = 2;

  friend bool operator==(const BackendEndpoints&, const BackendEndpoints&) = default;
};

struct RunConfig {
  std::optional<Task> task;
  std::filesystem::path data_dir = "data";
  std::optional<std::filesystem::path> template_path;
  corpus::Mode mode = corpus::Mode::Strict;
  std::string episodes;  // "1-3,7"; empty selects every episode
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  int parallel = 1;       // episodes run concurrently
  int max_in_flight = 4;  // concurrent scoring calls per approximator
  std::optional<double> alpha;
  std::optional<std::vector<double>> grid;
  bool mock_backends = false;
  BackendEndpoints backends;
  selftrain::TrainConfig train;
  selftrain::BalanceMode balance = selftrain::BalanceMode::TopScore;
};

nlohmann::json to_json(const RunConfig& config);
/// Throws ConfigError naming the offending field.
RunConfig run_config_from_json(const nlohmann::json& doc);

bool operator==(const RunConfig& a, const RunConfig& b);

/// Environment lookup; returns nullopt for unset variables.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// Applies ZARA_<KEY> overrides (ZARA_TASK, ZARA_DATA_DIR, ZARA_SEED,
/// ZARA_ALPHA, ZARA_BACKENDS_NLI, ...) to a config document. Nested keys
/// join with '_'; list values are comma-separated.
void apply_env_overrides(nlohmann::json& doc, const EnvLookup& env);

/// Builds a config from, in increasing precedence: the JSON file (if any),
/// ZARA_* environment variables and command-line overrides. A fixed alpha
/// among the overrides drops any grid inherited from the file or environment.
RunConfig resolve_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env,
                         const nlohmann::json& overrides);

/// Field-level checks: alpha and grid are mutually exclusive, alpha lies in
/// (0, 1), referenced paths exist, endpoints are present unless mocked.
void validate(const RunConfig& config);

/// Digest of everything that affects results (output location and
/// parallelism excluded).
std::string config_digest(const RunConfig& config);

/// Parses "1-3,7". Throws ConfigError on malformed input.
std::set<int> parse_episode_range(const std::string& text);

}  // namespace zara::cli
