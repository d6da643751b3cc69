#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "zara/error.hpp"
#include "zara_cli/commands.hpp"
#include "zara_cli/config.hpp"

namespace {

using namespace zara;
using namespace zara::cli;
using nlohmann::json;

struct GlobalFlags {
  std::string config_file;
  std::optional<std::string> task;
  std::optional<std::string> episodes;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> parallel;
  std::optional<double> alpha;
  std::optional<std::string> data_dir;
  std::optional<std::string> mode;
  bool mock_backends = false;
};

RunConfig resolve_flags(const GlobalFlags& flags) {
  json overrides = json::object();
  if (flags.task) overrides["task"] = *flags.task;
  if (flags.episodes) overrides["episodes"] = *flags.episodes;
  if (flags.seed) overrides["seed"] = *flags.seed;
  if (flags.out) overrides["out"] = *flags.out;
  if (flags.parallel) overrides["parallel"] = *flags.parallel;
  if (flags.data_dir) overrides["data_dir"] = *flags.data_dir;
  if (flags.mode) overrides["mode"] = *flags.mode;
  if (flags.alpha) overrides["alpha"] = *flags.alpha;
  if (flags.mock_backends) overrides["mock_backends"] = true;
  std::optional<std::filesystem::path> file;
  if (!flags.config_file.empty()) file = flags.config_file;
  return resolve_config(file, process_env(), overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zara: self-training with rationales judged by an NLI ensemble"};
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_option("--config", flags.config_file, "JSON configuration file");
  app.add_option("--task", flags.task, "comve | sbic | esnli | ecqa");
  app.add_option("--episodes", flags.episodes, "episode ids, e.g. 1-3,7 (default: all)");
  app.add_option("--seed", flags.seed, "run seed");
  app.add_option("--out", flags.out, "output directory");
  app.add_option("--parallel", flags.parallel, "episodes run concurrently");
  app.add_option("--alpha", flags.alpha, "fixed pseudo-plausibility threshold");
  app.add_option("--data-dir", flags.data_dir, "corpus root (<dir>/<task>/*.jsonl)");
  app.add_option("--mode", flags.mode, "strict | relaxed");
  app.add_flag("--mock-backends", flags.mock_backends, "use deterministic in-process backends");

  auto* calibrate = app.add_subcommand("calibrate", "estimate alpha from gold training data");
  auto* run = app.add_subcommand("run", "self-train every selected episode and report");
  auto* strategies = app.add_subcommand("compare-strategies", "gold accuracy of zara/random/lowest selections");

  BinsOptions bins_options;
  auto* bins = app.add_subcommand("bins", "human ratings by pseudo-plausibility percentile bin");
  bins->add_option("--ratings", bins_options.ratings, "ratings JSONL")->required();
  bins->add_option("-k,--bins", bins_options.k, "number of bins")->capture_default_str();

  EvaluateOptions evaluate_options;
  std::string evaluate_ratings;
  auto* evaluate = app.add_subcommand("evaluate", "score a predictions file against gold data");
  evaluate->add_option("--predictions", evaluate_options.predictions, "JSONL of {id, text}")->required();
  evaluate->add_option("--gold", evaluate_options.gold, "gold instances JSONL")->required();
  evaluate->add_option("--ratings", evaluate_ratings, "optional ratings JSONL");

  MapDebugOptions map_options;
  std::string map_gold;
  std::string map_predictions;
  auto* map_debug = app.add_subcommand("map-debug", "show the NLI queries built for instances");
  map_debug->add_option("--gold", map_gold, "instances JSONL");
  map_debug->add_option("--predictions", map_predictions, "JSONL of {id, text}; default uses gold");
  map_debug->add_flag("--describe", map_options.describe, "print the per-task mapping templates");

  toy::ToySpec toy_spec;
  std::string toy_out = "data";
  auto* make_toy = app.add_subcommand("make-toy", "write a small synthetic corpus for every task");
  make_toy->add_option("--dir", toy_out, "corpus root")->capture_default_str();
  make_toy->add_option("--count", toy_spec.episodes, "episodes per task")->capture_default_str();
  make_toy->add_option("--train", toy_spec.train, "train instances per episode")->capture_default_str();
  make_toy->add_option("--test", toy_spec.test, "test instances per episode")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  CommandIo io{std::cout, std::cerr};
  try {
    if (make_toy->parsed()) {
      if (flags.seed) toy_spec.seed = *flags.seed;
      return cmd_make_toy(toy_out, toy_spec, io);
    }
    RunConfig config = resolve_flags(flags);
    if (map_debug->parsed()) {
      if (!map_gold.empty()) map_options.gold = map_gold;
      if (!map_predictions.empty()) map_options.predictions = map_predictions;
      return cmd_map_debug(config, map_options, io);
    }
    if (evaluate->parsed()) {
      if (!evaluate_ratings.empty()) evaluate_options.ratings = evaluate_ratings;
      return cmd_evaluate(config, evaluate_options, io);
    }
    validate(config);
    if (calibrate->parsed()) return cmd_calibrate(config, io);
    if (run->parsed()) return cmd_run(config, io);
    if (strategies->parsed()) return cmd_compare_strategies(config, io);
    if (bins->parsed()) return cmd_bins(config, bins_options, io);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
