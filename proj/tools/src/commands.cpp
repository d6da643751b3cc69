#include "zara_cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "zara/checkpoint.hpp"
#include "zara/error.hpp"
#include "zara/evalkit.hpp"
#include "zara/mock_backend.hpp"
#include "zara/nlimap.hpp"
#include "zara/parallel.hpp"
#include "zara/report.hpp"
#include "zara/seed.hpp"

namespace zara::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Stream ids for derive_seed(); episode ids are added to the pool stream.
constexpr std::uint64_t kPoolStream = 1u << 20;
constexpr std::uint64_t kStrategyStream = 2u << 20;

Task require_task(const RunConfig& config) {
  if (!config.task) throw ConfigError("task", "a task is required (--task or ZARA_TASK)");
  return *config.task;
}

report::ReportMeta meta_for(const RunConfig& config) {
  return {config_digest(config), config.seed, config.train.base_model};
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

std::vector<json> read_jsonl_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError(path.string(), line_no, "", std::string("malformed JSON: ") + e.what());
    }
  }
  return records;
}

backend::Endpoint endpoint(const RunConfig& config, const std::string& locator) {
  backend::Endpoint e;
  e.locator = locator;
  e.name = locator;
  e.timeout = std::chrono::milliseconds(config.backends.timeout_ms);
  e.retries = config.backends.retries;
  return e;
}

std::unique_ptr<approx::Approximator> make_approximator(const RunConfig& config,
                                                        const backend::BackendSet& backends) {
  return std::make_unique<approx::Approximator>(backends.nli, static_cast<std::size_t>(config.max_in_flight));
}

/// Selectable scored items of an episode, read back from its checkpoint.
std::optional<std::vector<approx::ScoredPrediction>> load_scored(const RunConfig& config,
                                                                  const TaskData& data, std::size_t index,
                                                                  const std::vector<Instance>& pool_view) {
  const fs::path file = episode_dir(config, data.episodes[index].episode_id) / "scored.jsonl";
  if (!fs::exists(file)) return std::nullopt;
  const auto records = read_jsonl_file(file);
  if (records.size() != pool_view.size()) {
    throw DataError(file.string() + " does not match the episode's pool (" + std::to_string(records.size()) +
                    " records for " + std::to_string(pool_view.size()) + " instances)");
  }
  std::vector<approx::ScoredPrediction> scored;
  scored.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    scored.push_back(approx::scored_from_audit_json(records[i], pool_view[i]));
  }
  return scored;
}

std::string progress_line(Task task, std::string_view stage, int episode, std::size_t count) {
  std::ostringstream line;
  line << "progress\ttask=" << task_key(task) << "\tepisode=" << episode << "\tstage=" << stage
       << "\tcount=" << count << '\n';
  return line.str();
}

}  // namespace

// ---- data and backends ----------------------------------------------------

TaskData load_task_data(const RunConfig& config) {
  TaskData data;
  data.task = require_task(config);
  const fs::path dir = config.data_dir / std::string(task_key(data.task));
  for (const auto& file : corpus::list_episode_files(dir)) {
    data.episodes.push_back(corpus::load_episode(file, data.task, config.mode));
  }
  if (data.episodes.empty()) throw DataError("no episode files in " + dir.string());
  for (std::size_t i = 1; i < data.episodes.size(); ++i) {
    if (data.episodes[i].episode_id == data.episodes[i - 1].episode_id) {
      throw DataError("duplicate episode id " + std::to_string(data.episodes[i].episode_id) + " in " +
                      dir.string());
    }
  }
  const auto range = parse_episode_range(config.episodes);
  for (std::size_t i = 0; i < data.episodes.size(); ++i) {
    if (range.empty() || range.count(data.episodes[i].episode_id)) data.selected.push_back(i);
  }
  for (int id : range) {
    const bool present = std::any_of(data.episodes.begin(), data.episodes.end(),
                                     [&](const auto& e) { return e.episode_id == id; });
    if (!present) throw ConfigError("episodes", "episode " + std::to_string(id) + " not found in " + dir.string());
  }
  data.prompt_template = config.template_path ? promptgen::load_template(*config.template_path, data.task)
                                              : promptgen::default_template(data.task);
  return data;
}

backend::BackendSet make_backends(const RunConfig& config, const TaskData& data) {
  if (config.mock_backends) {
    auto index = std::make_shared<backend::mock::PromptIndex>();
    for (const auto& episode : data.episodes) {
      for (const auto* split : {&episode.train, &episode.test}) {
        for (const auto& instance : *split) {
          index->add(promptgen::render_prompt(data.prompt_template, instance), instance);
        }
      }
    }
    return backend::mock::make_backend_set(index, data.prompt_template);
  }
  backend::BackendSet set;
  set.trainer = backend::make_http_trainer(endpoint(config, config.backends.trainer));
  set.generator = backend::make_http_generator(endpoint(config, config.backends.generator));
  for (const auto& locator : config.backends.nli) {
    set.nli.push_back(backend::make_http_nli_scorer(endpoint(config, locator)));
  }
  set.embedding = backend::make_http_embedding_scorer(endpoint(config, config.backends.embedding));
  return set;
}

fs::path task_dir(const RunConfig& config) {
  return config.out / std::string(task_key(require_task(config)));
}

fs::path episode_dir(const RunConfig& config, int episode_id) {
  char name[32];
  std::snprintf(name, sizeof name, "episode_%03d", episode_id);
  return task_dir(config) / name;
}

fs::path threshold_path(const RunConfig& config) { return task_dir(config) / "threshold.json"; }

corpus::UnlabeledPool pool_for(const RunConfig& config, const TaskData& data, std::size_t index) {
  const auto& target = data.episodes[index];
  return corpus::build_unlabeled_pool(
      data.episodes, target, derive_seed(config.seed, kPoolStream + static_cast<std::uint64_t>(target.episode_id)));
}

double resolve_alpha(const RunConfig& config) {
  if (config.alpha) return *config.alpha;
  const fs::path path = threshold_path(config);
  if (!fs::exists(path)) {
    throw ConfigError("alpha", "no fixed alpha and no calibrated threshold at " + path.string() +
                                   " (run 'zara calibrate' first)");
  }
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw DataError("corrupt threshold file " + path.string() + ": " + e.what());
  }
  const auto threshold = approx::threshold_config_from_json(doc);
  if (threshold.task != require_task(config)) {
    throw DataError("threshold file " + path.string() + " was calibrated for another task");
  }
  return threshold.alpha;
}

// ---- calibrate --------------------------------------------------------------

int cmd_calibrate(const RunConfig& config, CommandIo& io) {
  if (config.alpha) throw ConfigError("alpha", "calibration is meaningless with a fixed alpha");
  const TaskData data = load_task_data(config);
  const auto backends = make_backends(config, data);
  const auto approximator = make_approximator(config, backends);

  std::vector<std::vector<double>> per_episode;
  std::size_t pairs = 0;
  for (std::size_t index : data.selected) {
    const auto& episode = data.episodes[index];
    std::vector<Prediction> gold_predictions;
    std::vector<Instance> inputs;
    for (const auto& instance : episode.train) {
      Prediction p;
      p.instance_id = instance.id;
      p.answer = instance.gold_label;
      p.rationale = instance.gold_rationale;
      p.raw_text = promptgen::render_target(data.prompt_template, instance, *instance.gold_label,
                                            *instance.gold_rationale);
      p.parse_ok = true;
      gold_predictions.push_back(std::move(p));
      inputs.push_back(without_gold(instance));
    }
    const auto scored = approximator->score_all(inputs, gold_predictions);
    std::vector<double> scores;
    for (const auto& item : scored) {
      if (item.selectable()) scores.push_back(item.pseudo_plausibility);
    }
    pairs += scores.size();
    per_episode.push_back(std::move(scores));
    io.err << progress_line(data.task, "calibrate-score", episode.episode_id, episode.train.size());
  }
  if (pairs == 0) throw PreconditionError("calibration needs gold training data; none could be scored");

  approx::ThresholdConfig threshold;
  threshold.task = data.task;
  threshold.grid = config.grid ? *config.grid : approx::default_grid();
  threshold.curve = approx::average_counts_curve(per_episode, threshold.grid);
  threshold.alpha = approx::calibrate_threshold(threshold.curve);
  threshold.validate();

  json doc = approx::to_json(threshold);
  doc["config_digest"] = config_digest(config);
  doc["seed"] = config.seed;
  write_text(threshold_path(config), stable_dump(doc));

  io.out << "threshold\tcount\n";
  for (const auto& point : threshold.curve) {
    io.out << report::fixed(point.threshold, 2) << '\t' << report::fixed(point.count, 2) << '\n';
  }
  io.out << "alpha\t" << report::fixed(threshold.alpha, 2) << '\n';
  return 0;
}

// ---- run ------------------------------------------------------------------

RunOutcome run_episodes(const RunConfig& config, const TaskData& data, const backend::BackendSet& backends,
                        double alpha, const selftrain::ProgressFn& progress) {
  const auto approximator = make_approximator(config, backends);
  std::vector<std::optional<selftrain::EpisodeResult>> results(data.selected.size());
  std::vector<std::string> errors(data.selected.size());

  parallel_for(data.selected.size(), static_cast<std::size_t>(config.parallel), [&](std::size_t slot) {
    const std::size_t index = data.selected[slot];
    const auto& episode = data.episodes[index];
    try {
      const auto pool = pool_for(config, data, index);
      selftrain::EpisodeRun run;
      run.episode = &episode;
      run.pool = &pool;
      run.config = config.train;
      run.config.seed = config.seed;
      run.prompt_template = data.prompt_template;
      run.alpha = alpha;
      run.balance_mode = config.balance;
      run.checkpoint_dir = episode_dir(config, episode.episode_id);
      run.progress = progress;
      results[slot] = selftrain::run_episode(
          run, {backends.trainer.get(), backends.generator.get(), approximator.get(), backends.embedding.get()});
    } catch (const std::exception& e) {
      errors[slot] = e.what();
    }
  });

  RunOutcome outcome;
  for (std::size_t slot = 0; slot < data.selected.size(); ++slot) {
    if (results[slot]) {
      outcome.results.push_back(std::move(*results[slot]));
    } else {
      outcome.failures.emplace_back(data.episodes[data.selected[slot]].episode_id, errors[slot]);
    }
  }
  return outcome;
}

std::string write_reports(const RunConfig& config, std::span<const selftrain::EpisodeResult> results) {
  const auto meta = meta_for(config);
  const auto rows = report::summarize(require_task(config), results, meta.model_size);
  const std::string tsv = report::summary_tsv(rows, meta);
  write_text(task_dir(config) / "summary.tsv", tsv);
  write_text(task_dir(config) / "summary.json", stable_dump(report::summary_json(rows, results, meta)));
  write_text(task_dir(config) / "episodes.tsv", report::episodes_tsv(results, meta));
  return tsv;
}

int cmd_run(const RunConfig& config, CommandIo& io) {
  const TaskData data = load_task_data(config);
  const double alpha = resolve_alpha(config);
  const auto backends = make_backends(config, data);
  write_text(task_dir(config) / "config.json", stable_dump(to_json(config)));

  std::mutex io_mutex;
  auto progress = [&](std::string_view stage, int episode, std::size_t count) {
    std::lock_guard lock(io_mutex);
    io.err << progress_line(data.task, stage, episode, count) << std::flush;
  };
  const auto outcome = run_episodes(config, data, backends, alpha, progress);
  for (const auto& [id, message] : outcome.failures) {
    io.err << "episode_failed\ttask=" << task_key(data.task) << "\tepisode=" << id << "\terror=" << message
           << '\n';
  }
  if (!outcome.results.empty()) {
    io.out << write_reports(config, outcome.results);
    io.out << report::episodes_tsv(outcome.results, meta_for(config));
  }
  return outcome.failures.empty() ? 0 : 1;
}

// ---- compare-strategies -----------------------------------------------------

int cmd_compare_strategies(const RunConfig& config, CommandIo& io) {
  const TaskData data = load_task_data(config);
  const double alpha = resolve_alpha(config);
  std::vector<report::StrategyRow> rows;
  for (std::size_t index : data.selected) {
    const auto pool = pool_for(config, data, index);
    const int id = data.episodes[index].episode_id;
    const auto scored = load_scored(config, data, index, pool.pipeline_view());
    if (!scored) {
      throw PreconditionError("episode " + std::to_string(id) +
                              " has no scored pool generations; run 'zara run' first");
    }
    auto episode_rows = report::compare_strategies(id, *scored, pool.evaluation_view(), alpha,
                                                   derive_seed(config.seed, kStrategyStream + id));
    rows.insert(rows.end(), episode_rows.begin(), episode_rows.end());
  }
  const std::string tsv = report::strategies_tsv(rows, meta_for(config));
  write_text(task_dir(config) / "strategies.tsv", tsv);
  io.out << tsv;
  return 0;
}

// ---- bins -------------------------------------------------------------------

std::vector<RatingRecord> read_ratings(const fs::path& path) {
  std::vector<RatingRecord> out;
  std::size_t line = 0;
  for (const auto& record : read_jsonl_file(path)) {
    ++line;
    try {
      RatingRecord r;
      if (auto it = record.find("episode"); it != record.end() && !it->is_null()) r.episode = it->get<int>();
      r.rating = eval::make_rating(record.at("id").get<std::string>(),
                                   record.at("ratings").get<std::vector<std::string>>());
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(path.string(), line, "", std::string("malformed rating record: ") + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string(), line, "ratings", e.what());
    }
  }
  return out;
}

int cmd_bins(const RunConfig& config, const BinsOptions& options, CommandIo& io) {
  if (options.k == 0) throw ConfigError("k", "must be at least 1");
  const TaskData data = load_task_data(config);
  const auto ratings = read_ratings(options.ratings);

  // Items are keyed "<episode>:<id>" so that the same instance scored in
  // several episodes' pools stays distinct.
  std::vector<approx::ScoredPrediction> joined_scored;
  std::vector<eval::PlausibilityRating> joined_ratings;
  for (std::size_t index : data.selected) {
    const int id = data.episodes[index].episode_id;
    const auto pool = pool_for(config, data, index);
    const auto scored = load_scored(config, data, index, pool.pipeline_view());
    if (!scored) continue;
    const std::string prefix = std::to_string(id) + ":";
    for (auto item : *scored) {
      item.instance.id = prefix + item.instance.id;
      joined_scored.push_back(std::move(item));
    }
    for (const auto& r : ratings) {
      if (r.episode && *r.episode != id) continue;
      auto rating = r.rating;
      rating.instance_id = prefix + rating.instance_id;
      joined_ratings.push_back(std::move(rating));
    }
  }
  if (joined_scored.empty()) throw PreconditionError("no scored episodes found; run 'zara run' first");
  const auto bins = report::make_bins_report(data.task, joined_scored, joined_ratings, options.k);
  const std::string tsv = report::bins_tsv(bins, meta_for(config));
  write_text(task_dir(config) / "bins.tsv", tsv);
  io.out << tsv;
  return 0;
}

// ---- evaluate ---------------------------------------------------------------

int cmd_evaluate(const RunConfig& config, const EvaluateOptions& options, CommandIo& io) {
  const Task task = require_task(config);
  const auto gold = corpus::read_instances(options.gold, task, config.mode);
  if (gold.empty()) throw PreconditionError("gold file " + options.gold.string() + " is empty");
  const auto tmpl = config.template_path ? promptgen::load_template(*config.template_path, task)
                                         : promptgen::default_template(task);
  std::unordered_map<std::string, std::string> texts;
  for (const auto& record : read_jsonl_file(options.predictions)) {
    try {
      texts[record.at("id").get<std::string>()] = record.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw DataError(options.predictions.string() + ": malformed prediction record: " + e.what());
    }
  }
  std::vector<Prediction> predictions;
  for (const auto& instance : gold) {
    auto it = texts.find(instance.id);
    if (it == texts.end()) throw DataError("no prediction for gold instance '" + instance.id + "'");
    predictions.push_back(promptgen::parse_prediction(tmpl, it->second, instance));
  }

  json doc;
  doc["task"] = std::string(task_key(task));
  doc["config_digest"] = config_digest(config);
  doc["seed"] = config.seed;
  doc["instances"] = gold.size();
  doc["accuracy"] = eval::accuracy(predictions, gold);
  if (config.mock_backends || !config.backends.embedding.empty()) {
    std::shared_ptr<backend::EmbeddingScorer> scorer =
        config.mock_backends ? backend::mock::make_embedding_scorer()
                             : backend::make_http_embedding_scorer(endpoint(config, config.backends.embedding));
    doc["explanation_score"] = eval::explanation_score(predictions, gold, *scorer);
  }
  if (options.ratings) {
    const auto records = read_ratings(*options.ratings);
    std::vector<eval::PlausibilityRating> ratings;
    std::vector<std::vector<int>> categories;
    for (const auto& r : records) {
      ratings.push_back(r.rating);
      std::vector<int> item;
      for (int score : r.rating.scores) item.push_back(score - 1);
      if (item.size() >= 2) categories.push_back(std::move(item));
    }
    const auto flags = eval::correctness(predictions, gold);
    std::vector<eval::CorrectnessOutcome> outcomes;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (std::any_of(ratings.begin(), ratings.end(), [&](const auto& r) { return r.instance_id == gold[i].id; })) {
        outcomes.push_back({gold[i].id, flags[i]});
      }
    }
    const auto table = eval::plausibility_correctness_table(ratings, outcomes);
    doc["plausibility"] = {
        {"rows", {"plausible", "not plausible"}},
        {"columns", {"correct", "incorrect"}},
        {"percent", table.percent},
        {"counts", table.counts},
    };
    if (!categories.empty()) doc["randolph_kappa"] = eval::randolph_kappa(categories, 4);
  }
  io.out << stable_dump(doc);
  return 0;
}

// ---- map-debug --------------------------------------------------------------

int cmd_map_debug(const RunConfig& config, const MapDebugOptions& options, CommandIo& io) {
  if (options.describe) {
    io.out << stable_dump(nlimap::describe_mappings());
    if (!options.gold) return 0;
  }
  if (!options.gold) throw ConfigError("gold", "map-debug needs --gold (or --describe)");
  const Task task = require_task(config);
  const auto gold = corpus::read_instances(*options.gold, task, config.mode);
  const auto tmpl = config.template_path ? promptgen::load_template(*config.template_path, task)
                                         : promptgen::default_template(task);
  std::unordered_map<std::string, std::string> texts;
  if (options.predictions) {
    for (const auto& record : read_jsonl_file(*options.predictions)) {
      texts[record.at("id").get<std::string>()] = record.at("text").get<std::string>();
    }
  }
  int failures = 0;
  for (const auto& instance : gold) {
    Prediction prediction;
    if (options.predictions) {
      auto it = texts.find(instance.id);
      if (it == texts.end()) continue;
      prediction = promptgen::parse_prediction(tmpl, it->second, instance);
    } else {
      if (!instance.gold_label || !instance.gold_rationale) continue;
      prediction.instance_id = instance.id;
      prediction.answer = instance.gold_label;
      prediction.rationale = instance.gold_rationale;
      prediction.parse_ok = true;
    }
    json line = {{"id", instance.id}};
    try {
      const auto query = nlimap::map_to_nli(instance, prediction);
      line["premise"] = query.premise;
      line["hypothesis"] = query.hypothesis;
      line["target_class"] = std::string(nlimap::nli_class_name(query.target_class));
    } catch (const MappingError& e) {
      line["error"] = e.what();
      ++failures;
    }
    io.out << line.dump() << '\n';
  }
  return failures == 0 ? 0 : 1;
}

// ---- make-toy ---------------------------------------------------------------

int cmd_make_toy(const fs::path& root, const toy::ToySpec& spec, CommandIo& io) {
  toy::write_corpus(root, spec);
  for (Task task : kAllTasks) {
    io.out << "wrote\t" << (root / std::string(task_key(task))).generic_string() << "\tepisodes=" << spec.episodes
           << "\ttrain=" << spec.train << "\ttest=" << spec.test << '\n';
  }
  return 0;
}

}  // namespace zara::cli
