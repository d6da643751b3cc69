#include "zara/selftrain.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "zara/checkpoint.hpp"
#include "zara/digest.hpp"
#include "zara/error.hpp"
#include "zara/evalkit.hpp"
#include "zara/seed.hpp"

namespace zara::selftrain {

using nlohmann::json;

namespace {

// Stream ids for derive_seed().
constexpr std::uint64_t kBalanceStream = 1;

std::optional<Stage> parse_stage(std::string_view text) {
  for (Stage s : {Stage::M0, Stage::M1, Stage::M2}) {
    if (text == stage_name(s)) return s;
  }
  return std::nullopt;
}

json pairs_to_json(std::span<const backend::TrainingPair> pairs) {
  json out = json::array();
  for (const auto& pair : pairs) out.push_back({{"prompt", pair.prompt}, {"target", pair.target}});
  return out;
}

json instances_to_json(std::span<const Instance> instances) {
  json out = json::array();
  for (const auto& instance : instances) out.push_back(corpus::instance_to_json(instance));
  return out;
}

json stage_metrics_to_json(const StageMetrics& metrics) {
  return {{"model", to_json(metrics.model)},
          {"accuracy", metrics.accuracy},
          {"explanation_score", metrics.explanation_score}};
}

StageMetrics stage_metrics_from_json(const json& doc) {
  return {model_handle_from_json(doc.at("model")), doc.at("accuracy").get<double>(),
          doc.at("explanation_score").get<double>()};
}

ModelHandle stage_model(const CheckpointDir& ck, std::string_view file,
                        const std::function<ModelHandle()>& produce) {
  if (auto doc = ck.read_json(file)) return model_handle_from_json(*doc);
  ModelHandle handle = produce();
  ck.write_json(file, to_json(handle));
  return handle;
}

std::vector<Prediction> stage_generations(const CheckpointDir& ck, std::string_view file,
                                          backend::Generator& generator, const ModelHandle& model,
                                          std::span<const Instance> instances,
                                          const promptgen::PromptTemplate& tmpl,
                                          const backend::Decoding& decoding) {
  if (auto records = ck.read_jsonl(file)) {
    if (records->size() != instances.size()) {
      throw DataError("checkpoint " + std::string(file) + " has " + std::to_string(records->size()) +
                      " generations for " + std::to_string(instances.size()) + " instances");
    }
    std::vector<Prediction> predictions;
    predictions.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const json& record = (*records)[i];
      if (record.at("id").get<std::string>() != instances[i].id) {
        throw DataError("checkpoint " + std::string(file) + " is misaligned at '" + instances[i].id + "'");
      }
      predictions.push_back(
          promptgen::parse_prediction(tmpl, record.at("text").get<std::string>(), instances[i]));
    }
    return predictions;
  }
  auto predictions = generate(generator, model, instances, tmpl, decoding);
  std::vector<json> records;
  records.reserve(predictions.size());
  for (const auto& p : predictions) records.push_back({{"id", p.instance_id}, {"text", p.raw_text}});
  ck.write_jsonl(file, records);
  return predictions;
}

std::map<std::string, std::size_t> class_histogram(Task task,
                                                   std::span<const approx::ScoredPrediction> items) {
  std::map<std::string, std::size_t> histogram;
  for (const auto& item : items) ++histogram[label_key(task, *item.prediction.answer)];
  return histogram;
}

}  // namespace

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::M0: return "M0";
    case Stage::M1: return "M1";
    case Stage::M2: return "M2";
  }
  return "unknown";
}

json TrainConfig::hyperparameters(Stage stage) const {
  json hp = stage_one.is_object() ? stage_one : json::object();
  hp["seed"] = seed;
  if (stage == Stage::M2) hp["max_epochs"] = stage_two_max_epochs;
  return hp;
}

std::string TrainConfig::digest(Stage stage) const {
  return json_digest({{"base_model", base_model}, {"hyperparameters", hyperparameters(stage)}});
}

json to_json(const TrainConfig& config) {
  return {{"base_model", config.base_model},
          {"stage_one", config.stage_one},
          {"stage_two_max_epochs", config.stage_two_max_epochs},
          {"seed", config.seed},
          {"decoding",
           {{"temperature", config.decoding.temperature},
            {"max_new_tokens", config.decoding.max_new_tokens}}}};
}

TrainConfig train_config_from_json(const json& doc) {
  TrainConfig config;
  try {
    config.base_model = doc.value("base_model", config.base_model);
    if (auto it = doc.find("stage_one"); it != doc.end()) {
      if (!it->is_object()) throw DataError("train config: 'stage_one' must be an object");
      config.stage_one = *it;
    }
    config.stage_two_max_epochs = doc.value("stage_two_max_epochs", kStageTwoMaxEpochs);
    config.seed = doc.value("seed", std::uint64_t{0});
    if (auto it = doc.find("decoding"); it != doc.end()) {
      config.decoding.temperature = it->value("temperature", 0.0);
      config.decoding.max_new_tokens = it->value("max_new_tokens", 128);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid train config: ") + e.what());
  }
  return config;
}

json to_json(const ModelHandle& handle) {
  return {{"model_id", handle.model_id},
          {"stage", std::string(stage_name(handle.stage))},
          {"episode_id", handle.episode_id},
          {"config_digest", handle.config_digest},
          {"dataset_digest", handle.dataset_digest},
          {"name", handle.name}};
}

ModelHandle model_handle_from_json(const json& doc) {
  ModelHandle handle;
  try {
    handle.model_id = doc.at("model_id").get<std::string>();
    auto stage = parse_stage(doc.at("stage").get<std::string>());
    if (!stage) throw DataError("model handle: unknown stage");
    handle.stage = *stage;
    handle.episode_id = doc.at("episode_id").get<int>();
    handle.config_digest = doc.at("config_digest").get<std::string>();
    handle.dataset_digest = doc.at("dataset_digest").get<std::string>();
    handle.name = doc.at("name").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid model handle: ") + e.what());
  }
  return handle;
}

std::string dataset_digest(std::span<const backend::TrainingPair> pairs) {
  return json_digest(pairs_to_json(pairs));
}

std::vector<backend::TrainingPair> render_training_pairs(const promptgen::PromptTemplate& tmpl,
                                                         std::span<const Instance> instances) {
  std::vector<backend::TrainingPair> pairs;
  pairs.reserve(instances.size());
  for (const auto& instance : instances) {
    if (!instance.gold_label || !instance.gold_rationale) {
      throw PreconditionError("training instance '" + instance.id + "' lacks a gold label or rationale");
    }
    pairs.push_back({promptgen::render_prompt(tmpl, instance),
                     promptgen::render_target(tmpl, instance, *instance.gold_label,
                                              *instance.gold_rationale)});
  }
  return pairs;
}

std::vector<backend::TrainingPair> render_augmented_pairs(
    const promptgen::PromptTemplate& tmpl, std::span<const approx::ScoredPrediction> selected) {
  std::vector<backend::TrainingPair> pairs;
  pairs.reserve(selected.size());
  for (const auto& item : selected) {
    if (!item.prediction.parse_ok || !item.prediction.answer || !item.prediction.rationale) {
      throw PreconditionError("cannot augment with unparsed prediction '" + item.instance.id + "'");
    }
    pairs.push_back({promptgen::render_prompt(tmpl, item.instance),
                     promptgen::render_target(tmpl, item.instance, *item.prediction.answer,
                                              *item.prediction.rationale)});
  }
  return pairs;
}

ModelHandle train(backend::Trainer& trainer, std::span<const backend::TrainingPair> pairs,
                  const TrainConfig& config, Stage stage, Task task, int episode_id) {
  if (stage == Stage::M0) throw PreconditionError("the base model M0 is not trained");
  if (pairs.empty()) {
    throw PreconditionError("cannot train " + std::string(stage_name(stage)) + " on an empty dataset");
  }
  ModelHandle handle;
  handle.stage = stage;
  handle.episode_id = episode_id;
  handle.config_digest = config.digest(stage);
  handle.dataset_digest = dataset_digest(pairs);
  handle.name = std::string(task_key(task)) + "-ep" + std::to_string(episode_id) + "-" +
                std::string(stage_name(stage)) + "-" +
                sha256_hex(handle.config_digest + handle.dataset_digest).substr(0, 16);

  backend::TrainRequest request;
  request.base_model = config.base_model;
  request.name = handle.name;
  request.pairs.assign(pairs.begin(), pairs.end());
  request.hyperparameters = config.hyperparameters(stage);
  handle.model_id = trainer.train(request);
  return handle;
}

std::vector<Prediction> generate(backend::Generator& generator, const ModelHandle& model,
                                 std::span<const Instance> instances,
                                 const promptgen::PromptTemplate& tmpl,
                                 const backend::Decoding& decoding) {
  if (model.stage == Stage::M0) throw PreconditionError("generation requires a trained model (M1 or M2)");
  if (instances.empty()) return {};
  std::vector<std::string> prompts;
  prompts.reserve(instances.size());
  for (const auto& instance : instances) {
    if (instance.task() != tmpl.task) {
      throw PreconditionError("generate: instance '" + instance.id + "' is not a " +
                              std::string(task_key(tmpl.task)) + " instance");
    }
    prompts.push_back(promptgen::render_prompt(tmpl, instance));
  }
  const auto texts = generator.generate(model.model_id, prompts, decoding);
  if (texts.size() != instances.size()) {
    throw BackendError(generator.name(), "returned " + std::to_string(texts.size()) + " texts for " +
                                             std::to_string(instances.size()) + " prompts");
  }
  std::vector<Prediction> predictions;
  predictions.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    predictions.push_back(promptgen::parse_prediction(tmpl, texts[i], instances[i]));
  }
  return predictions;
}

std::vector<approx::ScoredPrediction> balance(std::span<const approx::ScoredPrediction> selected,
                                              std::uint64_t seed, BalanceMode mode) {
  if (selected.empty()) return {};
  const Task task = selected.front().instance.task();
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const auto& item = selected[i];
    if (item.instance.task() != task) throw PreconditionError("balance: items span several tasks");
    if (!item.prediction.answer) {
      throw PreconditionError("balance: item '" + item.instance.id + "' has no predicted class");
    }
    by_class[item.prediction.answer->index].push_back(i);
  }

  std::size_t m = selected.size();
  for (const auto& [_, members] : by_class) m = std::min(m, members.size());

  std::vector<bool> keep(selected.size(), false);
  std::mt19937_64 rng(seed);
  for (auto& [_, members] : by_class) {
    if (mode == BalanceMode::TopScore) {
      std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = selected[a];
        const auto& y = selected[b];
        if (x.pseudo_plausibility != y.pseudo_plausibility) {
          return x.pseudo_plausibility > y.pseudo_plausibility;
        }
        return x.instance.id < y.instance.id;
      });
      for (std::size_t j = 0; j < m; ++j) keep[members[j]] = true;
    } else {
      std::vector<std::size_t> sampled;
      std::sample(members.begin(), members.end(), std::back_inserter(sampled), m, rng);
      for (std::size_t index : sampled) keep[index] = true;
    }
  }

  std::vector<approx::ScoredPrediction> out;
  out.reserve(m * by_class.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (keep[i]) out.push_back(selected[i]);
  }
  return out;
}

json to_json(const SelectionReport& report) {
  return {{"pool_size", report.pool_size},
          {"scored", report.scored},
          {"selected_before_balance", report.selected_before_balance},
          {"selected_after_balance", report.selected_after_balance},
          {"per_class_before", report.per_class_before},
          {"per_class_after", report.per_class_after},
          {"alpha", report.alpha},
          {"strategy", report.strategy}};
}

SelectionReport selection_report_from_json(const json& doc) {
  SelectionReport report;
  try {
    report.pool_size = doc.at("pool_size").get<std::size_t>();
    report.scored = doc.at("scored").get<std::size_t>();
    report.selected_before_balance = doc.at("selected_before_balance").get<std::size_t>();
    report.selected_after_balance = doc.at("selected_after_balance").get<std::size_t>();
    report.per_class_before = doc.at("per_class_before").get<std::map<std::string, std::size_t>>();
    report.per_class_after = doc.at("per_class_after").get<std::map<std::string, std::size_t>>();
    report.alpha = doc.at("alpha").get<double>();
    report.strategy = doc.at("strategy").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid selection report: ") + e.what());
  }
  return report;
}

json to_json(const EpisodeResult& result) {
  json outcomes = json::array();
  for (const auto& o : result.outcomes) {
    outcomes.push_back({{"id", o.instance_id}, {"m1_correct", o.m1_correct}, {"m2_correct", o.m2_correct}});
  }
  return {{"episode_id", result.episode_id},
          {"task", std::string(task_key(result.task))},
          {"alpha", result.alpha},
          {"relaxed", result.relaxed},
          {"no_augmentation", result.no_augmentation},
          {"m1", stage_metrics_to_json(result.m1)},
          {"m2", stage_metrics_to_json(result.m2)},
          {"selection", to_json(result.selection)},
          {"digests", result.digests},
          {"outcomes", std::move(outcomes)}};
}

EpisodeResult episode_result_from_json(const json& doc) {
  EpisodeResult result;
  try {
    result.episode_id = doc.at("episode_id").get<int>();
    result.task = task_from_key(doc.at("task").get<std::string>());
    result.alpha = doc.at("alpha").get<double>();
    result.relaxed = doc.at("relaxed").get<bool>();
    result.no_augmentation = doc.at("no_augmentation").get<bool>();
    result.m1 = stage_metrics_from_json(doc.at("m1"));
    result.m2 = stage_metrics_from_json(doc.at("m2"));
    result.selection = selection_report_from_json(doc.at("selection"));
    result.digests = doc.at("digests").get<std::map<std::string, std::string>>();
    for (const auto& o : doc.at("outcomes")) {
      result.outcomes.push_back(
          {o.at("id").get<std::string>(), o.at("m1_correct").get<bool>(), o.at("m2_correct").get<bool>()});
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid episode result: ") + e.what());
  }
  return result;
}

EpisodeResult run_episode(const EpisodeRun& run, const EpisodeBackends& backends) {
  if (run.episode == nullptr || run.pool == nullptr) {
    throw PreconditionError("run_episode: episode and pool are required");
  }
  if (!backends.trainer || !backends.generator || !backends.approximator || !backends.embedding) {
    throw PreconditionError("run_episode: all four backends are required");
  }
  const corpus::Episode& episode = *run.episode;
  const corpus::UnlabeledPool& pool = *run.pool;
  const auto& tmpl = run.prompt_template;
  const int id = episode.episode_id;
  auto progress = [&](std::string_view stage, std::size_t count) {
    if (run.progress) run.progress(stage, id, count);
  };
  if (tmpl.task != episode.task) throw PreconditionError("run_episode: template task mismatch");
  if (pool.episode_id() != id) throw PreconditionError("run_episode: pool belongs to another episode");
  promptgen::validate_template(tmpl);

  // The pipeline only ever sees the masked pool.
  const std::vector<Instance> pool_view = pool.pipeline_view();
  {
    std::unordered_set<std::string> test_ids;
    for (const auto& instance : episode.test) test_ids.insert(instance.id);
    for (const auto& instance : pool_view) {
      if (test_ids.count(instance.id)) {
        throw PreconditionError("pool instance '" + instance.id + "' also appears in the test split");
      }
    }
  }

  const json inputs = {
      {"train", instances_to_json(episode.train)},
      {"test", instances_to_json(episode.test)},
      {"pool", instances_to_json(pool_view)},
      {"config", to_json(run.config)},
      {"template",
       {{"input_pattern", tmpl.input_pattern},
        {"target_pattern", tmpl.target_pattern},
        {"separator", tmpl.separator}}},
      {"alpha", run.alpha},
      {"balance_mode", run.balance_mode == BalanceMode::TopScore ? "top-score" : "random"}};
  const std::string inputs_digest = json_digest(inputs);

  const CheckpointDir ck = run.checkpoint_dir ? CheckpointDir(*run.checkpoint_dir) : CheckpointDir();
  if (auto manifest = ck.read_json("manifest.json")) {
    if (manifest->value("inputs_digest", std::string()) != inputs_digest) {
      throw Error("checkpoint directory " + ck.root()->string() +
                  " holds artifacts from a run with different inputs");
    }
  } else {
    ck.write_json("manifest.json", {{"episode_id", id},
                                    {"task", std::string(task_key(episode.task))},
                                    {"inputs_digest", inputs_digest}});
  }
  if (auto done = ck.read_json("result.json")) {
    progress("resume-complete", 0);
    return episode_result_from_json(*done);
  }

  // Stage one.
  const auto train_pairs = render_training_pairs(tmpl, episode.train);
  const ModelHandle m1 = stage_model(ck, "m1.json", [&] {
    progress("train-m1", train_pairs.size());
    return train(*backends.trainer, train_pairs, run.config, Stage::M1, episode.task, id);
  });

  // Judge.
  progress("generate-pool", pool_view.size());
  const auto pool_predictions = stage_generations(ck, "pool_generations.jsonl", *backends.generator, m1,
                                                  pool_view, tmpl, run.config.decoding);
  std::vector<approx::ScoredPrediction> scored;
  if (auto records = ck.read_jsonl("scored.jsonl")) {
    if (records->size() != pool_view.size()) throw DataError("checkpoint scored.jsonl is incomplete");
    for (std::size_t i = 0; i < pool_view.size(); ++i) {
      scored.push_back(approx::scored_from_audit_json((*records)[i], pool_view[i]));
    }
  } else {
    progress("score-pool", pool_view.size());
    scored = backends.approximator->score_all(pool_view, pool_predictions);
    std::vector<json> audit;
    audit.reserve(scored.size());
    for (const auto& item : scored) audit.push_back(approx::to_audit_json(item));
    ck.write_jsonl("scored.jsonl", audit);
  }

  const auto selected = approx::select(scored, approx::Strategy::Zara, {run.alpha, std::nullopt, 0});
  const auto balanced = balance(selected, derive_seed(run.config.seed, kBalanceStream + 16 * static_cast<std::uint64_t>(id)),
                                run.balance_mode);

  SelectionReport report;
  report.pool_size = pool_view.size();
  report.scored = static_cast<std::size_t>(
      std::count_if(scored.begin(), scored.end(), [](const auto& s) { return s.selectable(); }));
  report.selected_before_balance = selected.size();
  report.selected_after_balance = balanced.size();
  report.per_class_before = class_histogram(episode.task, selected);
  report.per_class_after = class_histogram(episode.task, balanced);
  report.alpha = run.alpha;
  report.strategy = std::string(approx::strategy_name(approx::Strategy::Zara));
  {
    json doc = to_json(report);
    json ids = json::array();
    for (const auto& item : balanced) ids.push_back(item.instance.id);
    doc["augmented_ids"] = std::move(ids);
    ck.write_json("selection_report.json", doc);
  }
  progress("select", balanced.size());

  // Stage two: retrain from the base model on gold + pseudo-parallel data.
  const auto augmented_pairs = render_augmented_pairs(tmpl, balanced);
  std::vector<backend::TrainingPair> m2_pairs = train_pairs;
  m2_pairs.insert(m2_pairs.end(), augmented_pairs.begin(), augmented_pairs.end());
  const ModelHandle m2 = stage_model(ck, "m2.json", [&] {
    progress("train-m2", m2_pairs.size());
    return train(*backends.trainer, m2_pairs, run.config, Stage::M2, episode.task, id);
  });

  // Evaluation.
  progress("generate-test", episode.test.size());
  const auto test_m1 = stage_generations(ck, "test_m1_generations.jsonl", *backends.generator, m1,
                                         episode.test, tmpl, run.config.decoding);
  const auto test_m2 = stage_generations(ck, "test_m2_generations.jsonl", *backends.generator, m2,
                                         episode.test, tmpl, run.config.decoding);

  EpisodeResult result;
  result.episode_id = id;
  result.task = episode.task;
  result.alpha = run.alpha;
  result.relaxed = episode.relaxed;
  result.no_augmentation = balanced.empty();
  result.selection = report;
  result.m1 = {m1, eval::accuracy(test_m1, episode.test),
               eval::explanation_score(test_m1, episode.test, *backends.embedding)};
  result.m2 = {m2, eval::accuracy(test_m2, episode.test),
               eval::explanation_score(test_m2, episode.test, *backends.embedding)};
  const auto m1_flags = eval::correctness(test_m1, episode.test);
  const auto m2_flags = eval::correctness(test_m2, episode.test);
  for (std::size_t i = 0; i < episode.test.size(); ++i) {
    result.outcomes.push_back({episode.test[i].id, m1_flags[i], m2_flags[i]});
  }
  result.digests = {{"inputs", inputs_digest},
                    {"train_pairs", dataset_digest(train_pairs)},
                    {"augmented_pairs", dataset_digest(augmented_pairs)},
                    {"m2_training_set", dataset_digest(m2_pairs)},
                    {"pool", json_digest(inputs.at("pool"))}};
  ck.write_json("result.json", to_json(result));
  progress("done", episode.test.size());
  return result;
}

}  // namespace zara::selftrain
