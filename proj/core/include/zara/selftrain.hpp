#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zara/approximator.hpp"
#include "zara/backend.hpp"
#include "zara/corpus.hpp"
#include "zara/promptgen.hpp"

namespace zara::selftrain {

enum class Stage { M0, M1, M2 };
std::string_view stage_name(Stage stage);

inline constexpr int kStageTwoMaxEpochs = 48;

struct TrainConfig {
  std::string base_model = "base";
  // Stage-one hyperparameters, passed through to the trainer untouched.
  nlohmann::json stage_one = nlohmann::json::object();
  int stage_two_max_epochs = kStageTwoMaxEpochs;
  std::uint64_t seed = 0;
  backend::Decoding decoding;

  /// Stage one: the configured values plus the seed. Stage two: the same,
  /// with max_epochs overridden.
  nlohmann::json hyperparameters(Stage stage) const;
  /// Independent of key insertion order.
  std::string digest(Stage stage) const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc);

struct ModelHandle {
  std::string model_id;  // as returned by the trainer
  Stage stage = Stage::M1;
  int episode_id = 0;
  std::string config_digest;
  std::string dataset_digest;
  std::string name;  // "<task>-ep<id>-<stage>-<digest prefix>"

  friend bool operator==(const ModelHandle&, const ModelHandle&) = default;
};

nlohmann::json to_json(const ModelHandle& handle);
ModelHandle model_handle_from_json(const nlohmann::json& doc);

std::string dataset_digest(std::span<const backend::TrainingPair> pairs);

/// Gold (prompt, target) pairs for training instances.
std::vector<backend::TrainingPair> render_training_pairs(const promptgen::PromptTemplate& tmpl,
                                                         std::span<const Instance> instances);

/// Pseudo-parallel pairs: the instance prompt with the generated answer and
/// rationale in the gold target slots.
std::vector<backend::TrainingPair> render_augmented_pairs(
    const promptgen::PromptTemplate& tmpl, std::span<const approx::ScoredPrediction> selected);

/// Trains `stage` from the base model on `pairs`. Throws PreconditionError on
/// an empty dataset and BackendError when the trainer fails.
ModelHandle train(backend::Trainer& trainer, std::span<const backend::TrainingPair> pairs,
                  const TrainConfig& config, Stage stage, Task task, int episode_id);

/// One parsed prediction per instance, in order. All-or-nothing: a backend
/// failure throws and nothing is returned.
std::vector<Prediction> generate(backend::Generator& generator, const ModelHandle& model,
                                 std::span<const Instance> instances,
                                 const promptgen::PromptTemplate& tmpl,
                                 const backend::Decoding& decoding);

enum class BalanceMode {
  TopScore,  // keep the highest-scoring items of each class (ties by id)
  Random,    // keep a seeded uniform sample of each class
};

/// Downsamples every predicted class to the size of the smallest class
/// present. Kept items stay in input order.
std::vector<approx::ScoredPrediction> balance(std::span<const approx::ScoredPrediction> selected,
                                              std::uint64_t seed,
                                              BalanceMode mode = BalanceMode::TopScore);

struct SelectionReport {
  std::size_t pool_size = 0;
  std::size_t scored = 0;
  std::size_t selected_before_balance = 0;
  std::size_t selected_after_balance = 0;
  std::map<std::string, std::size_t> per_class_before;
  std::map<std::string, std::size_t> per_class_after;
  double alpha = 0.0;
  std::string strategy = "zara";

  friend bool operator==(const SelectionReport&, const SelectionReport&) = default;
};

nlohmann::json to_json(const SelectionReport& report);
SelectionReport selection_report_from_json(const nlohmann::json& doc);

struct StageMetrics {
  ModelHandle model;
  double accuracy = 0.0;
  double explanation_score = 0.0;
};

struct TestOutcome {
  std::string instance_id;
  bool m1_correct = false;
  bool m2_correct = false;
};

struct EpisodeResult {
  int episode_id = 0;
  Task task = Task::ComVE;
  double alpha = 0.0;
  bool relaxed = false;
  bool no_augmentation = false;
  StageMetrics m1;
  StageMetrics m2;
  SelectionReport selection;
  std::map<std::string, std::string> digests;
  std::vector<TestOutcome> outcomes;
};

nlohmann::json to_json(const EpisodeResult& result);
EpisodeResult episode_result_from_json(const nlohmann::json& doc);

struct EpisodeBackends {
  backend::Trainer* trainer = nullptr;
  backend::Generator* generator = nullptr;
  const approx::Approximator* approximator = nullptr;
  backend::EmbeddingScorer* embedding = nullptr;
};

/// Line-oriented progress hook: (stage, episode id, item count).
using ProgressFn = std::function<void(std::string_view stage, int episode_id, std::size_t count)>;

struct EpisodeRun {
  const corpus::Episode* episode = nullptr;
  const corpus::UnlabeledPool* pool = nullptr;
  TrainConfig config;
  promptgen::PromptTemplate prompt_template;
  double alpha = 0.0;
  BalanceMode balance_mode = BalanceMode::TopScore;
  // Stage artifacts are read from / written to this directory when set.
  std::optional<std::filesystem::path> checkpoint_dir;
  ProgressFn progress;
};

/// Train M1 on the gold split, generate on the masked pool, score and keep
/// items above alpha, balance, retrain from the base model on gold plus
/// selections (M2), and evaluate M1 and M2 on the test split.
///
/// With a checkpoint directory every finished stage is persisted; a rerun
/// resumes after the last finished stage and a completed episode is returned
/// without any backend call. Throws Error if the directory holds artifacts of
/// a run with different inputs.
EpisodeResult run_episode(const EpisodeRun& run, const EpisodeBackends& backends);

}  // namespace zara::selftrain
