#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "zara/approximator.hpp"
#include "zara/backend.hpp"
#include "zara/error.hpp"
#include "zara/types.hpp"

namespace zara::testing {

inline Instance comve(std::string id, std::string c1, std::string c2, std::optional<int> label = std::nullopt,
                      std::optional<std::string> rationale = std::nullopt) {
  Instance i;
  i.id = std::move(id);
  i.content = ComVEContent{std::move(c1), std::move(c2)};
  if (label) i.gold_label = Label{*label};
  i.gold_rationale = std::move(rationale);
  return i;
}

inline Instance sbic(std::string id, std::string post, std::optional<int> label = std::nullopt,
                     std::optional<std::string> rationale = std::nullopt) {
  Instance i;
  i.id = std::move(id);
  i.content = SBICContent{std::move(post)};
  if (label) i.gold_label = Label{*label};
  i.gold_rationale = std::move(rationale);
  return i;
}

inline Instance esnli(std::string id, std::string premise, std::string hypothesis,
                      std::optional<int> label = std::nullopt,
                      std::optional<std::string> rationale = std::nullopt) {
  Instance i;
  i.id = std::move(id);
  i.content = ESNLIContent{std::move(premise), std::move(hypothesis)};
  if (label) i.gold_label = Label{*label};
  i.gold_rationale = std::move(rationale);
  return i;
}

inline Instance ecqa(std::string id, std::string question, std::array<std::string, 5> choices,
                     std::optional<int> label = std::nullopt,
                     std::optional<std::string> rationale = std::nullopt) {
  Instance i;
  i.id = std::move(id);
  i.content = ECQAContent{std::move(question), std::move(choices)};
  if (label) i.gold_label = Label{*label};
  i.gold_rationale = std::move(rationale);
  return i;
}

/// One representative instance per task with gold fields.
inline Instance sample_instance(Task task, const std::string& id) {
  switch (task) {
    case Task::ComVE:
      return comve(id, "i drove my car to the gas station.", "i drove my computer to the gas station.", 1,
                   "you can't drive a computer.");
    case Task::SBIC:
      return sbic(id, "just when i thought women couldn't get any stupider.", 0,
                  "this post implies that women are stupid.");
    case Task::ESNLI:
      return esnli(id, "a woman in a black mesh skirt plays acoustic guitar.", "a woman is wearing black.", 0,
                   "The woman is wearing a black mesh, she is wearing black.");
    case Task::ECQA:
      return ecqa(id, "what is a place that has a bench nestled in trees?",
                  {"state park", "bus stop", "bus depot", "statue", "train station"}, 0,
                  "state park is a protected public garden.");
  }
  return {};
}

inline Prediction parsed(const Instance& instance, int label, std::string rationale) {
  Prediction p;
  p.instance_id = instance.id;
  p.answer = Label{label};
  p.rationale = std::move(rationale);
  p.parse_ok = true;
  p.raw_text = "<test>";
  return p;
}

/// A scored, selectable item with a chosen score and predicted label.
inline approx::ScoredPrediction scored_item(Task task, std::string id, int label, double score) {
  approx::ScoredPrediction s;
  s.instance = without_gold(sample_instance(task, id));
  s.prediction = parsed(s.instance, label, "because of reasons");
  s.query = nlimap::NliQuery{"p", "h", nlimap::NliClass::Entailment, s.instance.id};
  s.ensemble = approx::ClassDistribution();
  s.pseudo_plausibility = score;
  return s;
}

/// NLI scorer returning a fixed distribution.
class FixedScorer : public backend::NliScorer {
 public:
  FixedScorer(std::string name, backend::RawDistribution d) : name_(std::move(name)), d_(d) {}
  const std::string& name() const override { return name_; }
  backend::RawDistribution classify(std::string_view, std::string_view) override {
    ++calls;
    return d_;
  }
  std::atomic<int> calls{0};

 private:
  std::string name_;
  backend::RawDistribution d_;
};

/// Scorer that always throws.
class FailingScorer : public backend::NliScorer {
 public:
  explicit FailingScorer(std::string name) : name_(std::move(name)) {}
  const std::string& name() const override { return name_; }
  backend::RawDistribution classify(std::string_view, std::string_view) override {
    throw BackendError(name_, "injected failure");
  }

 private:
  std::string name_;
};

/// Counts calls and optionally fails every call after the first `budget`.
class FlakyGenerator : public backend::Generator {
 public:
  FlakyGenerator(std::shared_ptr<backend::Generator> inner, int budget)
      : inner_(std::move(inner)), budget_(budget) {}
  const std::string& name() const override { return inner_->name(); }
  std::vector<std::string> generate(const std::string& model_id, std::span<const std::string> prompts,
                                    const backend::Decoding& decoding) override {
    if (budget_ >= 0 && calls >= budget_) throw BackendError(name(), "injected failure");
    ++calls;
    return inner_->generate(model_id, prompts, decoding);
  }
  int calls = 0;

 private:
  std::shared_ptr<backend::Generator> inner_;
  int budget_;
};

class CountingTrainer : public backend::Trainer {
 public:
  explicit CountingTrainer(std::shared_ptr<backend::Trainer> inner) : inner_(std::move(inner)) {}
  const std::string& name() const override { return inner_->name(); }
  std::string train(const backend::TrainRequest& request) override {
    ++calls;
    requests.push_back(request);
    return inner_->train(request);
  }
  int calls = 0;
  std::vector<backend::TrainRequest> requests;

 private:
  std::shared_ptr<backend::Trainer> inner_;
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("zara-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace zara::testing
