#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>

#include "zara/backend.hpp"
#include "zara/promptgen.hpp"
#include "zara/types.hpp"

// Deterministic in-process stand-ins for the model backends. They implement
// the same interfaces and wire schemas as the real services so the whole
// pipeline can run without any model weights.
namespace zara::backend::mock {

enum class OverlapKind {
  Containment,  // |H ∩ P| / |H|
  Jaccard,      // |H ∩ P| / |H ∪ P|
  Dice,         // 2|H ∩ P| / (|H| + |P|)
};

/// Keyword-overlap NLI judgement. The class receiving the overlap mass is
/// neutral if the premise hedges ("unclear", "whether", ...), contradiction if
/// it negates ("not", "never", ...), entailment otherwise.
RawDistribution overlap_distribution(std::string_view premise, std::string_view hypothesis,
                                     OverlapKind kind);

std::shared_ptr<NliScorer> make_nli_scorer(OverlapKind kind, std::string name);

/// Token-set Jaccard similarity; identical texts score 1.
std::shared_ptr<EmbeddingScorer> make_embedding_scorer();

/// Returns ids of the form "mock-model:<run name>:n=<pair count>".
std::shared_ptr<Trainer> make_trainer();

/// Maps rendered prompts back to the (gold-bearing) instance they came from,
/// which is what lets the mock generator "know" answers the way a trained
/// model would.
class PromptIndex {
 public:
  void add(std::string prompt, Instance instance);
  const Instance* find(const std::string& prompt) const;
  std::size_t size() const { return by_prompt_.size(); }

 private:
  std::unordered_map<std::string, Instance> by_prompt_;
};

/// Probability that a mock model trained on `training_pairs` examples
/// answers correctly. Increases with training-set size.
double model_quality(std::size_t training_pairs);

/// Emits targets rendered with `tmpl` ("<answer> because <rationale>" by
/// default). Whether the answer is right is a fixed function of (prompt,
/// model quality), so a model trained on more pairs is right on a superset of
/// the prompts a smaller one gets right.
std::shared_ptr<Generator> make_generator(std::shared_ptr<const PromptIndex> index,
                                          promptgen::PromptTemplate tmpl);

/// Rationale text the overlap scorers rate as plausible for `label`.
std::string plausible_rationale(const Instance& instance, Label label);
/// Generic rationale the overlap scorers rate as implausible.
std::string implausible_rationale();

/// Uniform value in [0, 1) derived from FNV-1a of the text.
double hash_unit(std::string_view text);

/// Trainer, generator, three overlap NLI scorers and the embedding scorer.
BackendSet make_backend_set(std::shared_ptr<const PromptIndex> index,
                            const promptgen::PromptTemplate& tmpl);

}  // namespace zara::backend::mock
