#include "zara/mock_backend.hpp"

#include <algorithm>
#include <set>

#include "zara/error.hpp"
#include "zara/text.hpp"

namespace zara::backend::mock {

namespace {

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> kWords = {
      "a",   "an",  "the",  "is",  "are",      "was",    "were", "of",     "to",
      "in",  "on",  "at",   "and", "or",       "that",   "this", "it",     "be",
      "by",  "for", "with", "so",  "because",  "post",   "answer", "question", "its"};
  return kWords;
}

bool contains_any(const std::set<std::string, std::less<>>& tokens,
                  std::initializer_list<std::string_view> words) {
  return std::any_of(words.begin(), words.end(),
                     [&](std::string_view w) { return tokens.find(w) != tokens.end(); });
}

// Lowercase alphanumeric runs; apostrophes stay inside words ("can't").
std::set<std::string, std::less<>> tokenize(std::string_view s, bool drop_stopwords) {
  std::set<std::string, std::less<>> tokens;
  std::string current;
  auto flush = [&] {
    while (!current.empty() && current.back() == '\'') current.pop_back();
    if (!current.empty() && !(drop_stopwords && stopwords().count(current))) tokens.insert(current);
    current.clear();
  };
  for (char raw : s) {
    const char c = (raw >= 'A' && raw <= 'Z') ? static_cast<char>(raw - 'A' + 'a') : raw;
    const bool word = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                      (c == '\'' && !current.empty()) || static_cast<unsigned char>(c) >= 0x80;
    if (word) {
      current.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::size_t intersection_size(const std::set<std::string, std::less<>>& a,
                              const std::set<std::string, std::less<>>& b) {
  std::size_t n = 0;
  for (const auto& t : a) n += b.count(t);
  return n;
}

class OverlapScorer final : public NliScorer {
 public:
  OverlapScorer(OverlapKind kind, std::string name) : kind_(kind), name_(std::move(name)) {}
  const std::string& name() const override { return name_; }
  RawDistribution classify(std::string_view premise, std::string_view hypothesis) override {
    if (premise.empty() || hypothesis.empty()) {
      throw BackendError(name_, "schema violation: premise and hypothesis must be non-empty");
    }
    return overlap_distribution(premise, hypothesis, kind_);
  }

 private:
  OverlapKind kind_;
  std::string name_;
};

class JaccardEmbeddingScorer final : public EmbeddingScorer {
 public:
  const std::string& name() const override { return name_; }
  std::vector<double> similarity(std::span<const std::string> candidates,
                                 std::span<const std::string> references) override {
    if (candidates.size() != references.size()) {
      throw BackendError(name_, "schema violation: candidates and references differ in length");
    }
    std::vector<double> out;
    out.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto a = tokenize(candidates[i], false);
      const auto b = tokenize(references[i], false);
      if (a.empty() && b.empty()) {
        out.push_back(1.0);
        continue;
      }
      const std::size_t shared = intersection_size(a, b);
      out.push_back(static_cast<double>(shared) / static_cast<double>(a.size() + b.size() - shared));
    }
    return out;
  }

 private:
  std::string name_ = "mock:embedding-jaccard";
};

constexpr std::string_view kModelPrefix = "mock-model:";

class MockTrainer final : public Trainer {
 public:
  const std::string& name() const override { return name_; }
  std::string train(const TrainRequest& request) override {
    if (request.pairs.empty()) throw BackendError(name_, "schema violation: 'pairs' must be non-empty");
    return std::string(kModelPrefix) + request.name + ":n=" + std::to_string(request.pairs.size());
  }

 private:
  std::string name_ = "mock:trainer";
};

std::size_t training_size_of(const std::string& model_id, const std::string& endpoint) {
  const auto pos = model_id.rfind(":n=");
  if (!model_id.starts_with(kModelPrefix) || pos == std::string::npos) {
    throw BackendError(endpoint, "unknown model id '" + model_id + "'");
  }
  try {
    return static_cast<std::size_t>(std::stoull(model_id.substr(pos + 3)));
  } catch (const std::exception&) {
    throw BackendError(endpoint, "unknown model id '" + model_id + "'");
  }
}

class MockGenerator final : public Generator {
 public:
  MockGenerator(std::shared_ptr<const PromptIndex> index, promptgen::PromptTemplate tmpl)
      : index_(std::move(index)), template_(std::move(tmpl)) {}

  const std::string& name() const override { return name_; }

  std::vector<std::string> generate(const std::string& model_id, std::span<const std::string> prompts,
                                    const Decoding&) override {
    const double quality = model_quality(training_size_of(model_id, name_));
    std::vector<std::string> texts;
    texts.reserve(prompts.size());
    for (const auto& prompt : prompts) texts.push_back(generate_one(prompt, quality));
    return texts;
  }

 private:
  std::string generate_one(const std::string& prompt, double quality) const {
    const Instance* instance = index_->find(prompt);
    if (instance == nullptr) return "i do not know";
    const Task task = instance->task();
    const int classes = static_cast<int>(class_count(task));

    const double u_correct = hash_unit(prompt);
    const double u_style = hash_unit(prompt + "#style");
    const auto h_wrong = static_cast<int>(hash_unit(prompt + "#wrong") * (classes - 1));

    Label gold = instance->gold_label.value_or(Label{static_cast<int>(hash_unit(prompt + "#gold") * classes)});
    const bool correct = u_correct < quality;
    const Label answer = correct ? gold : Label{(gold.index + 1 + h_wrong) % classes};

    // A few outputs are malformed, some right answers get weak rationales and
    // some wrong answers get convincing ones.
    if (u_style < 0.03) return answer_text(*instance, answer) + " and nothing else";
    const bool convincing = correct ? u_style >= 0.12 : u_style >= 0.75;
    const std::string rationale =
        convincing ? plausible_rationale(*instance, answer) : implausible_rationale();
    return promptgen::render_target(template_, *instance, answer, rationale);
  }

  std::shared_ptr<const PromptIndex> index_;
  promptgen::PromptTemplate template_;
  std::string name_ = "mock:generator";
};

}  // namespace

double hash_unit(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  // Final avalanche so nearby strings spread over the unit interval.
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

RawDistribution overlap_distribution(std::string_view premise, std::string_view hypothesis,
                                     OverlapKind kind) {
  const auto p = tokenize(premise, true);
  const auto h = tokenize(hypothesis, true);
  const auto shared = static_cast<double>(intersection_size(h, p));
  double overlap = 0.0;
  switch (kind) {
    case OverlapKind::Containment:
      overlap = h.empty() ? 0.0 : shared / static_cast<double>(h.size());
      break;
    case OverlapKind::Jaccard: {
      const double uni = static_cast<double>(h.size() + p.size()) - shared;
      overlap = uni == 0.0 ? 0.0 : shared / uni;
      break;
    }
    case OverlapKind::Dice: {
      const double total = static_cast<double>(h.size() + p.size());
      overlap = total == 0.0 ? 0.0 : 2.0 * shared / total;
      break;
    }
  }

  const auto premise_all = tokenize(premise, false);
  int signal = 0;  // entailment
  if (contains_any(premise_all, {"unclear", "whether", "maybe", "might", "perhaps"})) {
    signal = 1;
  } else if (contains_any(premise_all,
                          {"not", "no", "never", "cannot", "can't", "isn't", "nothing"})) {
    signal = 2;
  }

  const double mass = 0.05 + 0.9 * overlap;
  const double rest = 1.0 - mass;
  RawDistribution d{};
  d[static_cast<std::size_t>(signal)] = mass;
  if (signal == 1) {
    d[0] = rest / 2.0;
    d[2] = rest - d[0];
  } else {
    d[1] = 0.6 * rest;
    d[signal == 0 ? 2 : 0] = rest - d[1];
  }
  return d;
}

std::shared_ptr<NliScorer> make_nli_scorer(OverlapKind kind, std::string name) {
  return std::make_shared<OverlapScorer>(kind, std::move(name));
}

std::shared_ptr<EmbeddingScorer> make_embedding_scorer() {
  return std::make_shared<JaccardEmbeddingScorer>();
}

std::shared_ptr<Trainer> make_trainer() { return std::make_shared<MockTrainer>(); }

void PromptIndex::add(std::string prompt, Instance instance) {
  by_prompt_.insert_or_assign(std::move(prompt), std::move(instance));
}

const Instance* PromptIndex::find(const std::string& prompt) const {
  auto it = by_prompt_.find(prompt);
  return it == by_prompt_.end() ? nullptr : &it->second;
}

double model_quality(std::size_t training_pairs) {
  const double n = static_cast<double>(training_pairs);
  return 0.5 + 0.45 * n / (n + 40.0);
}

std::shared_ptr<Generator> make_generator(std::shared_ptr<const PromptIndex> index,
                                          promptgen::PromptTemplate tmpl) {
  return std::make_shared<MockGenerator>(std::move(index), std::move(tmpl));
}

std::string plausible_rationale(const Instance& instance, Label label) {
  return std::visit(
      [&](const auto& content) -> std::string {
        using T = std::decay_t<decltype(content)>;
        if constexpr (std::is_same_v<T, ComVEContent>) {
          return "it is not possible that " + (label.index == 0 ? content.choice1 : content.choice2);
        } else if constexpr (std::is_same_v<T, SBICContent>) {
          return "the post " + content.post + (label.index == 0 ? " is hurtful" : " is harmless");
        } else if constexpr (std::is_same_v<T, ESNLIContent>) {
          switch (label.index) {
            case 0: return "which shows " + content.hypothesis;
            case 1: return "it is unclear whether " + content.hypothesis;
            default: return "it is not true that " + content.hypothesis;
          }
        } else {
          return content.choices[static_cast<std::size_t>(label.index)] + " fits the question " +
                 content.question;
        }
      },
      instance.content);
}

std::string implausible_rationale() { return "this answer seems right."; }

BackendSet make_backend_set(std::shared_ptr<const PromptIndex> index,
                            const promptgen::PromptTemplate& tmpl) {
  BackendSet set;
  set.trainer = make_trainer();
  set.generator = make_generator(std::move(index), tmpl);
  set.nli = {make_nli_scorer(OverlapKind::Containment, "mock:nli-containment"),
             make_nli_scorer(OverlapKind::Jaccard, "mock:nli-jaccard"),
             make_nli_scorer(OverlapKind::Dice, "mock:nli-dice")};
  set.embedding = make_embedding_scorer();
  return set;
}

}  // namespace zara::backend::mock
