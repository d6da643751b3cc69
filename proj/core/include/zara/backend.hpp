#pragma once

#include <array>
#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace zara::backend {

/// Where a backend lives and how hard to try reaching it. The locator is
/// either "http://host:port[/prefix]" or "mock:<kind>" for in-process mocks.
struct Endpoint {
  std::string locator;
  std::string name;
  std::chrono::milliseconds timeout{60000};
  int retries = 2;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

bool is_mock_locator(std::string_view locator);

// Three-class distribution in (entailment, neutral, contradiction) order.
using RawDistribution = std::array<double, 3>;

class NliScorer {
 public:
  virtual ~NliScorer() = default;
  virtual const std::string& name() const = 0;
  virtual RawDistribution classify(std::string_view premise, std::string_view hypothesis) = 0;
};

struct TrainingPair {
  std::string prompt;
  std::string target;
  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

struct TrainRequest {
  std::string base_model;
  std::string name;  // deterministic run name, e.g. "comve-ep3-M1-<digest>"
  std::vector<TrainingPair> pairs;
  nlohmann::json hyperparameters = nlohmann::json::object();
};

class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual const std::string& name() const = 0;
  /// Returns the id under which the generator can address the new model.
  virtual std::string train(const TrainRequest& request) = 0;
};

struct Decoding {
  double temperature = 0.0;  // 0 = greedy
  int max_new_tokens = 128;
  friend bool operator==(const Decoding&, const Decoding&) = default;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual const std::string& name() const = 0;
  /// One text per prompt, in prompt order.
  virtual std::vector<std::string> generate(const std::string& model_id,
                                            std::span<const std::string> prompts,
                                            const Decoding& decoding) = 0;
};

class EmbeddingScorer {
 public:
  virtual ~EmbeddingScorer() = default;
  virtual const std::string& name() const = 0;
  /// Similarity in [0, 1] for each (candidate, reference) pair.
  virtual std::vector<double> similarity(std::span<const std::string> candidates,
                                         std::span<const std::string> references) = 0;
};

struct BackendSet {
  std::shared_ptr<Trainer> trainer;
  std::shared_ptr<Generator> generator;
  std::vector<std::shared_ptr<NliScorer>> nli;
  std::shared_ptr<EmbeddingScorer> embedding;
};

/// JSON request/response schemas shared by clients, mocks served over HTTP
/// and the model-serving sidecar. Parsers throw BackendError (with the given
/// endpoint name) on schema violations.
namespace wire {

inline constexpr std::string_view kNliPath = "/nli";
inline constexpr std::string_view kTrainPath = "/train";
inline constexpr std::string_view kGeneratePath = "/generate";
inline constexpr std::string_view kEmbedScorePath = "/embed_score";
inline constexpr std::string_view kHealthPath = "/health";

struct NliRequest {
  std::string premise;
  std::string hypothesis;
};
struct GenerateRequest {
  std::string model_id;
  std::vector<std::string> prompts;
  Decoding decoding;
};
struct EmbedScoreRequest {
  std::vector<std::string> candidates;
  std::vector<std::string> references;
};

nlohmann::json to_json(const NliRequest& request);
nlohmann::json to_json(const TrainRequest& request);
nlohmann::json to_json(const GenerateRequest& request);
nlohmann::json to_json(const EmbedScoreRequest& request);
nlohmann::json nli_response(const RawDistribution& distribution);
nlohmann::json train_response(const std::string& model_id);
nlohmann::json generate_response(std::span<const std::string> texts);
nlohmann::json embed_score_response(std::span<const double> scores);

NliRequest parse_nli_request(const nlohmann::json& body, const std::string& endpoint);
TrainRequest parse_train_request(const nlohmann::json& body, const std::string& endpoint);
GenerateRequest parse_generate_request(const nlohmann::json& body, const std::string& endpoint);
EmbedScoreRequest parse_embed_score_request(const nlohmann::json& body,
                                            const std::string& endpoint);

RawDistribution parse_nli_response(const nlohmann::json& body, const std::string& endpoint);
std::string parse_train_response(const nlohmann::json& body, const std::string& endpoint);
std::vector<std::string> parse_generate_response(const nlohmann::json& body,
                                                 const std::string& endpoint,
                                                 std::size_t expected);
std::vector<double> parse_embed_score_response(const nlohmann::json& body,
                                               const std::string& endpoint, std::size_t expected);

}  // namespace wire

// HTTP clients speaking the wire protocol. Each call retries transport
// failures and 5xx responses up to `retries` times, then throws BackendError
// naming the endpoint.
std::shared_ptr<NliScorer> make_http_nli_scorer(const Endpoint& endpoint);
std::shared_ptr<Trainer> make_http_trainer(const Endpoint& endpoint);
std::shared_ptr<Generator> make_http_generator(const Endpoint& endpoint);
std::shared_ptr<EmbeddingScorer> make_http_embedding_scorer(const Endpoint& endpoint);

/// GET /health; returns false instead of throwing.
bool probe_health(const Endpoint& endpoint);

}  // namespace zara::backend
