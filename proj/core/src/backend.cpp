#include "zara/backend.hpp"

#include <cmath>

#include "zara/error.hpp"

namespace zara::backend {

using nlohmann::json;

bool is_mock_locator(std::string_view locator) { return locator.starts_with("mock:"); }

namespace wire {

namespace {

[[noreturn]] void schema_error(const std::string& endpoint, const std::string& message) {
  throw BackendError(endpoint, "schema violation: " + message);
}

const json& require(const json& body, const char* key, const std::string& endpoint) {
  if (!body.is_object()) schema_error(endpoint, "payload is not an object");
  auto it = body.find(key);
  if (it == body.end()) schema_error(endpoint, std::string("missing '") + key + "'");
  return *it;
}

std::string require_string(const json& body, const char* key, const std::string& endpoint) {
  const json& value = require(body, key, endpoint);
  if (!value.is_string()) schema_error(endpoint, std::string("'") + key + "' must be a string");
  return value.get<std::string>();
}

std::vector<std::string> require_strings(const json& body, const char* key,
                                         const std::string& endpoint) {
  const json& value = require(body, key, endpoint);
  if (!value.is_array()) schema_error(endpoint, std::string("'") + key + "' must be an array");
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& item : value) {
    if (!item.is_string()) schema_error(endpoint, std::string("'") + key + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

double require_probability(const json& body, const char* key, const std::string& endpoint) {
  const json& value = require(body, key, endpoint);
  if (!value.is_number()) schema_error(endpoint, std::string("'") + key + "' must be a number");
  const double p = value.get<double>();
  if (!std::isfinite(p)) schema_error(endpoint, std::string("'") + key + "' is not finite");
  return p;
}

}  // namespace

json to_json(const NliRequest& request) {
  return {{"premise", request.premise}, {"hypothesis", request.hypothesis}};
}

json to_json(const TrainRequest& request) {
  json pairs = json::array();
  for (const auto& pair : request.pairs) {
    pairs.push_back({{"prompt", pair.prompt}, {"target", pair.target}});
  }
  return {{"base_model", request.base_model},
          {"name", request.name},
          {"pairs", std::move(pairs)},
          {"hyperparameters", request.hyperparameters}};
}

json to_json(const GenerateRequest& request) {
  return {{"model_id", request.model_id},
          {"prompts", request.prompts},
          {"decoding",
           {{"temperature", request.decoding.temperature},
            {"max_new_tokens", request.decoding.max_new_tokens}}}};
}

json to_json(const EmbedScoreRequest& request) {
  return {{"candidates", request.candidates}, {"references", request.references}};
}

json nli_response(const RawDistribution& distribution) {
  return {{"entailment", distribution[0]},
          {"neutral", distribution[1]},
          {"contradiction", distribution[2]}};
}

json train_response(const std::string& model_id) { return {{"model_id", model_id}}; }

json generate_response(std::span<const std::string> texts) {
  return {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
}

json embed_score_response(std::span<const double> scores) {
  return {{"scores", std::vector<double>(scores.begin(), scores.end())}};
}

NliRequest parse_nli_request(const json& body, const std::string& endpoint) {
  NliRequest request{require_string(body, "premise", endpoint),
                     require_string(body, "hypothesis", endpoint)};
  if (request.premise.empty()) schema_error(endpoint, "'premise' must be non-empty");
  if (request.hypothesis.empty()) schema_error(endpoint, "'hypothesis' must be non-empty");
  return request;
}

TrainRequest parse_train_request(const json& body, const std::string& endpoint) {
  TrainRequest request;
  request.base_model = require_string(body, "base_model", endpoint);
  if (auto it = body.find("name"); it != body.end() && it->is_string()) {
    request.name = it->get<std::string>();
  }
  const json& pairs = require(body, "pairs", endpoint);
  if (!pairs.is_array() || pairs.empty()) schema_error(endpoint, "'pairs' must be a non-empty array");
  for (const auto& pair : pairs) {
    request.pairs.push_back(
        {require_string(pair, "prompt", endpoint), require_string(pair, "target", endpoint)});
  }
  if (auto it = body.find("hyperparameters"); it != body.end()) {
    if (!it->is_object()) schema_error(endpoint, "'hyperparameters' must be an object");
    request.hyperparameters = *it;
  }
  return request;
}

GenerateRequest parse_generate_request(const json& body, const std::string& endpoint) {
  GenerateRequest request;
  request.model_id = require_string(body, "model_id", endpoint);
  request.prompts = require_strings(body, "prompts", endpoint);
  if (auto it = body.find("decoding"); it != body.end()) {
    if (!it->is_object()) schema_error(endpoint, "'decoding' must be an object");
    request.decoding.temperature = it->value("temperature", 0.0);
    request.decoding.max_new_tokens = it->value("max_new_tokens", 128);
  }
  return request;
}

EmbedScoreRequest parse_embed_score_request(const json& body, const std::string& endpoint) {
  EmbedScoreRequest request{require_strings(body, "candidates", endpoint),
                            require_strings(body, "references", endpoint)};
  if (request.candidates.size() != request.references.size()) {
    schema_error(endpoint, "'candidates' and 'references' differ in length");
  }
  return request;
}

RawDistribution parse_nli_response(const json& body, const std::string& endpoint) {
  return {require_probability(body, "entailment", endpoint),
          require_probability(body, "neutral", endpoint),
          require_probability(body, "contradiction", endpoint)};
}

std::string parse_train_response(const json& body, const std::string& endpoint) {
  std::string id = require_string(body, "model_id", endpoint);
  if (id.empty()) schema_error(endpoint, "'model_id' is empty");
  return id;
}

std::vector<std::string> parse_generate_response(const json& body, const std::string& endpoint,
                                                 std::size_t expected) {
  auto texts = require_strings(body, "texts", endpoint);
  if (texts.size() != expected) {
    schema_error(endpoint, "expected " + std::to_string(expected) + " texts, got " +
                               std::to_string(texts.size()));
  }
  return texts;
}

std::vector<double> parse_embed_score_response(const json& body, const std::string& endpoint,
                                               std::size_t expected) {
  const json& scores = require(body, "scores", endpoint);
  if (!scores.is_array() || scores.size() != expected) {
    schema_error(endpoint, "expected " + std::to_string(expected) + " scores");
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& score : scores) {
    if (!score.is_number()) schema_error(endpoint, "scores must be numbers");
    const double s = score.get<double>();
    if (!(s >= 0.0 && s <= 1.0)) schema_error(endpoint, "score outside [0, 1]");
    out.push_back(s);
  }
  return out;
}

}  // namespace wire

}  // namespace zara::backend
