#include "zara_cli/config.hpp"

#include <cctype>
#include <cstdlib>
#include <set>
#include <sstream>

#include "zara/checkpoint.hpp"
#include "zara/digest.hpp"
#include "zara/error.hpp"
#include "zara/text.hpp"

namespace zara::cli {

using nlohmann::json;
namespace fs = std::filesystem;
using text::to_lower_ascii;
using text::trim;

namespace {

enum class Kind { String, Integer, Unsigned, Number, Boolean, NumberList, StringList };

struct EnvKey {
  const char* pointer;  // JSON pointer into the config document
  Kind kind;
};

constexpr EnvKey kEnvKeys[] = {
    {"/task", Kind::String},
    {"/data_dir", Kind::String},
    {"/template", Kind::String},
    {"/mode", Kind::String},
    {"/episodes", Kind::String},
    {"/seed", Kind::Unsigned},
    {"/out", Kind::String},
    {"/parallel", Kind::Integer},
    {"/max_in_flight", Kind::Integer},
    {"/alpha", Kind::Number},
    {"/grid", Kind::NumberList},
    {"/mock_backends", Kind::Boolean},
    {"/balance", Kind::String},
    {"/backends/trainer", Kind::String},
    {"/backends/generator", Kind::String},
    {"/backends/nli", Kind::StringList},
    {"/backends/embedding", Kind::String},
    {"/backends/timeout_ms", Kind::Integer},
    {"/backends/retries", Kind::Integer},
    {"/train/base_model", Kind::String},
    {"/train/stage_two_max_epochs", Kind::Integer},
};

std::string env_name(std::string_view pointer) {
  std::string name = "ZARA";
  for (char c : pointer) {
    name += c == '/' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return name;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    part = std::string(trim(part));
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

double parse_double(const std::string& field, const std::string& text) {
  try {
    std::size_t used = 0;
    double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ConfigError(field, "'" + text + "' is not a number");
  }
}

long long parse_integer(const std::string& field, const std::string& text) {
  try {
    std::size_t used = 0;
    long long value = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ConfigError(field, "'" + text + "' is not an integer");
  }
}

json env_value(const std::string& field, Kind kind, const std::string& text) {
  switch (kind) {
    case Kind::String: return text;
    case Kind::Integer: return parse_integer(field, text);
    case Kind::Unsigned: {
      const long long value = parse_integer(field, text);
      if (value < 0) throw ConfigError(field, "must be non-negative");
      return static_cast<std::uint64_t>(value);
    }
    case Kind::Number: return parse_double(field, text);
    case Kind::Boolean: {
      const std::string lower = to_lower_ascii(trim(text));
      if (lower == "1" || lower == "true" || lower == "yes" || lower == "on") return true;
      if (lower == "0" || lower == "false" || lower == "no" || lower == "off" || lower.empty()) return false;
      throw ConfigError(field, "'" + text + "' is not a boolean");
    }
    case Kind::NumberList: {
      json list = json::array();
      for (const auto& part : split_list(text)) list.push_back(parse_double(field, part));
      return list;
    }
    case Kind::StringList: {
      json list = json::array();
      for (const auto& part : split_list(text)) list.push_back(part);
      return list;
    }
  }
  return nullptr;
}

template <typename T>
T get_field(const json& doc, const char* key, T fallback) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

json to_json(const RunConfig& config) {
  json doc;
  if (config.task) doc["task"] = std::string(task_key(*config.task));
  doc["data_dir"] = config.data_dir.generic_string();
  if (config.template_path) doc["template"] = config.template_path->generic_string();
  doc["mode"] = config.mode == corpus::Mode::Strict ? "strict" : "relaxed";
  doc["episodes"] = config.episodes;
  doc["seed"] = config.seed;
  doc["out"] = config.out.generic_string();
  doc["parallel"] = config.parallel;
  doc["max_in_flight"] = config.max_in_flight;
  if (config.alpha) doc["alpha"] = *config.alpha;
  if (config.grid) doc["grid"] = *config.grid;
  doc["mock_backends"] = config.mock_backends;
  doc["backends"] = {{"trainer", config.backends.trainer},
                     {"generator", config.backends.generator},
                     {"nli", config.backends.nli},
                     {"embedding", config.backends.embedding},
                     {"timeout_ms", config.backends.timeout_ms},
                     {"retries", config.backends.retries}};
  doc["train"] = selftrain::to_json(config.train);
  doc["balance"] = config.balance == selftrain::BalanceMode::TopScore ? "top-score" : "random";
  return doc;
}

RunConfig run_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
  static const std::set<std::string> known = {
      "task", "data_dir", "template", "mode", "episodes", "seed", "out", "parallel", "max_in_flight",
      "alpha", "grid", "mock_backends", "backends", "train", "balance"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) throw ConfigError(key, "unknown configuration key");
  }

  RunConfig config;
  if (auto task = get_field<std::string>(doc, "task", ""); !task.empty()) {
    config.task = parse_task(task);
    if (!config.task) throw ConfigError("task", "unknown task '" + task + "'");
  }
  config.data_dir = get_field<std::string>(doc, "data_dir", config.data_dir.string());
  if (auto path = get_field<std::string>(doc, "template", ""); !path.empty()) config.template_path = path;
  const auto mode = get_field<std::string>(doc, "mode", "strict");
  if (mode == "strict") {
    config.mode = corpus::Mode::Strict;
  } else if (mode == "relaxed") {
    config.mode = corpus::Mode::Relaxed;
  } else {
    throw ConfigError("mode", "expected 'strict' or 'relaxed', got '" + mode + "'");
  }
  config.episodes = get_field<std::string>(doc, "episodes", "");
  config.seed = get_field<std::uint64_t>(doc, "seed", 0);
  config.out = get_field<std::string>(doc, "out", config.out.string());
  config.parallel = get_field<int>(doc, "parallel", 1);
  config.max_in_flight = get_field<int>(doc, "max_in_flight", 4);
  if (doc.contains("alpha") && !doc["alpha"].is_null()) config.alpha = get_field<double>(doc, "alpha", 0.0);
  if (doc.contains("grid") && !doc["grid"].is_null()) {
    config.grid = get_field<std::vector<double>>(doc, "grid", {});
  }
  config.mock_backends = get_field<bool>(doc, "mock_backends", false);
  if (auto it = doc.find("backends"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) throw ConfigError("backends", "must be an object");
    try {
      config.backends.trainer = it->value("trainer", std::string());
      config.backends.generator = it->value("generator", std::string());
      config.backends.nli = it->value("nli", std::vector<std::string>{});
      config.backends.embedding = it->value("embedding", std::string());
      config.backends.timeout_ms = it->value("timeout_ms", 60000);
      config.backends.retries = it->value("retries", 2);
    } catch (const json::exception& e) {
      throw ConfigError("backends", e.what());
    }
  }
  if (auto it = doc.find("train"); it != doc.end() && !it->is_null()) {
    try {
      config.train = selftrain::train_config_from_json(*it);
    } catch (const Error& e) {
      throw ConfigError("train", e.what());
    }
  }
  const auto balance = get_field<std::string>(doc, "balance", "top-score");
  if (balance == "top-score") {
    config.balance = selftrain::BalanceMode::TopScore;
  } else if (balance == "random") {
    config.balance = selftrain::BalanceMode::Random;
  } else {
    throw ConfigError("balance", "expected 'top-score' or 'random', got '" + balance + "'");
  }
  return config;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.task == b.task && a.data_dir == b.data_dir && a.template_path == b.template_path &&
         a.mode == b.mode && a.episodes == b.episodes && a.seed == b.seed && a.out == b.out &&
         a.parallel == b.parallel && a.max_in_flight == b.max_in_flight && a.alpha == b.alpha &&
         a.grid == b.grid && a.mock_backends == b.mock_backends && a.backends == b.backends &&
         selftrain::to_json(a.train) == selftrain::to_json(b.train) && a.balance == b.balance;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* value = std::getenv(name.c_str())) return std::string(value);
    return std::nullopt;
  };
}

void apply_env_overrides(json& doc, const EnvLookup& env) {
  for (const auto& key : kEnvKeys) {
    const std::string name = env_name(key.pointer);
    if (auto value = env(name)) {
      doc[json::json_pointer(key.pointer)] = env_value(name, key.kind, *value);
    }
  }
}

RunConfig resolve_config(const std::optional<fs::path>& file, const EnvLookup& env,
                         const json& overrides) {
  json doc = json::object();
  if (file) {
    try {
      doc = json::parse(read_file(*file));
    } catch (const json::parse_error& e) {
      throw ConfigError("--config", file->string() + ": " + e.what());
    } catch (const Error& e) {
      throw ConfigError("--config", e.what());
    }
    if (!doc.is_object()) throw ConfigError("--config", file->string() + ": not a JSON object");
  }
  apply_env_overrides(doc, env);
  for (const auto& [key, value] : overrides.items()) doc[key] = value;
  if (overrides.contains("alpha")) doc.erase("grid");
  return run_config_from_json(doc);
}

void validate(const RunConfig& config) {
  if (config.alpha && config.grid) {
    throw ConfigError("alpha", "a fixed alpha and a threshold grid are mutually exclusive");
  }
  if (config.alpha && !(*config.alpha > 0.0 && *config.alpha < 1.0)) {
    throw ConfigError("alpha", "must lie strictly between 0 and 1");
  }
  if (config.grid) {
    if (config.grid->size() < 2) throw ConfigError("grid", "needs at least two thresholds");
    for (std::size_t i = 0; i < config.grid->size(); ++i) {
      const double t = (*config.grid)[i];
      if (!(t > 0.0 && t < 1.0)) throw ConfigError("grid", "thresholds must lie strictly between 0 and 1");
      if (i > 0 && !(t > (*config.grid)[i - 1])) throw ConfigError("grid", "must be strictly ascending");
    }
  }
  if (!fs::is_directory(config.data_dir)) {
    throw ConfigError("data_dir", "directory does not exist: " + config.data_dir.string());
  }
  if (config.template_path && !fs::is_regular_file(*config.template_path)) {
    throw ConfigError("template", "file does not exist: " + config.template_path->string());
  }
  if (config.parallel < 1) throw ConfigError("parallel", "must be at least 1");
  if (config.max_in_flight < 1) throw ConfigError("max_in_flight", "must be at least 1");
  if (config.backends.retries < 0) throw ConfigError("backends.retries", "must be non-negative");
  if (config.backends.timeout_ms < 1) throw ConfigError("backends.timeout_ms", "must be positive");
  if (config.train.stage_two_max_epochs < 1) {
    throw ConfigError("train.stage_two_max_epochs", "must be at least 1");
  }
  parse_episode_range(config.episodes);
  if (!config.mock_backends) {
    if (config.backends.trainer.empty()) throw ConfigError("backends.trainer", "endpoint required");
    if (config.backends.generator.empty()) throw ConfigError("backends.generator", "endpoint required");
    if (config.backends.nli.empty()) throw ConfigError("backends.nli", "at least one endpoint required");
    if (config.backends.embedding.empty()) throw ConfigError("backends.embedding", "endpoint required");
  }
}

std::string config_digest(const RunConfig& config) {
  json doc = to_json(config);
  doc.erase("out");
  doc.erase("parallel");
  doc.erase("max_in_flight");
  return json_digest(doc);
}

std::set<int> parse_episode_range(const std::string& text) {
  std::set<int> ids;
  for (const auto& part : split_list(text)) {
    const auto dash = part.find('-', 1);
    try {
      if (dash == std::string::npos) {
        ids.insert(static_cast<int>(parse_integer("episodes", part)));
      } else {
        const auto lo = parse_integer("episodes", std::string(trim(part.substr(0, dash))));
        const auto hi = parse_integer("episodes", std::string(trim(part.substr(dash + 1))));
        if (lo > hi) throw ConfigError("episodes", "empty range '" + part + "'");
        for (auto i = lo; i <= hi; ++i) ids.insert(static_cast<int>(i));
      }
    } catch (const ConfigError&) {
      throw ConfigError("episodes", "malformed episode range '" + text + "'");
    }
  }
  return ids;
}

}  // namespace zara::cli
