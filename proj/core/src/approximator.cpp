#include "zara/approximator.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>

#include "zara/error.hpp"
#include "zara/parallel.hpp"

namespace zara::approx {

using nlohmann::json;

ClassDistribution::ClassDistribution(const std::array<double, 3>& p) : p_(p) {
  double sum = 0.0;
  for (double v : p_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw PreconditionError("class probability " + std::to_string(v) + " outside [0, 1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw PreconditionError("class probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

ClassDistribution ensemble_mean(std::span<const ClassDistribution> members) {
  if (members.empty()) throw PreconditionError("ensemble_mean: no member distributions");
  std::array<double, 3> mean{};
  std::vector<double> column(members.size());
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < members.size(); ++i) column[i] = members[i].values()[c];
    // Summing in sorted order makes the mean independent of backend order.
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    mean[c] = std::clamp(sum / static_cast<double>(members.size()), 0.0, 1.0);
  }
  return ClassDistribution(mean);
}

double pseudo_plausibility(const ClassDistribution& distribution, NliClass target) {
  return distribution[target];
}

ClassDistribution accept_backend_output(const backend::RawDistribution& raw,
                                        const std::string& backend_name) {
  double sum = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0 + kBackendNormalizationTolerance) {
      throw BackendError(backend_name, "returned probability " + std::to_string(v) +
                                           " outside [0, 1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kBackendNormalizationTolerance) {
    throw BackendError(backend_name,
                       "returned a non-normalized distribution (sum " + std::to_string(sum) + ")");
  }
  std::array<double, 3> p{};
  for (std::size_t c = 0; c < 3; ++c) p[c] = std::min(1.0, raw[c] / sum);
  return ClassDistribution(p);
}

Approximator::Approximator(std::vector<std::shared_ptr<backend::NliScorer>> backends,
                           std::size_t max_in_flight)
    : backends_(std::move(backends)), max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {
  if (backends_.empty()) throw PreconditionError("approximator needs at least one NLI backend");
  for (std::size_t i = 0; i < backends_.size(); ++i) {
    if (!backends_[i]) throw PreconditionError("null NLI backend");
    for (std::size_t j = 0; j < i; ++j) {
      if (backends_[j]->name() == backends_[i]->name()) {
        throw PreconditionError("duplicate NLI backend name '" + backends_[i]->name() + "'");
      }
    }
  }
}

ScoreResult Approximator::score(const NliQuery& query) const {
  ScoreResult result;
  std::vector<ClassDistribution> members;
  members.reserve(backends_.size());
  for (const auto& backend : backends_) {
    const auto raw = backend->classify(query.premise, query.hypothesis);
    auto distribution = accept_backend_output(raw, backend->name());
    result.per_backend.push_back({backend->name(), raw, distribution});
    members.push_back(distribution);
  }
  result.ensemble = ensemble_mean(members);
  return result;
}

std::vector<ScoredPrediction> Approximator::score_all(std::span<const Instance> instances,
                                                      std::span<const Prediction> predictions) const {
  if (instances.size() != predictions.size()) {
    throw PreconditionError("score_all: " + std::to_string(instances.size()) + " instances but " +
                            std::to_string(predictions.size()) + " predictions");
  }
  std::vector<ScoredPrediction> out(instances.size());
  parallel_for(instances.size(), max_in_flight_, [&](std::size_t i) {
    ScoredPrediction& scored = out[i];
    scored.instance = instances[i];
    scored.prediction = predictions[i];
    try {
      scored.query = nlimap::map_to_nli(instances[i], predictions[i]);
    } catch (const MappingError& e) {
      scored.unscored_reason = e.what();
      return;
    }
    ScoreResult result = score(*scored.query);
    scored.per_backend = std::move(result.per_backend);
    scored.ensemble = result.ensemble;
    scored.pseudo_plausibility = pseudo_plausibility(result.ensemble, scored.query->target_class);
  });
  return out;
}

json to_audit_json(const ScoredPrediction& scored) {
  json record;
  record["id"] = scored.instance.id;
  record["raw_text"] = scored.prediction.raw_text;
  record["parse_ok"] = scored.prediction.parse_ok;
  if (scored.prediction.answer) {
    record["answer"] = label_name(scored.instance.task(), *scored.prediction.answer);
  }
  if (scored.prediction.rationale) record["rationale"] = *scored.prediction.rationale;
  if (scored.query) {
    record["premise"] = scored.query->premise;
    record["hypothesis"] = scored.query->hypothesis;
    record["target_class"] = std::string(nlimap::nli_class_name(scored.query->target_class));
  }
  if (scored.ensemble) {
    json backends = json::object();
    for (const auto& b : scored.per_backend) backends[b.backend] = b.raw;
    record["backends"] = std::move(backends);
    record["ensemble"] = scored.ensemble->values();
    record["pseudo_plausibility"] = scored.pseudo_plausibility;
  } else {
    record["unscored_reason"] = scored.unscored_reason;
  }
  return record;
}

ScoredPrediction scored_from_audit_json(const json& record, const Instance& instance) {
  ScoredPrediction scored;
  try {
    if (record.at("id").get<std::string>() != instance.id) {
      throw DataError("audit record '" + record.at("id").get<std::string>() +
                      "' does not match instance '" + instance.id + "'");
    }
    scored.instance = instance;
    Prediction& prediction = scored.prediction;
    prediction.instance_id = instance.id;
    prediction.raw_text = record.at("raw_text").get<std::string>();
    prediction.parse_ok = record.at("parse_ok").get<bool>();
    if (auto it = record.find("answer"); it != record.end()) {
      prediction.answer = parse_label(instance.task(), it->get<std::string>());
      if (!prediction.answer) throw DataError("audit record '" + instance.id + "' has an unknown answer");
    }
    if (auto it = record.find("rationale"); it != record.end()) {
      prediction.rationale = it->get<std::string>();
    }
    if (auto it = record.find("premise"); it != record.end()) {
      auto target = nlimap::parse_nli_class(record.at("target_class").get<std::string>());
      if (!target) throw DataError("audit record '" + instance.id + "' has an unknown target class");
      scored.query = NliQuery{it->get<std::string>(), record.at("hypothesis").get<std::string>(),
                              *target, instance.id};
    }
    if (auto it = record.find("ensemble"); it != record.end()) {
      scored.ensemble = ClassDistribution(it->get<std::array<double, 3>>());
      for (const auto& [name, values] : record.at("backends").items()) {
        const auto raw = values.get<backend::RawDistribution>();
        scored.per_backend.push_back({name, raw, accept_backend_output(raw, name)});
      }
      scored.pseudo_plausibility = record.at("pseudo_plausibility").get<double>();
    } else {
      scored.unscored_reason = record.value("unscored_reason", std::string());
    }
  } catch (const json::exception& e) {
    throw DataError("invalid audit record for '" + instance.id + "': " + e.what());
  }
  return scored;
}

std::vector<double> default_grid() {
  std::vector<double> grid;
  for (int i = 10; i <= 19; ++i) grid.push_back(i / 20.0);
  return grid;
}

namespace {

void require_ascending(std::span<const double> grid) {
  if (grid.empty()) throw PreconditionError("threshold grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw PreconditionError("threshold grid must be strictly ascending");
  }
}

}  // namespace

std::vector<CurvePoint> counts_curve(std::span<const double> scores, std::span<const double> grid) {
  require_ascending(grid);
  std::vector<CurvePoint> curve;
  curve.reserve(grid.size());
  for (double t : grid) {
    const auto above = std::count_if(scores.begin(), scores.end(), [t](double s) { return s > t; });
    curve.push_back({t, static_cast<double>(above)});
  }
  return curve;
}

std::vector<CurvePoint> average_counts_curve(std::span<const std::vector<double>> per_episode_scores,
                                             std::span<const double> grid) {
  require_ascending(grid);
  if (per_episode_scores.empty()) throw PreconditionError("no episodes to average over");
  std::vector<CurvePoint> mean(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) mean[i].threshold = grid[i];
  for (const auto& scores : per_episode_scores) {
    const auto curve = counts_curve(scores, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) mean[i].count += curve[i].count;
  }
  for (auto& point : mean) point.count /= static_cast<double>(per_episode_scores.size());
  return mean;
}

double calibrate_threshold(std::span<const CurvePoint> curve) {
  if (curve.size() < 2) throw PreconditionError("calibrate_threshold needs at least two curve points");
  std::vector<double> slopes(curve.size() - 1);
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double dt = curve[i + 1].threshold - curve[i].threshold;
    if (!(dt > 0.0)) throw PreconditionError("curve thresholds must be strictly ascending");
    slopes[i] = (curve[i + 1].count - curve[i].count) / dt;
  }
  const double steepest = *std::min_element(slopes.begin(), slopes.end());
  // Grid spacing is inexact in binary, so equal slopes can differ by a few ulps.
  const double tie = 1e-9 * std::max(1.0, std::abs(steepest));
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    if (slopes[i] <= steepest + tie) return curve[i].threshold;
  }
  return curve.front().threshold;
}

void ThresholdConfig::validate() const {
  if (grid.empty()) throw PreconditionError("threshold grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] < 1.0)) throw PreconditionError("grid values must lie in (0, 1)");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw PreconditionError("grid must be strictly ascending");
  }
  if (std::find(grid.begin(), grid.end(), alpha) == grid.end()) {
    throw PreconditionError("alpha " + std::to_string(alpha) + " is not a grid member");
  }
}

json to_json(const ThresholdConfig& config) {
  json curve = json::array();
  for (const auto& point : config.curve) {
    curve.push_back({{"threshold", point.threshold}, {"count", point.count}});
  }
  return {{"task", std::string(task_key(config.task))},
          {"grid", config.grid},
          {"alpha", config.alpha},
          {"curve", std::move(curve)}};
}

ThresholdConfig threshold_config_from_json(const json& doc) {
  ThresholdConfig config;
  try {
    config.task = task_from_key(doc.at("task").get<std::string>());
    config.grid = doc.at("grid").get<std::vector<double>>();
    config.alpha = doc.at("alpha").get<double>();
    if (auto it = doc.find("curve"); it != doc.end()) {
      for (const auto& point : *it) {
        config.curve.push_back({point.at("threshold").get<double>(), point.at("count").get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid threshold config: ") + e.what());
  }
  config.validate();
  return config;
}

std::string_view strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::Zara: return "zara";
    case Strategy::Random: return "random";
    case Strategy::Lowest: return "lowest";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  for (Strategy s : {Strategy::Zara, Strategy::Random, Strategy::Lowest}) {
    if (text == strategy_name(s)) return s;
  }
  return std::nullopt;
}

std::vector<ScoredPrediction> select(std::span<const ScoredPrediction> pool, Strategy strategy,
                                     const SelectionParams& params) {
  std::vector<const ScoredPrediction*> selectable;
  for (const auto& item : pool) {
    if (item.selectable()) selectable.push_back(&item);
  }

  std::vector<const ScoredPrediction*> chosen;
  switch (strategy) {
    case Strategy::Zara: {
      if (!params.alpha) throw PreconditionError("zara selection requires a threshold alpha");
      const double alpha = *params.alpha;
      std::copy_if(selectable.begin(), selectable.end(), std::back_inserter(chosen),
                   [alpha](const ScoredPrediction* item) { return item->pseudo_plausibility > alpha; });
      break;
    }
    case Strategy::Random:
    case Strategy::Lowest: {
      if (!params.n) {
        throw PreconditionError(std::string(strategy_name(strategy)) + " selection requires n");
      }
      const std::size_t n = *params.n;
      if (n > selectable.size()) {
        throw PreconditionError("selection size " + std::to_string(n) + " exceeds the " +
                                std::to_string(selectable.size()) + " selectable items");
      }
      if (strategy == Strategy::Random) {
        std::mt19937_64 rng(params.seed);
        std::sample(selectable.begin(), selectable.end(), std::back_inserter(chosen), n, rng);
      } else {
        chosen = selectable;
        std::sort(chosen.begin(), chosen.end(), [](const ScoredPrediction* a, const ScoredPrediction* b) {
          if (a->pseudo_plausibility != b->pseudo_plausibility) {
            return a->pseudo_plausibility < b->pseudo_plausibility;
          }
          return a->instance.id < b->instance.id;
        });
        chosen.resize(n);
      }
      break;
    }
  }

  std::vector<ScoredPrediction> out;
  out.reserve(chosen.size());
  for (const auto* item : chosen) out.push_back(*item);
  return out;
}

}  // namespace zara::approx
