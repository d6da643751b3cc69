#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zara/backend.hpp"
#include "zara/nlimap.hpp"
#include "zara/types.hpp"

namespace zara::approx {

using nlimap::NliClass;
using nlimap::NliQuery;

/// Probabilities over (entailment, neutral, contradiction); each in [0, 1],
/// summing to 1 within 1e-6.
class ClassDistribution {
 public:
  static constexpr double kSumTolerance = 1e-6;

  ClassDistribution() : p_{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0} {}
  /// Throws PreconditionError unless the values form a distribution.
  explicit ClassDistribution(const std::array<double, 3>& p);

  double operator[](NliClass c) const { return p_[static_cast<std::size_t>(c)]; }
  const std::array<double, 3>& values() const { return p_; }

  friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;

 private:
  std::array<double, 3> p_;
};

/// Backend outputs whose components sum to 1 within this tolerance are
/// accepted (and rescaled onto the simplex); anything else is rejected.
inline constexpr double kBackendNormalizationTolerance = 1e-3;

/// Component-wise arithmetic mean. Throws PreconditionError on empty input.
ClassDistribution ensemble_mean(std::span<const ClassDistribution> members);

double pseudo_plausibility(const ClassDistribution& distribution, NliClass target);

struct BackendScore {
  std::string backend;
  backend::RawDistribution raw{};  // as returned, for the audit log
  ClassDistribution distribution;  // raw rescaled onto the simplex
};

struct ScoreResult {
  std::vector<BackendScore> per_backend;
  ClassDistribution ensemble;
};

/// Validates one backend's raw output against the simplex. Throws
/// BackendError naming the backend when it is off by more than the tolerance.
ClassDistribution accept_backend_output(const backend::RawDistribution& raw,
                                        const std::string& backend_name);

/// A scored (instance, prediction) pair. Predictions that could not be mapped
/// (unparsed, empty rationale) carry no query and are never selectable.
struct ScoredPrediction {
  Instance instance;  // pipeline view
  Prediction prediction;
  std::optional<NliQuery> query;
  std::optional<ClassDistribution> ensemble;
  std::vector<BackendScore> per_backend;
  double pseudo_plausibility = 0.0;
  std::string unscored_reason;

  bool selectable() const { return query.has_value() && ensemble.has_value(); }
};

/// Ensemble of NLI scorers used off-the-shelf as a plausibility judge.
class Approximator {
 public:
  /// `max_in_flight` bounds concurrent scoring calls in score_all().
  explicit Approximator(std::vector<std::shared_ptr<backend::NliScorer>> backends,
                        std::size_t max_in_flight = 4);

  /// Queries every backend; any backend failure fails the call.
  ScoreResult score(const NliQuery& query) const;

  /// Maps and scores each pair. Results come back in input order regardless
  /// of scheduling.
  std::vector<ScoredPrediction> score_all(std::span<const Instance> instances,
                                          std::span<const Prediction> predictions) const;

  std::size_t backend_count() const { return backends_.size(); }

 private:
  std::vector<std::shared_ptr<backend::NliScorer>> backends_;
  std::size_t max_in_flight_;
};

/// Flat audit record for one scored prediction: the parsed prediction, the
/// mapped query, every backend's distribution and the ensemble.
nlohmann::json to_audit_json(const ScoredPrediction& scored);
/// Inverse of to_audit_json(); `instance` must carry the record's id.
ScoredPrediction scored_from_audit_json(const nlohmann::json& record, const Instance& instance);

// ---- threshold calibration ------------------------------------------------

struct CurvePoint {
  double threshold = 0.0;
  double count = 0.0;  // averaged across episodes, hence real-valued
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// {0.50, 0.55, ..., 0.95}.
std::vector<double> default_grid();

/// Number of scores strictly above each grid value. Throws on an empty or
/// non-ascending grid.
std::vector<CurvePoint> counts_curve(std::span<const double> scores, std::span<const double> grid);

/// Per-episode counts averaged point-wise.
std::vector<CurvePoint> average_counts_curve(std::span<const std::vector<double>> per_episode_scores,
                                             std::span<const double> grid);

/// Left endpoint of the segment with the most negative slope; ties go to the
/// smaller threshold. Needs at least two points.
double calibrate_threshold(std::span<const CurvePoint> curve);

struct ThresholdConfig {
  Task task = Task::ComVE;
  std::vector<double> grid;
  double alpha = 0.0;
  std::vector<CurvePoint> curve;

  /// Grid strictly ascending within (0, 1) and alpha one of its members.
  void validate() const;
};

nlohmann::json to_json(const ThresholdConfig& config);
ThresholdConfig threshold_config_from_json(const nlohmann::json& doc);

// ---- selection ------------------------------------------------------------

enum class Strategy { Zara, Random, Lowest };

std::string_view strategy_name(Strategy strategy);
std::optional<Strategy> parse_strategy(std::string_view text);

struct SelectionParams {
  std::optional<double> alpha;    // required for Zara
  std::optional<std::size_t> n;   // required for Random and Lowest
  std::uint64_t seed = 0;
};

/// Zara keeps every selectable item with score > alpha (input order).
/// Random draws n selectable items uniformly without replacement (input
/// order, seeded). Lowest keeps the n lowest-scored selectable items (ties
/// by instance id), ordered by score. Throws PreconditionError if a required
/// parameter is missing or n exceeds the number of selectable items.
std::vector<ScoredPrediction> select(std::span<const ScoredPrediction> pool, Strategy strategy,
                                     const SelectionParams& params);

}  // namespace zara::approx
