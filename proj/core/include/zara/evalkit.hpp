#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zara/backend.hpp"
#include "zara/types.hpp"

namespace zara::eval {

// ---- task metrics ---------------------------------------------------------

/// Fraction of predictions that parsed and match the gold label. Predictions
/// and gold instances must be aligned position-by-position by id.
double accuracy(std::span<const Prediction> predictions, std::span<const Instance> gold);

/// Per-instance correctness flags (same alignment rules as accuracy()).
std::vector<bool> correctness(std::span<const Prediction> predictions,
                              std::span<const Instance> gold);

/// Mean over instances of similarity(generated rationale, gold rationale),
/// where instances with a wrong or unparsed label contribute 0.
double explanation_score(std::span<const Prediction> predictions, std::span<const Instance> gold,
                         backend::EmbeddingScorer& scorer);

// ---- aggregation ----------------------------------------------------------

struct MetricSummary {
  std::vector<double> values;
  double mean = 0.0;
  double standard_error = 0.0;
  bool degenerate = false;  // fewer than two values; standard error reported as 0
};

/// Mean and standard error (sample standard deviation / sqrt(n)).
MetricSummary aggregate(std::span<const double> values);

// ---- significance ---------------------------------------------------------

struct PairedOutcome {
  std::string instance_id;
  bool baseline_correct = false;
  bool treated_correct = false;
};

struct McNemarCounts {
  std::size_t baseline_only = 0;  // b: baseline right, treated wrong
  std::size_t treated_only = 0;   // c: baseline wrong, treated right
};

McNemarCounts mcnemar_counts(std::span<const PairedOutcome> outcomes);

/// Exact one-sided p-value P(X >= c), X ~ Binomial(b + c, 1/2).
/// 1.0 when there are no discordant pairs.
double mcnemar_one_sided(std::span<const PairedOutcome> outcomes);
double mcnemar_exact_p(std::size_t b, std::size_t c);

/// Continuity-corrected chi-squared approximation, halved for one side
/// (only when c > b; otherwise 1 - half). Reported alongside the exact value.
double mcnemar_chi2_one_sided(std::size_t b, std::size_t c);

// ---- percentile bins ------------------------------------------------------

struct BinItem {
  std::string instance_id;
  double score = 0.0;
  double value = 0.0;
};

struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Linear-interpolation quantile of sorted data (q in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double q);
BoxStats box_stats(std::span<const double> values);

struct Bin {
  std::vector<BinItem> items;  // ascending by (score, id)
  double score_min = 0.0;
  double score_max = 0.0;
  BoxStats value_stats;
};

/// Sorts by score (ties by id) and cuts k contiguous bins whose sizes differ
/// by at most one, the larger bins being the highest-scored ones.
std::vector<Bin> percentile_bins(std::span<const BinItem> items, std::size_t k = 4);

// ---- human plausibility ratings ------------------------------------------

/// "no" -> 1, "weak no" -> 2, "weak yes" -> 3, "yes" -> 4.
std::optional<int> rating_score(std::string_view label);

inline constexpr double kPlausibleCut = 2.5;

struct PlausibilityRating {
  std::string instance_id;
  std::vector<std::string> labels;
  std::vector<int> scores;
  double average = 0.0;
  bool plausible = false;  // average strictly above 2.5
};

/// Throws DataError on unknown labels or an empty label list.
PlausibilityRating make_rating(std::string instance_id, std::vector<std::string> labels);

struct PlausibilityTable {
  // Row-normalized percentages: [row][col], row 0 = plausible, 1 = not
  // plausible; col 0 = correct, 1 = incorrect.
  std::array<std::array<double, 2>, 2> percent{};
  std::array<std::array<std::size_t, 2>, 2> counts{};
};

struct CorrectnessOutcome {
  std::string instance_id;
  bool correct = false;
};

/// Joins ratings with outcomes by id; throws DataError when an outcome has no
/// rating or vice versa. Empty rows report 0/0.
PlausibilityTable plausibility_correctness_table(std::span<const PlausibilityRating> ratings,
                                                 std::span<const CorrectnessOutcome> outcomes);

// ---- agreement ------------------------------------------------------------

/// Free-marginal multirater kappa. `labels[i]` holds the category indices
/// assigned to item i by its raters (at least two per item).
double randolph_kappa(std::span<const std::vector<int>> labels, std::size_t categories);

}  // namespace zara::eval
