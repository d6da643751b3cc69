#include "zara/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

#include "zara/error.hpp"
#include "zara/text.hpp"

namespace zara::eval {

namespace {

void require_aligned(std::span<const Prediction> predictions, std::span<const Instance> gold) {
  if (predictions.size() != gold.size()) {
    throw PreconditionError("id mismatch: " + std::to_string(predictions.size()) +
                            " predictions for " + std::to_string(gold.size()) + " gold instances");
  }
  if (gold.empty()) throw PreconditionError("no instances to evaluate");
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predictions[i].instance_id != gold[i].id) {
      throw PreconditionError("id mismatch at position " + std::to_string(i) + ": prediction '" +
                              predictions[i].instance_id + "' vs gold '" + gold[i].id + "'");
    }
    if (!gold[i].gold_label) {
      throw PreconditionError("gold instance '" + gold[i].id + "' has no label");
    }
  }
}

}  // namespace

std::vector<bool> correctness(std::span<const Prediction> predictions,
                              std::span<const Instance> gold) {
  require_aligned(predictions, gold);
  std::vector<bool> out(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    out[i] = predictions[i].parse_ok && predictions[i].answer &&
             *predictions[i].answer == *gold[i].gold_label;
  }
  return out;
}

double accuracy(std::span<const Prediction> predictions, std::span<const Instance> gold) {
  const auto flags = correctness(predictions, gold);
  const auto hits = std::count(flags.begin(), flags.end(), true);
  return static_cast<double>(hits) / static_cast<double>(flags.size());
}

double explanation_score(std::span<const Prediction> predictions, std::span<const Instance> gold,
                         backend::EmbeddingScorer& scorer) {
  const auto flags = correctness(predictions, gold);
  std::vector<std::string> candidates;
  std::vector<std::string> references;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!gold[i].gold_rationale) {
      throw PreconditionError("gold instance '" + gold[i].id + "' has no rationale");
    }
    if (!flags[i]) continue;
    candidates.push_back(predictions[i].rationale.value_or(""));
    references.push_back(*gold[i].gold_rationale);
  }
  double total = 0.0;
  if (!candidates.empty()) {
    const auto scores = scorer.similarity(candidates, references);
    if (scores.size() != candidates.size()) {
      throw BackendError(scorer.name(), "returned " + std::to_string(scores.size()) +
                                            " scores for " + std::to_string(candidates.size()) +
                                            " pairs");
    }
    for (double s : scores) {
      if (!(s >= 0.0 && s <= 1.0)) throw BackendError(scorer.name(), "similarity outside [0, 1]");
      total += s;
    }
  }
  return total / static_cast<double>(gold.size());
}

MetricSummary aggregate(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("aggregate: empty value list");
  MetricSummary summary;
  summary.values.assign(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  summary.mean = sum / n;
  if (values.size() < 2) {
    summary.degenerate = true;
    return summary;
  }
  // Rounding can push the mean a hair outside [min, max] for constant lists.
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  summary.mean = std::clamp(summary.mean, *lo, *hi);
  double ss = 0.0;
  for (double v : values) ss += (v - summary.mean) * (v - summary.mean);
  summary.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return summary;
}

McNemarCounts mcnemar_counts(std::span<const PairedOutcome> outcomes) {
  McNemarCounts counts;
  for (const auto& o : outcomes) {
    if (o.baseline_correct && !o.treated_correct) ++counts.baseline_only;
    if (!o.baseline_correct && o.treated_correct) ++counts.treated_only;
  }
  return counts;
}

double mcnemar_exact_p(std::size_t b, std::size_t c) {
  const std::size_t n = b + c;
  if (n == 0) return 1.0;
  if (n <= 53) {
    // Exact: the tail sum of binomial coefficients fits in 53 bits.
    std::uint64_t coefficient = 1;  // C(n, 0)
    std::uint64_t tail = 0;
    for (std::size_t k = 0; k <= n; ++k) {
      if (k > 0) coefficient = coefficient * (n - k + 1) / k;
      if (k >= c) tail += coefficient;
    }
    return std::ldexp(static_cast<double>(tail), -static_cast<int>(n));
  }
  const double dn = static_cast<double>(n);
  std::vector<double> logs;
  logs.reserve(n - c + 1);
  for (std::size_t k = c; k <= n; ++k) {
    const double dk = static_cast<double>(k);
    logs.push_back(std::lgamma(dn + 1.0) - std::lgamma(dk + 1.0) - std::lgamma(dn - dk + 1.0) -
                   dn * std::log(2.0));
  }
  const double peak = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - peak);
  return std::min(1.0, std::exp(peak + std::log(sum)));
}

double mcnemar_one_sided(std::span<const PairedOutcome> outcomes) {
  const auto counts = mcnemar_counts(outcomes);
  return mcnemar_exact_p(counts.baseline_only, counts.treated_only);
}

double mcnemar_chi2_one_sided(std::size_t b, std::size_t c) {
  const std::size_t n = b + c;
  if (n == 0) return 1.0;
  const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c));
  const double corrected = std::max(0.0, diff - 1.0);
  const double statistic = corrected * corrected / static_cast<double>(n);
  const double two_sided = std::erfc(std::sqrt(statistic / 2.0));
  return c > b ? two_sided / 2.0 : 1.0 - two_sided / 2.0;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw PreconditionError("quantile of empty data");
  const double position = q * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const auto upper = std::min(lower + 1, sorted.size() - 1);
  const double fraction = position - static_cast<double>(lower);
  return sorted[lower] + fraction * (sorted[upper] - sorted[lower]);
}

BoxStats box_stats(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return {quantile_sorted(sorted, 0.0), quantile_sorted(sorted, 0.25), quantile_sorted(sorted, 0.5),
          quantile_sorted(sorted, 0.75), quantile_sorted(sorted, 1.0)};
}

std::vector<Bin> percentile_bins(std::span<const BinItem> items, std::size_t k) {
  if (k < 2) throw PreconditionError("percentile_bins: k must be at least 2");
  if (items.size() < k) {
    throw PreconditionError("percentile_bins: " + std::to_string(items.size()) +
                            " items cannot fill " + std::to_string(k) + " bins");
  }
  std::vector<BinItem> sorted(items.begin(), items.end());
  std::sort(sorted.begin(), sorted.end(), [](const BinItem& a, const BinItem& b) {
    return a.score != b.score ? a.score < b.score : a.instance_id < b.instance_id;
  });

  const std::size_t base = sorted.size() / k;
  const std::size_t remainder = sorted.size() % k;
  std::vector<Bin> bins(k);
  std::size_t offset = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t size = base + (b >= k - remainder ? 1 : 0);
    Bin& bin = bins[b];
    bin.items.assign(sorted.begin() + static_cast<std::ptrdiff_t>(offset),
                     sorted.begin() + static_cast<std::ptrdiff_t>(offset + size));
    offset += size;
    std::vector<double> values;
    values.reserve(bin.items.size());
    for (const auto& item : bin.items) values.push_back(item.value);
    bin.score_min = bin.items.front().score;
    bin.score_max = bin.items.back().score;
    bin.value_stats = box_stats(values);
  }
  return bins;
}

std::optional<int> rating_score(std::string_view label) {
  const std::string normalized = text::to_lower_ascii(text::trim(label));
  if (normalized == "no") return 1;
  if (normalized == "weak no") return 2;
  if (normalized == "weak yes") return 3;
  if (normalized == "yes") return 4;
  return std::nullopt;
}

PlausibilityRating make_rating(std::string instance_id, std::vector<std::string> labels) {
  if (labels.empty()) throw DataError("rating for '" + instance_id + "' has no labels");
  PlausibilityRating rating;
  rating.instance_id = std::move(instance_id);
  int total = 0;
  for (const auto& label : labels) {
    auto score = rating_score(label);
    if (!score) {
      throw DataError("rating for '" + rating.instance_id + "': unknown label '" + label +
                      "' (expected no, weak no, weak yes, yes)");
    }
    rating.scores.push_back(*score);
    total += *score;
  }
  rating.labels = std::move(labels);
  rating.average = static_cast<double>(total) / static_cast<double>(rating.scores.size());
  rating.plausible = rating.average > kPlausibleCut;
  return rating;
}

PlausibilityTable plausibility_correctness_table(std::span<const PlausibilityRating> ratings,
                                                 std::span<const CorrectnessOutcome> outcomes) {
  std::unordered_map<std::string, const PlausibilityRating*> by_id;
  for (const auto& rating : ratings) by_id.emplace(rating.instance_id, &rating);
  if (by_id.size() != outcomes.size() || ratings.size() != outcomes.size()) {
    throw DataError("plausibility table: " + std::to_string(ratings.size()) + " ratings vs " +
                    std::to_string(outcomes.size()) + " outcomes");
  }

  PlausibilityTable table;
  for (const auto& outcome : outcomes) {
    auto it = by_id.find(outcome.instance_id);
    if (it == by_id.end()) {
      throw DataError("plausibility table: no rating for '" + outcome.instance_id + "'");
    }
    const std::size_t row = it->second->plausible ? 0 : 1;
    const std::size_t col = outcome.correct ? 0 : 1;
    ++table.counts[row][col];
  }
  for (std::size_t row = 0; row < 2; ++row) {
    const auto total = table.counts[row][0] + table.counts[row][1];
    for (std::size_t col = 0; col < 2; ++col) {
      table.percent[row][col] =
          total == 0 ? 0.0
                     : 100.0 * static_cast<double>(table.counts[row][col]) / static_cast<double>(total);
    }
  }
  return table;
}

double randolph_kappa(std::span<const std::vector<int>> labels, std::size_t categories) {
  if (categories < 2) throw PreconditionError("randolph_kappa: need at least two categories");
  if (labels.empty()) throw PreconditionError("randolph_kappa: no items");
  double agreement_sum = 0.0;
  std::vector<std::size_t> counts(categories);
  for (std::size_t item = 0; item < labels.size(); ++item) {
    const auto& ratings = labels[item];
    if (ratings.size() < 2) {
      throw PreconditionError("randolph_kappa: item " + std::to_string(item) +
                              " has fewer than two ratings");
    }
    std::fill(counts.begin(), counts.end(), 0);
    for (int label : ratings) {
      if (label < 0 || static_cast<std::size_t>(label) >= categories) {
        throw PreconditionError("randolph_kappa: category " + std::to_string(label) + " out of range");
      }
      ++counts[static_cast<std::size_t>(label)];
    }
    const auto n = static_cast<double>(ratings.size());
    double agreeing_pairs = 0.0;
    for (std::size_t c : counts) agreeing_pairs += static_cast<double>(c) * (static_cast<double>(c) - 1.0);
    agreement_sum += agreeing_pairs / (n * (n - 1.0));
  }
  const double observed = agreement_sum / static_cast<double>(labels.size());
  const double chance = 1.0 / static_cast<double>(categories);
  return (observed - chance) / (1.0 - chance);
}

}  // namespace zara::eval
