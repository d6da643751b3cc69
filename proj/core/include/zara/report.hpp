#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zara/approximator.hpp"
#include "zara/evalkit.hpp"
#include "zara/selftrain.hpp"

namespace zara::report {

/// Reproduction metadata embedded in every report.
struct ReportMeta {
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string model_size = "mock";
};

/// printf-style fixed formatting, independent of the global locale.
std::string fixed(double value, int precision);

// ---- summary --------------------------------------------------------------

struct SummaryRow {
  Task task = Task::ComVE;
  std::string method;  // "baseline" (M1) or "zara" (M2)
  std::string model_size;
  std::size_t episodes = 0;
  eval::MetricSummary accuracy;     // fractions in [0, 1]
  eval::MetricSummary explanation;  // fractions in [0, 1]
  // zara rows only; pooled over every test instance of every episode.
  std::optional<eval::McNemarCounts> discordant;
  std::optional<double> p_exact;
  std::optional<double> p_chi2;
};

/// Two rows per task (baseline, zara). Throws PreconditionError on empty
/// input or results of another task.
std::vector<SummaryRow> summarize(Task task, std::span<const selftrain::EpisodeResult> results,
                                  const std::string& model_size);

/// Tab-separated with a header line; percentages to two decimals and
/// p-values in %.6g.
std::string summary_tsv(std::span<const SummaryRow> rows, const ReportMeta& meta);
nlohmann::json summary_json(std::span<const SummaryRow> rows,
                            std::span<const selftrain::EpisodeResult> results, const ReportMeta& meta);

/// One line per episode: accuracy and explanation of M1 and M2, alpha and
/// augmentation counts.
std::string episodes_tsv(std::span<const selftrain::EpisodeResult> results, const ReportMeta& meta);

// ---- selection strategies -------------------------------------------------

struct StrategyRow {
  Task task = Task::ComVE;
  int episode_id = 0;
  approx::Strategy strategy = approx::Strategy::Zara;
  std::size_t n = 0;
  std::optional<double> gold_accuracy;  // empty when n == 0
};

/// Gold accuracy of the zara, random and lowest selections of one scored
/// pool with matched n (the zara count). `gold` is the evaluation view of the
/// pool; every scored id must be present.
std::vector<StrategyRow> compare_strategies(int episode_id,
                                            std::span<const approx::ScoredPrediction> scored,
                                            std::span<const Instance> gold, double alpha,
                                            std::uint64_t seed);

/// Per-episode rows followed by one per-task average row per strategy
/// (episode "all"); averages skip empty selections. Rows with n = 0 carry
/// the flag "empty".
std::string strategies_tsv(std::span<const StrategyRow> rows, const ReportMeta& meta);

// ---- percentile bins ------------------------------------------------------

struct BinsReport {
  Task task = Task::ComVE;
  std::size_t k = 4;
  std::size_t joined = 0;
  std::size_t excluded = 0;  // scored items without a rating
  std::vector<eval::Bin> bins;
};

/// Joins selectable scored items with ratings by id; value = average rating.
BinsReport make_bins_report(Task task, std::span<const approx::ScoredPrediction> scored,
                            std::span<const eval::PlausibilityRating> ratings, std::size_t k);

std::string bins_tsv(const BinsReport& report, const ReportMeta& meta);

}  // namespace zara::report
