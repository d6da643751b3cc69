#include "zara/report.hpp"

#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

#include "zara/error.hpp"

namespace zara::report {

using nlohmann::json;

namespace {

std::string format(const char* pattern, double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, pattern, value);
  return buffer;
}

std::string pct(double fraction) { return fixed(100.0 * fraction, 2); }

std::string header(const ReportMeta& meta) {
  return "# config_digest=" + meta.config_digest + "\tseed=" + std::to_string(meta.seed) + "\n";
}

json summary_to_json(const eval::MetricSummary& s) {
  return {{"values", s.values}, {"mean", s.mean}, {"standard_error", s.standard_error},
          {"degenerate", s.degenerate}};
}

}  // namespace

std::string fixed(double value, int precision) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", precision, value);
  std::string out = buffer;
  if (out == "-0" || out.rfind("-0.", 0) == 0) {
    if (out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  }
  return out;
}

std::vector<SummaryRow> summarize(Task task, std::span<const selftrain::EpisodeResult> results,
                                  const std::string& model_size) {
  if (results.empty()) throw PreconditionError("summarize: no episode results");
  std::vector<double> acc1, acc2, exp1, exp2;
  std::vector<eval::PairedOutcome> paired;
  for (const auto& r : results) {
    if (r.task != task) throw PreconditionError("summarize: episode result of another task");
    acc1.push_back(r.m1.accuracy);
    acc2.push_back(r.m2.accuracy);
    exp1.push_back(r.m1.explanation_score);
    exp2.push_back(r.m2.explanation_score);
    for (const auto& o : r.outcomes) {
      paired.push_back({std::to_string(r.episode_id) + "/" + o.instance_id, o.m1_correct, o.m2_correct});
    }
  }

  SummaryRow baseline;
  baseline.task = task;
  baseline.method = "baseline";
  baseline.model_size = model_size;
  baseline.episodes = results.size();
  baseline.accuracy = eval::aggregate(acc1);
  baseline.explanation = eval::aggregate(exp1);

  SummaryRow zara = baseline;
  zara.method = "zara";
  zara.accuracy = eval::aggregate(acc2);
  zara.explanation = eval::aggregate(exp2);
  const auto counts = eval::mcnemar_counts(paired);
  zara.discordant = counts;
  zara.p_exact = eval::mcnemar_exact_p(counts.baseline_only, counts.treated_only);
  zara.p_chi2 = eval::mcnemar_chi2_one_sided(counts.baseline_only, counts.treated_only);
  return {baseline, zara};
}

std::string summary_tsv(std::span<const SummaryRow> rows, const ReportMeta& meta) {
  std::ostringstream out;
  out << header(meta);
  out << "task\tmethod\tmodel_size\tepisodes\taccuracy_mean\taccuracy_se\texplanation_mean\t"
         "explanation_se\tdiscordant_b\tdiscordant_c\tp_exact\tp_chi2\n";
  for (const auto& row : rows) {
    out << task_key(row.task) << '\t' << row.method << '\t' << row.model_size << '\t' << row.episodes
        << '\t' << pct(row.accuracy.mean) << '\t' << pct(row.accuracy.standard_error) << '\t'
        << pct(row.explanation.mean) << '\t' << pct(row.explanation.standard_error) << '\t';
    if (row.discordant) {
      out << row.discordant->baseline_only << '\t' << row.discordant->treated_only;
    } else {
      out << "-\t-";
    }
    out << '\t' << (row.p_exact ? format("%.6g", *row.p_exact) : "-") << '\t'
        << (row.p_chi2 ? format("%.6g", *row.p_chi2) : "-") << '\n';
  }
  return out.str();
}

json summary_json(std::span<const SummaryRow> rows, std::span<const selftrain::EpisodeResult> results,
                  const ReportMeta& meta) {
  json doc;
  doc["config_digest"] = meta.config_digest;
  doc["seed"] = meta.seed;
  json jrows = json::array();
  for (const auto& row : rows) {
    json j = {{"task", std::string(task_key(row.task))},
              {"method", row.method},
              {"model_size", row.model_size},
              {"episodes", row.episodes},
              {"accuracy", summary_to_json(row.accuracy)},
              {"explanation", summary_to_json(row.explanation)}};
    if (row.discordant) {
      j["discordant"] = {{"b", row.discordant->baseline_only}, {"c", row.discordant->treated_only}};
    }
    if (row.p_exact) j["p_exact"] = *row.p_exact;
    if (row.p_chi2) j["p_chi2"] = *row.p_chi2;
    jrows.push_back(std::move(j));
  }
  doc["rows"] = std::move(jrows);
  json episodes = json::array();
  for (const auto& r : results) {
    episodes.push_back({{"task", std::string(task_key(r.task))},
                        {"episode_id", r.episode_id},
                        {"alpha", r.alpha},
                        {"no_augmentation", r.no_augmentation},
                        {"augmented", r.selection.selected_after_balance},
                        {"m1_model", r.m1.model.name},
                        {"m2_model", r.m2.model.name},
                        {"digests", r.digests}});
  }
  doc["episodes"] = std::move(episodes);
  return doc;
}

std::string episodes_tsv(std::span<const selftrain::EpisodeResult> results, const ReportMeta& meta) {
  std::ostringstream out;
  out << header(meta);
  out << "task\tepisode\talpha\tpool\tselected\taugmented\tm1_accuracy\tm1_explanation\tm2_accuracy\t"
         "m2_explanation\tflags\n";
  for (const auto& r : results) {
    std::string flags;
    if (r.relaxed) flags += "relaxed";
    if (r.no_augmentation) flags += flags.empty() ? "no-augmentation" : ",no-augmentation";
    if (flags.empty()) flags = "-";
    out << task_key(r.task) << '\t' << r.episode_id << '\t' << fixed(r.alpha, 2) << '\t'
        << r.selection.pool_size << '\t' << r.selection.selected_before_balance << '\t'
        << r.selection.selected_after_balance << '\t' << pct(r.m1.accuracy) << '\t'
        << pct(r.m1.explanation_score) << '\t' << pct(r.m2.accuracy) << '\t'
        << pct(r.m2.explanation_score) << '\t' << flags << '\n';
  }
  return out.str();
}

std::vector<StrategyRow> compare_strategies(int episode_id,
                                            std::span<const approx::ScoredPrediction> scored,
                                            std::span<const Instance> gold, double alpha,
                                            std::uint64_t seed) {
  std::unordered_map<std::string, const Instance*> by_id;
  for (const auto& instance : gold) by_id.emplace(instance.id, &instance);
  Task task = Task::ComVE;
  for (const auto& item : scored) {
    auto it = by_id.find(item.instance.id);
    if (it == by_id.end() || !it->second->gold_label) {
      throw DataError("no gold label for scored instance '" + item.instance.id + "'");
    }
    task = item.instance.task();
  }
  if (!scored.empty() && !gold.empty()) task = gold.front().task();

  auto gold_accuracy = [&](std::span<const approx::ScoredPrediction> selection) -> std::optional<double> {
    if (selection.empty()) return std::nullopt;
    std::size_t correct = 0;
    for (const auto& item : selection) {
      if (item.prediction.answer && *item.prediction.answer == *by_id.at(item.instance.id)->gold_label) {
        ++correct;
      }
    }
    return static_cast<double>(correct) / static_cast<double>(selection.size());
  };

  const auto zara = approx::select(scored, approx::Strategy::Zara, {alpha, std::nullopt, seed});
  const std::size_t n = zara.size();
  std::vector<StrategyRow> rows;
  rows.push_back({task, episode_id, approx::Strategy::Zara, n, gold_accuracy(zara)});
  for (auto strategy : {approx::Strategy::Random, approx::Strategy::Lowest}) {
    const auto selection = approx::select(scored, strategy, {std::nullopt, n, seed});
    rows.push_back({task, episode_id, strategy, n, gold_accuracy(selection)});
  }
  return rows;
}

std::string strategies_tsv(std::span<const StrategyRow> rows, const ReportMeta& meta) {
  std::ostringstream out;
  out << header(meta);
  out << "task\tepisode\tstrategy\tn\tgold_accuracy\tflags\n";
  struct Sum {
    double total = 0.0;
    std::size_t used = 0;
    std::size_t n = 0;
    std::size_t episodes = 0;
  };
  std::map<std::pair<int, int>, Sum> averages;
  for (const auto& row : rows) {
    out << task_key(row.task) << '\t' << row.episode_id << '\t' << approx::strategy_name(row.strategy)
        << '\t' << row.n << '\t' << (row.gold_accuracy ? pct(*row.gold_accuracy) : "-") << '\t'
        << (row.n == 0 ? "empty" : "-") << '\n';
    auto& sum = averages[{static_cast<int>(row.task), static_cast<int>(row.strategy)}];
    sum.n += row.n;
    ++sum.episodes;
    if (row.gold_accuracy) {
      sum.total += *row.gold_accuracy;
      ++sum.used;
    }
  }
  for (const auto& [key, sum] : averages) {
    const auto task = static_cast<Task>(key.first);
    const auto strategy = static_cast<approx::Strategy>(key.second);
    out << task_key(task) << "\tall\t" << approx::strategy_name(strategy) << '\t'
        << fixed(static_cast<double>(sum.n) / static_cast<double>(sum.episodes), 2) << '\t'
        << (sum.used ? pct(sum.total / static_cast<double>(sum.used)) : "-") << '\t'
        << (sum.used == 0 ? "empty" : "-") << '\n';
  }
  return out.str();
}

BinsReport make_bins_report(Task task, std::span<const approx::ScoredPrediction> scored,
                            std::span<const eval::PlausibilityRating> ratings, std::size_t k) {
  std::unordered_map<std::string, double> average;
  for (const auto& rating : ratings) average.emplace(rating.instance_id, rating.average);
  BinsReport report;
  report.task = task;
  report.k = k;
  std::vector<eval::BinItem> items;
  for (const auto& item : scored) {
    if (!item.selectable()) continue;
    auto it = average.find(item.instance.id);
    if (it == average.end()) {
      ++report.excluded;
      continue;
    }
    items.push_back({item.instance.id, item.pseudo_plausibility, it->second});
  }
  report.joined = items.size();
  report.bins = eval::percentile_bins(items, k);
  return report;
}

std::string bins_tsv(const BinsReport& report, const ReportMeta& meta) {
  std::ostringstream out;
  out << header(meta);
  out << "# task=" << task_key(report.task) << "\tk=" << report.k << "\tjoined=" << report.joined
      << "\texcluded=" << report.excluded << "\n";
  out << "bin\tsize\tscore_min\tscore_max\tmin\tq1\tmedian\tq3\tmax\n";
  for (std::size_t i = 0; i < report.bins.size(); ++i) {
    const auto& bin = report.bins[i];
    const auto& s = bin.value_stats;
    out << i + 1 << '\t' << bin.items.size() << '\t' << fixed(bin.score_min, 4) << '\t'
        << fixed(bin.score_max, 4) << '\t' << fixed(s.min, 4) << '\t' << fixed(s.q1, 4) << '\t'
        << fixed(s.median, 4) << '\t' << fixed(s.q3, 4) << '\t' << fixed(s.max, 4) << '\n';
  }
  return out.str();
}

}  // namespace zara::report
