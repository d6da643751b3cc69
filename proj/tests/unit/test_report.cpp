#include <gtest/gtest.h>

#include <sstream>

#include "support/fixtures.hpp"
#include "zara/report.hpp"

using namespace zara;
using namespace zara::report;
using namespace zara::testing;

namespace {

selftrain::EpisodeResult result(int id, double acc1, double acc2, std::vector<std::pair<bool, bool>> outcomes) {
  selftrain::EpisodeResult r;
  r.episode_id = id;
  r.task = Task::SBIC;
  r.alpha = 0.8;
  r.m1.accuracy = acc1;
  r.m2.accuracy = acc2;
  r.m1.explanation_score = acc1 / 2;
  r.m2.explanation_score = acc2 / 2;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    r.outcomes.push_back({"x" + std::to_string(i), outcomes[i].first, outcomes[i].second});
  }
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Report, FixedNeverPrintsNegativeZero) {
  EXPECT_EQ(fixed(-0.0, 2), "0.00");
  EXPECT_EQ(fixed(-0.001, 2), "0.00");
  EXPECT_EQ(fixed(-0.5, 1), "-0.5");
  EXPECT_EQ(fixed(56.666666, 2), "56.67");
}

TEST(Report, SummaryPoolsDiscordantPairsAcrossEpisodes) {
  // Same instance ids in both episodes stay distinct.
  const std::vector<selftrain::EpisodeResult> results = {
      result(1, 0.5, 0.75, {{false, true}, {true, true}, {false, false}, {true, true}}),
      result(2, 0.25, 0.5, {{false, true}, {true, false}, {false, true}, {false, false}})};
  const auto rows = summarize(Task::SBIC, results, "mock");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].method, "baseline");
  EXPECT_FALSE(rows[0].discordant);
  ASSERT_TRUE(rows[1].discordant);
  EXPECT_EQ(rows[1].discordant->baseline_only, 1u);
  EXPECT_EQ(rows[1].discordant->treated_only, 3u);
  EXPECT_EQ(*rows[1].p_exact, 5.0 / 16.0);
  EXPECT_DOUBLE_EQ(rows[1].accuracy.mean, 0.625);

  const auto tsv = lines(summary_tsv(rows, {"abc", 7, "mock"}));
  ASSERT_EQ(tsv.size(), 4u);
  EXPECT_EQ(tsv[0], "# config_digest=abc\tseed=7");
  EXPECT_EQ(tsv[2], "sbic\tbaseline\tmock\t2\t37.50\t12.50\t18.75\t6.25\t-\t-\t-\t-");
  EXPECT_EQ(tsv[3].rfind("sbic\tzara\tmock\t2\t62.50\t12.50\t31.25\t6.25\t1\t3\t0.3125\t", 0), 0u) << tsv[3];

  EXPECT_THROW(summarize(Task::ComVE, results, "mock"), PreconditionError);
  EXPECT_THROW(summarize(Task::SBIC, std::vector<selftrain::EpisodeResult>{}, "mock"), PreconditionError);
}

TEST(Report, EpisodesTsvFlags) {
  auto r = result(3, 0.5, 0.5, {});
  r.relaxed = true;
  r.no_augmentation = true;
  const auto tsv = lines(episodes_tsv(std::vector{r}, {"d", 0, "mock"}));
  ASSERT_EQ(tsv.size(), 3u);
  EXPECT_EQ(tsv[2].substr(tsv[2].rfind('\t') + 1), "relaxed,no-augmentation");
}

TEST(Report, StrategiesMatchSizeAndFlagEmptySelections) {
  std::vector<approx::ScoredPrediction> scored;
  std::vector<Instance> gold;
  for (int i = 0; i < 10; ++i) {
    auto item = scored_item(Task::SBIC, "s" + std::to_string(i), i < 5 ? 0 : 1, i / 10.0);
    scored.push_back(item);
    gold.push_back(sample_instance(Task::SBIC, item.instance.id));  // gold label 0
  }
  const auto rows = compare_strategies(1, scored, gold, 0.65, 3);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) EXPECT_EQ(row.n, 3u);
  EXPECT_EQ(*rows[0].gold_accuracy, 0.0);  // the top three predict label 1
  EXPECT_EQ(*rows[2].gold_accuracy, 1.0);  // the bottom three predict label 0

  const auto empty = compare_strategies(2, scored, gold, 0.95, 3);
  EXPECT_EQ(empty[0].n, 0u);
  EXPECT_FALSE(empty[1].gold_accuracy);
  std::vector<StrategyRow> all = rows;
  all.insert(all.end(), empty.begin(), empty.end());
  const auto tsv = lines(strategies_tsv(all, {"d", 0, "mock"}));
  ASSERT_EQ(tsv.size(), 2u + 6u + 3u);
  EXPECT_EQ(tsv[5], "sbic\t2\tzara\t0\t-\tempty");
  EXPECT_EQ(tsv[8], "sbic\tall\tzara\t1.50\t0.00\t-");
  EXPECT_EQ(tsv[10], "sbic\tall\tlowest\t1.50\t100.00\t-");

  gold.pop_back();
  EXPECT_THROW(compare_strategies(1, scored, gold, 0.5, 0), DataError);
}

TEST(Report, BinsFixtureOfEightRatedItems) {
  std::vector<approx::ScoredPrediction> scored;
  std::vector<eval::PlausibilityRating> ratings;
  const std::vector<std::vector<std::string>> labels = {{"no", "no"},        {"no", "weak no"},  {"weak no", "weak yes"},
                                                        {"weak yes", "no"},  {"weak yes", "yes"}, {"yes", "weak yes"},
                                                        {"yes", "yes"},      {"yes", "yes"}};
  for (int i = 0; i < 10; ++i) {
    scored.push_back(scored_item(Task::ECQA, "q" + std::to_string(i), 0, 0.1 * i));
    if (i < 8) ratings.push_back(eval::make_rating(scored.back().instance.id, labels[i]));
  }
  scored.push_back(scored_item(Task::ECQA, "unscorable", 0, 0.99));
  scored.back().query.reset();

  const auto bins = make_bins_report(Task::ECQA, scored, ratings, 4);
  EXPECT_EQ(bins.joined, 8u);
  EXPECT_EQ(bins.excluded, 2u);
  ASSERT_EQ(bins.bins.size(), 4u);
  for (const auto& bin : bins.bins) EXPECT_EQ(bin.items.size(), 2u);
  EXPECT_EQ(bins.bins[0].value_stats.min, 1.0);
  EXPECT_EQ(bins.bins[0].value_stats.max, 1.5);
  EXPECT_EQ(bins.bins[3].value_stats.median, 4.0);

  const auto five = make_bins_report(Task::ECQA, scored, ratings, 5);
  std::vector<std::size_t> sizes;
  for (const auto& bin : five.bins) sizes.push_back(bin.items.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{1, 1, 2, 2, 2}));

  const auto tsv = lines(bins_tsv(bins, {"d", 0, "mock"}));
  EXPECT_EQ(tsv[1], "# task=ecqa\tk=4\tjoined=8\texcluded=2");
  EXPECT_EQ(tsv[3], "1\t2\t0.0000\t0.1000\t1.0000\t1.1250\t1.2500\t1.3750\t1.5000");
}
