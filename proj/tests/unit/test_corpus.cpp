#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <unordered_set>

#include "support/fixtures.hpp"
#include "zara/corpus.hpp"
#include "zara/toy.hpp"

using namespace zara;
using namespace zara::corpus;
using namespace zara::testing;
using nlohmann::json;

namespace {

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& line : lines) out << line << '\n';
}

Episode small_episode(Task task, int id, std::size_t train, std::size_t test) {
  Episode e;
  e.episode_id = id;
  e.task = task;
  e.relaxed = true;
  for (std::size_t i = 0; i < train + test; ++i) {
    auto inst = sample_instance(task, "ep" + std::to_string(id) + "-" + std::to_string(i));
    (i < train ? e.train : e.test).push_back(inst);
  }
  return e;
}

}  // namespace

TEST(Corpus, InstanceJsonRoundTripForEveryTask) {
  for (Task t : kAllTasks) {
    const auto inst = sample_instance(t, "x1");
    EXPECT_EQ(instance_from_json(instance_to_json(inst), Mode::Strict), inst);
    const auto masked = without_gold(inst);
    EXPECT_EQ(instance_from_json(instance_to_json(masked), Mode::Strict), masked);
  }
}

TEST(Corpus, EcqaLabelIsStoredAsIndex) {
  const auto record = instance_to_json(sample_instance(Task::ECQA, "q"));
  ASSERT_TRUE(record.at("label").is_number_integer());
  EXPECT_EQ(record.at("label").get<int>(), 0);
}

TEST(Corpus, StrictModeRejectsUnknownFields) {
  json record = instance_to_json(sample_instance(Task::SBIC, "s"));
  record["annotator"] = "x";
  EXPECT_THROW(instance_from_json(record, Mode::Strict), DataError);
  EXPECT_NO_THROW(instance_from_json(record, Mode::Relaxed));
}

TEST(Corpus, MalformedRecordReportsLineAndField) {
  TempDir dir;
  const auto path = dir / "bad.jsonl";
  json ok = instance_to_json(sample_instance(Task::ComVE, "a"));
  json bad = instance_to_json(sample_instance(Task::ComVE, "b"));
  bad.erase("choice2");
  write_lines(path, {ok.dump(), "", bad.dump()});
  try {
    read_instances(path, Task::ComVE, Mode::Strict);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.field(), "choice2");
  }
}

TEST(Corpus, InvalidJsonReportsLine) {
  TempDir dir;
  const auto path = dir / "bad.jsonl";
  write_lines(path, {instance_to_json(sample_instance(Task::ComVE, "a")).dump(), "{not json"});
  try {
    read_instances(path, std::nullopt, Mode::Relaxed);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Corpus, DuplicateIdIsAnError) {
  TempDir dir;
  const auto path = dir / "dup.jsonl";
  const auto line = instance_to_json(sample_instance(Task::ESNLI, "same")).dump();
  write_lines(path, {line, line});
  EXPECT_THROW(read_instances(path, Task::ESNLI, Mode::Strict), DataError);
}

TEST(Corpus, WrongTaskIsAnError) {
  TempDir dir;
  const auto path = dir / "t.jsonl";
  write_lines(path, {instance_to_json(sample_instance(Task::ESNLI, "e")).dump()});
  EXPECT_THROW(read_instances(path, Task::SBIC, Mode::Relaxed), DataError);
}

TEST(Corpus, UnknownLabelIsAnError) {
  json record = instance_to_json(sample_instance(Task::SBIC, "s"));
  record["label"] = "rude";
  EXPECT_THROW(instance_from_json(record, Mode::Relaxed), DataError);
  json q = instance_to_json(sample_instance(Task::ECQA, "q"));
  q["label"] = 7;
  EXPECT_THROW(instance_from_json(q, Mode::Relaxed), DataError);
}

TEST(Corpus, EpisodeRoundTripAndIdFromFileName) {
  TempDir dir;
  const auto episode = small_episode(Task::ComVE, 7, 3, 4);
  write_episode(episode, dir / "episode_007.jsonl");
  const auto loaded = load_episode(dir / "episode_007.jsonl", Task::ComVE, Mode::Relaxed);
  EXPECT_EQ(loaded.episode_id, 7);
  EXPECT_EQ(loaded.train, episode.train);
  EXPECT_EQ(loaded.test, episode.test);
  EXPECT_TRUE(loaded.relaxed);
}

TEST(Corpus, StrictModeEnforcesBenchmarkSizes) {
  TempDir dir;
  write_episode(small_episode(Task::SBIC, 1, 8, 20), dir / "episode_1.jsonl");
  EXPECT_THROW(load_episode(dir / "episode_1.jsonl", Task::SBIC, Mode::Strict), DataError);
  write_episode(small_episode(Task::SBIC, 2, kBenchmarkTrainSize, kBenchmarkTestSize),
                dir / "episode_2.jsonl");
  const auto full = load_episode(dir / "episode_2.jsonl", Task::SBIC, Mode::Strict);
  EXPECT_EQ(full.train.size(), 48u);
  EXPECT_EQ(full.test.size(), 350u);
  EXPECT_FALSE(full.relaxed);
}

TEST(Corpus, TrainRecordsNeedGold) {
  TempDir dir;
  json record = instance_to_json(without_gold(sample_instance(Task::ComVE, "c")));
  record["split"] = "train";
  write_lines(dir / "episode_1.jsonl", {record.dump()});
  EXPECT_THROW(load_episode(dir / "episode_1.jsonl", Task::ComVE, Mode::Relaxed), DataError);
}

TEST(Corpus, WriteDatasetRejectsMixedTasks) {
  TempDir dir;
  std::vector<Instance> mixed = {sample_instance(Task::ComVE, "a"), sample_instance(Task::SBIC, "b")};
  EXPECT_THROW(write_dataset(mixed, dir / "m.jsonl"), PreconditionError);
}

TEST(Corpus, ListEpisodeFilesSortsNumerically) {
  TempDir dir;
  for (int id : {10, 2, 1}) {
    write_episode(small_episode(Task::ComVE, id, 1, 1), dir / ("episode_" + std::to_string(id) + ".jsonl"));
  }
  const auto files = list_episode_files(dir.path());
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[0].filename(), "episode_1.jsonl");
  EXPECT_EQ(files[2].filename(), "episode_10.jsonl");
  EXPECT_THROW(list_episode_files(dir / "missing"), DataError);
}

TEST(Pool, DisjointFromTargetAndDeterministic) {
  const auto episodes = toy::make_episodes(Task::ESNLI, {4, 8, 20, 0});
  const auto& target = episodes[1];
  const auto a = build_unlabeled_pool(episodes, target, 42);
  const auto b = build_unlabeled_pool(episodes, target, 42);
  EXPECT_EQ(a.evaluation_view(), b.evaluation_view());
  EXPECT_EQ(a.size(), target.test.size());
  std::unordered_set<std::string> target_ids;
  for (const auto* split : {&target.train, &target.test}) {
    for (const auto& i : *split) target_ids.insert(i.id);
  }
  std::unordered_set<std::string> seen;
  for (const auto& i : a.evaluation_view()) {
    EXPECT_FALSE(target_ids.count(i.id)) << i.id;
    EXPECT_TRUE(seen.insert(i.id).second) << "duplicate " << i.id;
  }
  const auto c = build_unlabeled_pool(episodes, target, 43);
  EXPECT_NE(a.evaluation_view(), c.evaluation_view());
}

TEST(Pool, PipelineViewIsMaskedEvaluationViewIsNot) {
  const auto episodes = toy::make_episodes(Task::ComVE, {3, 8, 20, 0});
  const auto pool = build_unlabeled_pool(episodes, episodes[0], 1);
  for (const auto& i : pool.pipeline_view()) {
    EXPECT_FALSE(i.gold_label);
    EXPECT_FALSE(i.gold_rationale);
  }
  for (const auto& i : pool.evaluation_view()) EXPECT_TRUE(i.gold_label);
}

TEST(Pool, InsufficientCandidatesAndTaskMismatch) {
  std::vector<Episode> episodes = {small_episode(Task::SBIC, 1, 2, 10), small_episode(Task::SBIC, 2, 2, 3)};
  EXPECT_THROW(build_unlabeled_pool(episodes, episodes[0], 0), PreconditionError);
  std::vector<Episode> lonely = {small_episode(Task::SBIC, 1, 2, 3)};
  EXPECT_THROW(build_unlabeled_pool(lonely, lonely[0], 0), PreconditionError);
  std::vector<Episode> mixed = {small_episode(Task::SBIC, 1, 2, 3), small_episode(Task::ComVE, 2, 5, 5)};
  EXPECT_THROW(build_unlabeled_pool(mixed, mixed[0], 0), PreconditionError);
}

TEST(Pool, SamplingIsUniformOverCandidates) {
  // Target needs 5 instances; the other episodes offer 20 candidates.
  std::vector<Episode> episodes = {small_episode(Task::ComVE, 1, 1, 5), small_episode(Task::ComVE, 2, 4, 6),
                                   small_episode(Task::ComVE, 3, 5, 5)};
  constexpr int kSeeds = 10000;
  std::map<std::string, int> hits;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto pool = build_unlabeled_pool(episodes, episodes[0], seed);
    for (const auto& i : pool.evaluation_view()) ++hits[i.id];
  }
  ASSERT_EQ(hits.size(), 20u);
  // Pearson goodness of fit against the uniform expectation; 43.82 is the
  // 0.999 quantile of chi-squared with 19 degrees of freedom.
  const double expected = kSeeds * 5.0 / 20.0;
  double statistic = 0.0;
  for (const auto& [id, count] : hits) statistic += (count - expected) * (count - expected) / expected;
  EXPECT_LT(statistic, 43.82);
}
