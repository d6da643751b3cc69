#include "zara/toy.hpp"

#include <array>
#include <cstdio>
#include <random>
#include <string>

#include "zara/mock_backend.hpp"
#include "zara/seed.hpp"

namespace zara::toy {

namespace {

constexpr std::array kPeople = {"man", "woman", "child", "farmer", "teacher", "chef", "pilot", "dancer"};
constexpr std::array kPlaces = {"park", "kitchen", "garden", "library", "market", "harbor", "station",
                                "museum"};
constexpr std::array kVerbs = {"reading", "cooking", "painting", "running", "singing", "sleeping",
                               "writing", "fishing"};
constexpr std::array kObjects = {"apple", "book", "kettle", "guitar", "lamp", "carpet", "ladder",
                                 "basket", "bicycle", "candle"};
constexpr std::array kContainers = {"drawer", "fridge", "backpack", "cupboard", "box", "bucket"};
constexpr std::array kTargets = {"cyclists", "tourists", "neighbors", "gamers", "students", "drivers"};
constexpr std::array kKind = {"lovely", "helpful", "friendly", "welcome", "brilliant"};
constexpr std::array kMean = {"worthless", "stupid", "disgusting", "pathetic", "useless"};

// Portable draws: std::uniform_int_distribution is not specified bit-exactly.
template <typename Array>
std::string pick(std::mt19937_64& rng, const Array& values) {
  return values[rng() % values.size()];
}

std::size_t draw(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

Instance make_instance(Task task, std::string id, std::mt19937_64& rng) {
  Instance instance;
  instance.id = std::move(id);
  const int label = static_cast<int>(draw(rng, class_count(task)));
  switch (task) {
    case Task::ComVE: {
      const auto object = pick(rng, kObjects);
      const auto container = pick(rng, kContainers);
      const auto person = pick(rng, kPeople);
      const std::string sensible = "The " + person + " put the " + object + " in the " + container + ".";
      const std::string absurd = "The " + person + " put the " + container + " in the " + object + ".";
      // The gold label marks the sentence against common sense.
      instance.content = label == 0 ? ComVEContent{absurd, sensible} : ComVEContent{sensible, absurd};
      break;
    }
    case Task::SBIC: {
      const auto target = pick(rng, kTargets);
      const std::string post = label == 0 ? "all " + target + " are " + pick(rng, kMean)
                                          : "the " + target + " today were " + pick(rng, kKind);
      instance.content = SBICContent{post};
      break;
    }
    case Task::ESNLI: {
      const auto person = pick(rng, kPeople);
      const auto verb = pick(rng, kVerbs);
      const auto place = pick(rng, kPlaces);
      const std::string premise = "A " + person + " is " + verb + " in the " + place + ".";
      std::string hypothesis;
      if (label == 0) {
        hypothesis = "A " + person + " is in the " + place + ".";
      } else if (label == 1) {
        hypothesis = "A " + person + " is " + verb + " with a friend.";
      } else {
        std::string other = pick(rng, kPlaces);
        if (other == place) other = place == kPlaces[0] ? kPlaces[1] : kPlaces[0];
        hypothesis = "A " + person + " is asleep at the " + other + ".";
      }
      instance.content = ESNLIContent{premise, hypothesis};
      break;
    }
    case Task::ECQA: {
      const auto object = pick(rng, kObjects);
      ECQAContent content;
      content.question = "Where would a " + pick(rng, kPeople) + " keep a " + object + "?";
      std::size_t start = draw(rng, kPlaces.size());
      for (std::size_t i = 0; i < 5; ++i) content.choices[i] = kPlaces[(start + i) % kPlaces.size()];
      instance.content = content;
      break;
    }
  }
  instance.gold_label = Label{label};
  instance.gold_rationale = backend::mock::plausible_rationale(instance, Label{label});
  return instance;
}

}  // namespace

std::vector<corpus::Episode> make_episodes(Task task, const ToySpec& spec) {
  std::vector<corpus::Episode> episodes;
  for (int e = 1; e <= spec.episodes; ++e) {
    std::mt19937_64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(task) * 1000 + e));
    corpus::Episode episode;
    episode.episode_id = e;
    episode.task = task;
    episode.relaxed = spec.train != corpus::kBenchmarkTrainSize || spec.test != corpus::kBenchmarkTestSize;
    const std::string prefix = std::string(task_key(task)) + "-e" + std::to_string(e) + "-";
    for (std::size_t i = 0; i < spec.train + spec.test; ++i) {
      auto instance = make_instance(task, prefix + std::to_string(i), rng);
      (i < spec.train ? episode.train : episode.test).push_back(std::move(instance));
    }
    episodes.push_back(std::move(episode));
  }
  return episodes;
}

void write_corpus(const std::filesystem::path& root, const ToySpec& spec) {
  for (Task task : kAllTasks) {
    for (const auto& episode : make_episodes(task, spec)) {
      char name[32];
      std::snprintf(name, sizeof name, "episode_%03d.jsonl", episode.episode_id);
      corpus::write_episode(episode, root / std::string(task_key(task)) / name);
    }
  }
}

}  // namespace zara::toy
