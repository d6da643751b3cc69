#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "zara/corpus.hpp"

// Small synthetic corpora for tests, demos and benchmarks. Instances are
// built from fixed word lists; gold rationales are the ones the mock scorers
// rate as plausible.
namespace zara::toy {

struct ToySpec {
  int episodes = 3;
  std::size_t train = 8;
  std::size_t test = 20;
  std::uint64_t seed = 0;
};

/// Episodes numbered 1..episodes with globally unique ids
/// ("<task>-e<episode>-<n>"). Deterministic in (task, spec).
std::vector<corpus::Episode> make_episodes(Task task, const ToySpec& spec);

/// Writes every task's episodes to `<root>/<task>/episode_<id>.jsonl`.
void write_corpus(const std::filesystem::path& root, const ToySpec& spec);

}  // namespace zara::toy
