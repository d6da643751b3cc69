#include "zara/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <random>
#include <set>
#include <unordered_set>

#include "zara/error.hpp"

namespace zara::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string_view> content_keys(Task task) {
  switch (task) {
    case Task::ComVE: return {"choice1", "choice2"};
    case Task::SBIC: return {"post"};
    case Task::ESNLI: return {"premise", "hypothesis"};
    case Task::ECQA: return {"question", "choices"};
  }
  return {};
}

bool is_known_key(Task task, std::string_view key) {
  static constexpr std::array<std::string_view, 5> kCommon = {"id", "task", "split", "label",
                                                              "rationale"};
  if (std::find(kCommon.begin(), kCommon.end(), key) != kCommon.end()) return true;
  const auto keys = content_keys(task);
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

class RecordReader {
 public:
  RecordReader(const json& record, const std::string& path, std::size_t line)
      : record_(record), path_(path), line_(line) {}

  [[noreturn]] void fail(const std::string& field, const std::string& message) const {
    throw DataError(path_, line_, field, message);
  }

  std::string string_field(const std::string& key) const {
    auto it = record_.find(key);
    if (it == record_.end()) fail(key, "missing required field");
    if (!it->is_string()) fail(key, "expected a string");
    return it->get<std::string>();
  }

  std::optional<std::string> optional_string(const std::string& key) const {
    auto it = record_.find(key);
    if (it == record_.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) fail(key, "expected a string");
    return it->get<std::string>();
  }

  const json& record() const { return record_; }

 private:
  const json& record_;
  const std::string& path_;
  std::size_t line_;
};

Content read_content(Task task, const RecordReader& reader) {
  switch (task) {
    case Task::ComVE:
      return ComVEContent{reader.string_field("choice1"), reader.string_field("choice2")};
    case Task::SBIC:
      return SBICContent{reader.string_field("post")};
    case Task::ESNLI:
      return ESNLIContent{reader.string_field("premise"), reader.string_field("hypothesis")};
    case Task::ECQA: {
      ECQAContent content;
      content.question = reader.string_field("question");
      auto it = reader.record().find("choices");
      if (it == reader.record().end()) reader.fail("choices", "missing required field");
      if (!it->is_array() || it->size() != 5) {
        reader.fail("choices", "expected an array of exactly 5 strings");
      }
      for (std::size_t i = 0; i < 5; ++i) {
        const auto& choice = (*it)[i];
        if (!choice.is_string() || choice.get<std::string>().empty()) {
          reader.fail("choices", "choice " + std::to_string(i) + " must be a non-empty string");
        }
        content.choices[i] = choice.get<std::string>();
      }
      return content;
    }
  }
  reader.fail("task", "unsupported task");
}

std::optional<Label> read_label(Task task, const RecordReader& reader) {
  auto it = reader.record().find("label");
  if (it == reader.record().end() || it->is_null()) return std::nullopt;
  if (task == Task::ECQA && it->is_number_integer()) {
    const auto index = it->get<long long>();
    if (index < 0 || index > 4) reader.fail("label", "ECQA label must be a choice index 0-4");
    return Label{static_cast<int>(index)};
  }
  if (!it->is_string()) reader.fail("label", "expected a label string");
  auto label = parse_label(task, it->get<std::string>());
  if (!label) {
    reader.fail("label", "'" + it->get<std::string>() + "' is not a label of task " +
                             std::string(task_key(task)));
  }
  return label;
}

int episode_id_from_stem(const fs::path& path) {
  const std::string stem = path.stem().string();
  std::size_t end = stem.size();
  std::size_t begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
  if (begin == end) return 0;
  return std::stoi(stem.substr(begin, end - begin));
}

template <typename Fn>
void for_each_record(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open record file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = std::all_of(line.begin(), line.end(),
                             [](char c) { return c == ' ' || c == '\t'; });
    if (blank) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path.string(), line_no, "", std::string("invalid record: ") + e.what());
    }
    fn(record, line_no);
  }
}

void write_lines(const std::vector<json>& records, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& record : records) out << record.dump() << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

UnlabeledPool::UnlabeledPool(int episode_id, std::uint64_t seed, std::vector<Instance> instances)
    : episode_id_(episode_id), seed_(seed), instances_(std::move(instances)) {}

std::vector<Instance> UnlabeledPool::pipeline_view() const {
  std::vector<Instance> view;
  view.reserve(instances_.size());
  for (const auto& instance : instances_) view.push_back(without_gold(instance));
  return view;
}

json instance_to_json(const Instance& instance) {
  json record;
  record["id"] = instance.id;
  record["task"] = std::string(task_key(instance.task()));
  std::visit(
      [&](const auto& content) {
        using T = std::decay_t<decltype(content)>;
        if constexpr (std::is_same_v<T, ComVEContent>) {
          record["choice1"] = content.choice1;
          record["choice2"] = content.choice2;
        } else if constexpr (std::is_same_v<T, SBICContent>) {
          record["post"] = content.post;
        } else if constexpr (std::is_same_v<T, ESNLIContent>) {
          record["premise"] = content.premise;
          record["hypothesis"] = content.hypothesis;
        } else {
          record["question"] = content.question;
          record["choices"] = content.choices;
        }
      },
      instance.content);
  if (instance.gold_label) {
    if (instance.task() == Task::ECQA) {
      record["label"] = instance.gold_label->index;
    } else {
      record["label"] = label_name(instance.task(), *instance.gold_label);
    }
  }
  if (instance.gold_rationale) record["rationale"] = *instance.gold_rationale;
  return record;
}

Instance instance_from_json(const json& record, Mode mode, const std::string& path,
                            std::size_t line) {
  if (!record.is_object()) throw DataError(path, line, "", "record is not an object");
  RecordReader reader(record, path, line);

  Instance instance;
  instance.id = reader.string_field("id");
  if (instance.id.empty()) reader.fail("id", "must be non-empty");
  const std::string task_text = reader.string_field("task");
  const auto task = parse_task(task_text);
  if (!task) reader.fail("task", "unknown task '" + task_text + "'");

  if (mode == Mode::Strict) {
    for (const auto& [key, _] : record.items()) {
      if (!is_known_key(*task, key)) reader.fail(key, "unknown field for task " + task_text);
    }
  }

  instance.content = read_content(*task, reader);
  instance.gold_label = read_label(*task, reader);
  instance.gold_rationale = reader.optional_string("rationale");
  try {
    validate_instance(instance);
  } catch (const DataError& e) {
    throw DataError(path, line, "", e.what());
  }
  return instance;
}

std::vector<Instance> read_instances(const fs::path& path, std::optional<Task> expected,
                                     Mode mode) {
  std::vector<Instance> instances;
  std::unordered_set<std::string> seen;
  for_each_record(path, [&](const json& record, std::size_t line) {
    Instance instance = instance_from_json(record, mode, path.string(), line);
    if (expected && instance.task() != *expected) {
      throw DataError(path.string(), line, "task",
                      "expected task " + std::string(task_key(*expected)) + ", got " +
                          std::string(task_key(instance.task())));
    }
    if (!seen.insert(instance.id).second) {
      throw DataError(path.string(), line, "id", "duplicate id '" + instance.id + "'");
    }
    instances.push_back(std::move(instance));
  });
  return instances;
}

Episode load_episode(const fs::path& path, Task task, Mode mode) {
  Episode episode;
  episode.episode_id = episode_id_from_stem(path);
  episode.task = task;
  episode.relaxed = mode == Mode::Relaxed;

  std::unordered_set<std::string> seen;
  for_each_record(path, [&](const json& record, std::size_t line) {
    Instance instance = instance_from_json(record, mode, path.string(), line);
    if (instance.task() != task) {
      throw DataError(path.string(), line, "task",
                      "expected task " + std::string(task_key(task)) + ", got " +
                          std::string(task_key(instance.task())));
    }
    if (!seen.insert(instance.id).second) {
      throw DataError(path.string(), line, "id", "duplicate id '" + instance.id + "'");
    }
    auto split = record.find("split");
    if (split == record.end() || !split->is_string()) {
      throw DataError(path.string(), line, "split", "expected \"train\" or \"test\"");
    }
    if (*split == "train") {
      if (!instance.gold_label || !instance.gold_rationale) {
        throw DataError(path.string(), line, "label",
                        "training instances require a gold label and rationale");
      }
      episode.train.push_back(std::move(instance));
    } else if (*split == "test") {
      episode.test.push_back(std::move(instance));
    } else {
      throw DataError(path.string(), line, "split", "expected \"train\" or \"test\"");
    }
  });

  if (mode == Mode::Strict &&
      (episode.train.size() != kBenchmarkTrainSize || episode.test.size() != kBenchmarkTestSize)) {
    throw DataError(path.string() + ": strict mode requires " +
                    std::to_string(kBenchmarkTrainSize) + " train / " +
                    std::to_string(kBenchmarkTestSize) + " test instances, found " +
                    std::to_string(episode.train.size()) + " / " +
                    std::to_string(episode.test.size()));
  }
  return episode;
}

void write_dataset(std::span<const Instance> instances, const fs::path& path) {
  std::vector<json> records;
  records.reserve(instances.size());
  for (const auto& instance : instances) {
    if (instance.task() != instances.front().task()) {
      throw PreconditionError("write_dataset: mixed tasks (" +
                              std::string(task_key(instances.front().task())) + " and " +
                              std::string(task_key(instance.task())) + ")");
    }
    records.push_back(instance_to_json(instance));
  }
  write_lines(records, path);
}

void write_episode(const Episode& episode, const fs::path& path) {
  std::vector<json> records;
  for (const auto& instance : episode.train) {
    json record = instance_to_json(instance);
    record["split"] = "train";
    records.push_back(std::move(record));
  }
  for (const auto& instance : episode.test) {
    json record = instance_to_json(instance);
    record["split"] = "test";
    records.push_back(std::move(record));
  }
  write_lines(records, path);
}

std::vector<fs::path> list_episode_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("episode directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    const int ia = episode_id_from_stem(a);
    const int ib = episode_id_from_stem(b);
    return ia != ib ? ia < ib : a < b;
  });
  return files;
}

UnlabeledPool build_unlabeled_pool(std::span<const Episode> all_episodes, const Episode& target,
                                   std::uint64_t seed) {
  std::unordered_set<std::string> excluded;
  for (const auto& instance : target.train) excluded.insert(instance.id);
  for (const auto& instance : target.test) excluded.insert(instance.id);

  std::vector<const Instance*> candidates;
  std::size_t other_episodes = 0;
  for (const auto& episode : all_episodes) {
    if (episode.task != target.task) {
      throw PreconditionError("build_unlabeled_pool: task mismatch (episode " +
                              std::to_string(episode.episode_id) + " is " +
                              std::string(task_key(episode.task)) + ", target is " +
                              std::string(task_key(target.task)) + ")");
    }
    if (episode.episode_id == target.episode_id) continue;
    ++other_episodes;
    for (const auto* split : {&episode.train, &episode.test}) {
      for (const auto& instance : *split) {
        if (excluded.insert(instance.id).second) candidates.push_back(&instance);
      }
    }
  }

  const std::size_t wanted = target.test.size();
  if (other_episodes == 0 || candidates.size() < wanted) {
    throw PreconditionError("build_unlabeled_pool: insufficient candidates for episode " +
                            std::to_string(target.episode_id) + " (need " +
                            std::to_string(wanted) + ", have " +
                            std::to_string(candidates.size()) + " from " +
                            std::to_string(other_episodes) + " other episodes)");
  }

  std::mt19937_64 rng(seed);
  std::vector<const Instance*> sampled;
  sampled.reserve(wanted);
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(sampled), wanted, rng);

  std::vector<Instance> instances;
  instances.reserve(wanted);
  for (const auto* instance : sampled) instances.push_back(*instance);
  return UnlabeledPool(target.episode_id, seed, std::move(instances));
}

}  // namespace zara::corpus
