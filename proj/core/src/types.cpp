#include "zara/types.hpp"

#include <algorithm>
#include <cctype>

#include "zara/error.hpp"
#include "zara/text.hpp"

namespace zara {

namespace {

constexpr std::array<std::string_view, 2> kComVELabels = {"choice1", "choice2"};
constexpr std::array<std::string_view, 2> kSBICLabels = {"offensive", "not offensive"};
constexpr std::array<std::string_view, 3> kESNLILabels = {"entailment", "neutral",
                                                          "contradiction"};
constexpr std::array<std::string_view, 5> kECQALetters = {"(a)", "(b)", "(c)", "(d)", "(e)"};

}  // namespace

std::string_view task_key(Task task) {
  switch (task) {
    case Task::ComVE: return "comve";
    case Task::SBIC: return "sbic";
    case Task::ESNLI: return "esnli";
    case Task::ECQA: return "ecqa";
  }
  return "unknown";
}

std::string_view task_display_name(Task task) {
  switch (task) {
    case Task::ComVE: return "ComVE";
    case Task::SBIC: return "SBIC";
    case Task::ESNLI: return "E-SNLI";
    case Task::ECQA: return "ECQA";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view text) {
  const std::string lowered = text::to_lower_ascii(text::trim(text));
  for (Task task : kAllTasks) {
    if (lowered == task_key(task) ||
        lowered == text::to_lower_ascii(task_display_name(task))) {
      return task;
    }
  }
  return std::nullopt;
}

Task task_from_key(std::string_view text) {
  if (auto task = parse_task(text)) return *task;
  throw PreconditionError("unknown task '" + std::string(text) +
                          "' (expected comve, sbic, esnli or ecqa)");
}

std::size_t class_count(Task task) {
  switch (task) {
    case Task::ComVE: return 2;
    case Task::SBIC: return 2;
    case Task::ESNLI: return 3;
    case Task::ECQA: return 5;
  }
  return 0;
}

bool is_valid_label(Task task, Label label) {
  return label.index >= 0 && static_cast<std::size_t>(label.index) < class_count(task);
}

std::string label_name(Task task, Label label) {
  if (!is_valid_label(task, label)) {
    throw PreconditionError("label index " + std::to_string(label.index) +
                            " out of range for task " +
                            std::string(task_key(task)));
  }
  const auto i = static_cast<std::size_t>(label.index);
  switch (task) {
    case Task::ComVE: return std::string(kComVELabels[i]);
    case Task::SBIC: return std::string(kSBICLabels[i]);
    case Task::ESNLI: return std::string(kESNLILabels[i]);
    case Task::ECQA: return std::to_string(label.index);
  }
  return {};
}

std::string label_key(Task task, Label label) {
  if (task == Task::ECQA && is_valid_label(task, label)) {
    return std::string(kECQALetters[static_cast<std::size_t>(label.index)]);
  }
  return label_name(task, label);
}

std::optional<Label> parse_label(Task task, std::string_view text) {
  const std::string lowered = text::to_lower_ascii(text::trim(text));
  auto find_in = [&](auto const& names) -> std::optional<Label> {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (lowered == names[i]) return Label{static_cast<int>(i)};
    }
    return std::nullopt;
  };
  switch (task) {
    case Task::ComVE: return find_in(kComVELabels);
    case Task::SBIC: return find_in(kSBICLabels);
    case Task::ESNLI: return find_in(kESNLILabels);
    case Task::ECQA:
      if (lowered.size() == 1 && lowered[0] >= '0' && lowered[0] <= '4') {
        return Label{lowered[0] - '0'};
      }
      return find_in(kECQALetters);
  }
  return std::nullopt;
}

std::string answer_text(const Instance& instance, Label label) {
  if (const auto* ecqa = std::get_if<ECQAContent>(&instance.content)) {
    if (!is_valid_label(Task::ECQA, label)) {
      throw PreconditionError("ECQA choice index " + std::to_string(label.index) +
                              " out of range");
    }
    return ecqa->choices[static_cast<std::size_t>(label.index)];
  }
  return label_name(instance.task(), label);
}

Instance without_gold(const Instance& instance) {
  Instance copy = instance;
  copy.gold_label.reset();
  copy.gold_rationale.reset();
  return copy;
}

void validate_instance(const Instance& instance) {
  auto fail = [&](const std::string& message) {
    throw DataError("instance '" + instance.id + "': " + message);
  };
  if (instance.id.empty()) throw DataError("instance with empty id");
  std::visit(
      [&](const auto& content) {
        using T = std::decay_t<decltype(content)>;
        if constexpr (std::is_same_v<T, ComVEContent>) {
          if (content.choice1.empty() || content.choice2.empty()) {
            fail("ComVE requires two non-empty choices");
          }
        } else if constexpr (std::is_same_v<T, ECQAContent>) {
          for (const auto& choice : content.choices) {
            if (choice.empty()) fail("ECQA requires five non-empty choices");
          }
        }
      },
      instance.content);
  if (instance.gold_label && !is_valid_label(instance.task(), *instance.gold_label)) {
    fail("gold label index " + std::to_string(instance.gold_label->index) +
         " is not in the label set of " + std::string(task_key(instance.task())));
  }
}

}  // namespace zara
