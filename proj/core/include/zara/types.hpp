#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace zara {

// The four few-shot self-rationalization sub-tasks.
enum class Task {
  ComVE,  // pick the nonsensical sentence of two
  SBIC,   // offensiveness classification of a social-media post
  ESNLI,  // premise/hypothesis inference
  ECQA,   // five-way commonsense multiple choice
};

inline constexpr std::array<Task, 4> kAllTasks = {Task::ComVE, Task::SBIC,
                                                  Task::ESNLI, Task::ECQA};

/// Lowercase identifier used in files and on the command line
/// ("comve", "sbic", "esnli", "ecqa").
std::string_view task_key(Task task);
std::string_view task_display_name(Task task);
/// Accepts the key or the display name, case-insensitively.
std::optional<Task> parse_task(std::string_view text);
Task task_from_key(std::string_view text);  // throws PreconditionError

std::size_t class_count(Task task);

/// A predicted or gold answer: index into the task's label set.
/// ComVE {choice1, choice2}; SBIC {offensive, not offensive};
/// E-SNLI {entailment, neutral, contradiction}; ECQA choice index 0-4.
struct Label {
  int index = 0;
  friend auto operator<=>(const Label&, const Label&) = default;
};

/// Canonical label string. For ECQA this is the choice index as a decimal
/// digit; use answer_text() to get the choice wording.
std::string label_name(Task task, Label label);
/// Short key suitable for report columns ("(a)".."(e)" for ECQA).
std::string label_key(Task task, Label label);
/// Parses a canonical label string. ECQA accepts "0".."4" and "(a)".."(e)".
std::optional<Label> parse_label(Task task, std::string_view text);
bool is_valid_label(Task task, Label label);

struct ComVEContent {
  std::string choice1;
  std::string choice2;
  friend bool operator==(const ComVEContent&, const ComVEContent&) = default;
};

struct SBICContent {
  std::string post;
  friend bool operator==(const SBICContent&, const SBICContent&) = default;
};

struct ESNLIContent {
  std::string premise;
  std::string hypothesis;
  friend bool operator==(const ESNLIContent&, const ESNLIContent&) = default;
};

struct ECQAContent {
  std::string question;
  std::array<std::string, 5> choices;
  friend bool operator==(const ECQAContent&, const ECQAContent&) = default;
};

// Alternative order mirrors the Task enumerators.
using Content = std::variant<ComVEContent, SBICContent, ESNLIContent, ECQAContent>;

struct Instance {
  std::string id;
  Content content;
  std::optional<Label> gold_label;
  std::optional<std::string> gold_rationale;

  Task task() const { return static_cast<Task>(content.index()); }
  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Text a label stands for on this instance: the choice wording for ECQA,
/// the canonical label string otherwise.
std::string answer_text(const Instance& instance, Label label);

/// Copy of the instance with gold label and rationale removed.
Instance without_gold(const Instance& instance);

/// Checks the per-task content invariants (non-empty choices, label in
/// range). Throws DataError naming the instance id.
void validate_instance(const Instance& instance);

/// Parsed generator output for one instance.
struct Prediction {
  std::string instance_id;
  std::optional<Label> answer;
  std::optional<std::string> rationale;
  std::string raw_text;
  bool parse_ok = false;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

}  // namespace zara
