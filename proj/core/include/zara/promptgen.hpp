#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "zara/types.hpp"

namespace zara::promptgen {

inline constexpr std::string_view kDefaultSeparator = " because ";

// Placeholders are written `{name}`; `{{` and `}}` are literal braces.
//
// Input placeholders per task:
//   ComVE  {choice1} {choice2}
//   SBIC   {post}
//   E-SNLI {premise} {hypothesis}
//   ECQA   {question} {choices}   ({choices} renders "(a) x (b) y ... (e) z")
//
// The target pattern has the shape `<prefix>{answer}<separator>{rationale}<suffix>`.
struct PromptTemplate {
  Task task = Task::ComVE;
  std::string input_pattern;
  std::string target_pattern = "{answer} because {rationale}";
  std::string separator = std::string(kDefaultSeparator);

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

PromptTemplate default_template(Task task);

/// Throws PreconditionError if the target pattern does not contain exactly
/// one {answer} and one {rationale} joined by the separator, or if the input
/// pattern is unterminated.
void validate_template(const PromptTemplate& tmpl);

/// Reads a JSON template document with `input_pattern`, `target_pattern` and
/// `separator`. Missing keys fall back to the task default.
PromptTemplate load_template(const std::filesystem::path& path, Task task);
void save_template(const PromptTemplate& tmpl, const std::filesystem::path& path);

/// Fills the input pattern from the instance. Empty content fields are
/// allowed; each one appends a note to `warnings` when it is non-null.
std::string render_prompt(const PromptTemplate& tmpl, const Instance& instance,
                          std::vector<std::string>* warnings = nullptr);

/// Gold target text. For ECQA `{answer}` is the choice text.
std::string render_target(const PromptTemplate& tmpl, const Instance& instance, Label label,
                          std::string_view rationale);
/// As above, with the label given as its canonical string; unknown labels
/// throw PreconditionError.
std::string render_target(const PromptTemplate& tmpl, const Instance& instance,
                          std::string_view label, std::string_view rationale);

/// Splits generated text at the first separator and matches the answer
/// against the task's labels. Never throws; failures give parse_ok = false.
Prediction parse_prediction(const PromptTemplate& tmpl, std::string_view generated,
                            const Instance& instance);

}  // namespace zara::promptgen
