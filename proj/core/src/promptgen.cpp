#include "zara/promptgen.hpp"

#include <fstream>
#include <functional>
#include <optional>

#include <nlohmann/json.hpp>

#include "zara/error.hpp"
#include "zara/text.hpp"

namespace zara::promptgen {

namespace {

using Lookup = std::function<std::optional<std::string>(std::string_view)>;

// Single pass: substituted values are never rescanned.
std::string substitute(std::string_view pattern, const Lookup& lookup) {
  std::string out;
  out.reserve(pattern.size() + 64);
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const char c = pattern[i];
    if (c == '{' && i + 1 < pattern.size() && pattern[i + 1] == '{') {
      out.push_back('{');
      ++i;
    } else if (c == '}' && i + 1 < pattern.size() && pattern[i + 1] == '}') {
      out.push_back('}');
      ++i;
    } else if (c == '{') {
      const auto close = pattern.find('}', i + 1);
      if (close == std::string_view::npos) {
        throw PreconditionError("unterminated placeholder in template: " + std::string(pattern));
      }
      const auto name = pattern.substr(i + 1, close - i - 1);
      auto value = lookup(name);
      if (!value) throw PreconditionError("missing content field '{" + std::string(name) + "}'");
      out += *value;
      i = close;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

struct TargetShape {
  std::string prefix;
  std::string suffix;
};

TargetShape target_shape(const PromptTemplate& tmpl) {
  const std::string_view pattern = tmpl.target_pattern;
  const auto answer = pattern.find("{answer}");
  const auto rationale = pattern.find("{rationale}");
  auto literal = [](std::string_view s) {
    return substitute(s, [](std::string_view) { return std::nullopt; });
  };
  return {literal(pattern.substr(0, answer)),
          literal(pattern.substr(rationale + std::string_view("{rationale}").size()))};
}

std::string render_choices(const ECQAContent& content) {
  std::string out;
  for (std::size_t i = 0; i < content.choices.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += '(';
    out += static_cast<char>('a' + i);
    out += ") ";
    out += content.choices[i];
  }
  return out;
}

std::optional<std::string> content_field(const Instance& instance, std::string_view name) {
  return std::visit(
      [&](const auto& content) -> std::optional<std::string> {
        using T = std::decay_t<decltype(content)>;
        if constexpr (std::is_same_v<T, ComVEContent>) {
          if (name == "choice1") return content.choice1;
          if (name == "choice2") return content.choice2;
        } else if constexpr (std::is_same_v<T, SBICContent>) {
          if (name == "post") return content.post;
        } else if constexpr (std::is_same_v<T, ESNLIContent>) {
          if (name == "premise") return content.premise;
          if (name == "hypothesis") return content.hypothesis;
        } else {
          if (name == "question") return content.question;
          if (name == "choices") return render_choices(content);
        }
        return std::nullopt;
      },
      instance.content);
}

void require_task(const PromptTemplate& tmpl, const Instance& instance) {
  if (tmpl.task != instance.task()) {
    throw PreconditionError("template for task " + std::string(task_key(tmpl.task)) +
                            " applied to " + std::string(task_key(instance.task())) +
                            " instance '" + instance.id + "'");
  }
}

std::optional<Label> match_answer(const Instance& instance, std::string_view answer) {
  const std::string normalized = text::to_lower_ascii(text::trim(answer));
  if (const auto* ecqa = std::get_if<ECQAContent>(&instance.content)) {
    for (std::size_t i = 0; i < ecqa->choices.size(); ++i) {
      if (normalized == text::to_lower_ascii(text::trim(ecqa->choices[i]))) {
        return Label{static_cast<int>(i)};
      }
    }
    static constexpr std::array<std::string_view, 5> kLetters = {"(a)", "(b)", "(c)", "(d)",
                                                                 "(e)"};
    for (std::size_t i = 0; i < kLetters.size(); ++i) {
      if (normalized == kLetters[i]) return Label{static_cast<int>(i)};
    }
    return std::nullopt;
  }
  return parse_label(instance.task(), normalized);
}

}  // namespace

PromptTemplate default_template(Task task) {
  PromptTemplate tmpl;
  tmpl.task = task;
  switch (task) {
    case Task::ComVE:
      tmpl.input_pattern =
          "explain which sentence is against common sense. choice1: {choice1} choice2: {choice2}";
      break;
    case Task::SBIC:
      tmpl.input_pattern = "explain whether the post is offensive. post: {post}";
      break;
    case Task::ESNLI:
      tmpl.input_pattern =
          "explain the relation between premise and hypothesis. premise: {premise} "
          "hypothesis: {hypothesis}";
      break;
    case Task::ECQA:
      tmpl.input_pattern = "explain the answer. question: {question} choices: {choices}";
      break;
  }
  return tmpl;
}

void validate_template(const PromptTemplate& tmpl) {
  if (tmpl.separator.empty()) throw PreconditionError("template separator must be non-empty");
  const std::string_view target = tmpl.target_pattern;
  if (count_occurrences(target, "{answer}") != 1 ||
      count_occurrences(target, "{rationale}") != 1) {
    throw PreconditionError(
        "target pattern needs exactly one {answer} and one {rationale}: " + tmpl.target_pattern);
  }
  const std::string joined = "{answer}" + tmpl.separator + "{rationale}";
  if (target.find(joined) == std::string_view::npos) {
    throw PreconditionError("target pattern must join {answer} and {rationale} with the separator '" +
                            tmpl.separator + "'");
  }
  // Dry-run the input pattern for syntax; unknown names are reported at render time.
  substitute(tmpl.input_pattern, [](std::string_view) { return std::string(); });
}

PromptTemplate load_template(const std::filesystem::path& path, Task task) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open template file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": invalid template document: " + e.what());
  }
  PromptTemplate tmpl = default_template(task);
  auto read = [&](const char* key, std::string& field) {
    if (auto it = doc.find(key); it != doc.end()) {
      if (!it->is_string()) throw DataError(path.string() + ": field '" + key + "' must be a string");
      field = it->get<std::string>();
    }
  };
  read("input_pattern", tmpl.input_pattern);
  read("target_pattern", tmpl.target_pattern);
  read("separator", tmpl.separator);
  validate_template(tmpl);
  return tmpl;
}

void save_template(const PromptTemplate& tmpl, const std::filesystem::path& path) {
  nlohmann::json doc = {{"task", std::string(task_key(tmpl.task))},
                        {"input_pattern", tmpl.input_pattern},
                        {"target_pattern", tmpl.target_pattern},
                        {"separator", tmpl.separator}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::string render_prompt(const PromptTemplate& tmpl, const Instance& instance,
                          std::vector<std::string>* warnings) {
  require_task(tmpl, instance);
  return substitute(tmpl.input_pattern, [&](std::string_view name) {
    auto value = content_field(instance, name);
    if (value && value->empty() && warnings) {
      warnings->push_back("instance '" + instance.id + "': empty field {" + std::string(name) + "}");
    }
    return value;
  });
}

std::string render_target(const PromptTemplate& tmpl, const Instance& instance, Label label,
                          std::string_view rationale) {
  require_task(tmpl, instance);
  if (!is_valid_label(instance.task(), label)) {
    throw PreconditionError("invalid label index " + std::to_string(label.index) + " for task " +
                            std::string(task_key(instance.task())));
  }
  const std::string answer = answer_text(instance, label);
  return substitute(tmpl.target_pattern, [&](std::string_view name) -> std::optional<std::string> {
    if (name == "answer") return answer;
    if (name == "rationale") return std::string(rationale);
    return std::nullopt;
  });
}

std::string render_target(const PromptTemplate& tmpl, const Instance& instance,
                          std::string_view label, std::string_view rationale) {
  auto parsed = parse_label(instance.task(), label);
  if (!parsed) {
    throw PreconditionError("invalid label '" + std::string(label) + "' for task " +
                            std::string(task_key(instance.task())));
  }
  return render_target(tmpl, instance, *parsed, rationale);
}

Prediction parse_prediction(const PromptTemplate& tmpl, std::string_view generated,
                            const Instance& instance) {
  Prediction prediction;
  prediction.instance_id = instance.id;
  prediction.raw_text = std::string(generated);
  if (tmpl.separator.empty() || tmpl.task != instance.task()) return prediction;

  TargetShape shape;
  try {
    shape = target_shape(tmpl);
  } catch (const Error&) {
    return prediction;
  }

  std::string_view body = generated;
  if (!shape.prefix.empty() && body.starts_with(shape.prefix)) body.remove_prefix(shape.prefix.size());
  const auto pos = body.find(tmpl.separator);
  if (pos == std::string_view::npos) return prediction;

  std::string_view rationale = body.substr(pos + tmpl.separator.size());
  if (!shape.suffix.empty() && rationale.ends_with(shape.suffix)) {
    rationale.remove_suffix(shape.suffix.size());
  }
  auto answer = match_answer(instance, body.substr(0, pos));
  if (!answer) return prediction;

  prediction.answer = answer;
  prediction.rationale = std::string(rationale);
  prediction.parse_ok = true;
  return prediction;
}

}  // namespace zara::promptgen
