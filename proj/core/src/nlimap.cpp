#include "zara/nlimap.hpp"

#include "zara/error.hpp"
#include "zara/text.hpp"

namespace zara::nlimap {

std::string_view nli_class_name(NliClass c) {
  switch (c) {
    case NliClass::Entailment: return "entailment";
    case NliClass::Neutral: return "neutral";
    case NliClass::Contradiction: return "contradiction";
  }
  return "unknown";
}

std::optional<NliClass> parse_nli_class(std::string_view text) {
  const std::string lowered = text::to_lower_ascii(text::trim(text));
  for (NliClass c : kNliClasses) {
    if (lowered == nli_class_name(c)) return c;
  }
  return std::nullopt;
}

NliClass target_class_of(Task task, const Prediction& prediction) {
  if (!prediction.parse_ok || !prediction.answer) {
    throw MappingError("prediction for '" + prediction.instance_id + "' is unparsed");
  }
  switch (task) {
    case Task::ComVE: return NliClass::Contradiction;
    case Task::SBIC: return NliClass::Entailment;
    case Task::ECQA: return NliClass::Entailment;
    case Task::ESNLI:
      // E-SNLI labels share the NLI class order.
      if (!is_valid_label(task, *prediction.answer)) {
        throw MappingError("prediction for '" + prediction.instance_id + "' has an invalid label");
      }
      return static_cast<NliClass>(prediction.answer->index);
  }
  throw MappingError("unsupported task");
}

NliQuery map_to_nli(const Instance& instance, const Prediction& prediction) {
  if (!prediction.parse_ok || !prediction.answer || !prediction.rationale) {
    throw MappingError("prediction for '" + instance.id + "' is unparsed");
  }
  if (prediction.instance_id != instance.id) {
    throw MappingError("prediction id '" + prediction.instance_id + "' does not match instance '" +
                       instance.id + "'");
  }
  const std::string& rationale = *prediction.rationale;
  if (rationale.empty()) throw MappingError("prediction for '" + instance.id + "' has an empty rationale");
  const Label answer = *prediction.answer;
  if (!is_valid_label(instance.task(), answer)) {
    throw MappingError("prediction for '" + instance.id + "' has an invalid label");
  }

  NliQuery query;
  query.instance_id = instance.id;
  query.target_class = target_class_of(instance.task(), prediction);
  std::visit(
      [&](const auto& content) {
        using T = std::decay_t<decltype(content)>;
        if constexpr (std::is_same_v<T, ComVEContent>) {
          query.premise = rationale;
          query.hypothesis = answer.index == 0 ? content.choice1 : content.choice2;
        } else if constexpr (std::is_same_v<T, SBICContent>) {
          query.premise = "The post: " + content.post;
          query.hypothesis =
              "The post is " + label_name(Task::SBIC, answer) + " because " + rationale;
        } else if constexpr (std::is_same_v<T, ESNLIContent>) {
          query.premise = content.premise + " " + rationale;
          query.hypothesis = content.hypothesis;
        } else {
          query.premise = "Because " + rationale;
          query.hypothesis = "The answer of the question \"" + content.question + "\" is " +
                             content.choices[static_cast<std::size_t>(answer.index)] + ".";
        }
      },
      instance.content);

  if (query.premise.empty() || query.hypothesis.empty()) {
    throw MappingError("mapping for '" + instance.id + "' produced an empty premise or hypothesis");
  }
  return query;
}

nlohmann::json describe_mappings() {
  using nlohmann::json;
  return json{
      {"comve",
       {{"premise", "[rationale]"},
        {"hypothesis", "[sentence selected by answer]"},
        {"target_class", "contradiction"}}},
      {"sbic",
       {{"premise", "The post: [post]"},
        {"hypothesis", "The post is [answer] because [rationale]"},
        {"target_class", "entailment"}}},
      {"esnli",
       {{"premise", "[premise] [rationale]"},
        {"hypothesis", "[hypothesis]"},
        {"target_class", "[answer]"}}},
      {"ecqa",
       {{"premise", "Because [rationale]"},
        {"hypothesis", "The answer of the question \"[question]\" is [answer choice]."},
        {"target_class", "entailment"}}},
  };
}

}  // namespace zara::nlimap
