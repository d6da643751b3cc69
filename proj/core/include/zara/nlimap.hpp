#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "zara/types.hpp"

namespace zara::nlimap {

// Index order is fixed for every distribution in the pipeline.
enum class NliClass { Entailment = 0, Neutral = 1, Contradiction = 2 };

inline constexpr std::array<NliClass, 3> kNliClasses = {NliClass::Entailment, NliClass::Neutral,
                                                        NliClass::Contradiction};

std::string_view nli_class_name(NliClass c);
std::optional<NliClass> parse_nli_class(std::string_view text);

struct NliQuery {
  std::string premise;
  std::string hypothesis;
  NliClass target_class = NliClass::Entailment;
  std::string instance_id;

  friend bool operator==(const NliQuery&, const NliQuery&) = default;
};

/// The class whose probability stands in for plausibility: contradiction for
/// ComVE, entailment for SBIC and ECQA, and the predicted answer's class for
/// E-SNLI. Throws MappingError for unparsed predictions.
NliClass target_class_of(Task task, const Prediction& prediction);

/// Builds the premise/hypothesis pair for a parsed prediction. Strings are
/// concatenated verbatim (no recasing). Throws MappingError when the
/// prediction is unparsed, its rationale is empty, or a side comes out empty.
///
///   ComVE   premise    = <rationale>
///           hypothesis = <sentence picked by the answer>
///   SBIC    premise    = "The post: " <post>
///           hypothesis = "The post is " <answer> " because " <rationale>
///   E-SNLI  premise    = <premise> " " <rationale>
///           hypothesis = <hypothesis>
///   ECQA    premise    = "Because " <rationale>
///           hypothesis = "The answer of the question \"" <question> "\" is " <choice> "."
NliQuery map_to_nli(const Instance& instance, const Prediction& prediction);

/// Structured description of the four mappings, for documentation dumps.
nlohmann::json describe_mappings();

}  // namespace zara::nlimap
