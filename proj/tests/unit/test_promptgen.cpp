#include <gtest/gtest.h>

#include <random>

#include "support/fixtures.hpp"
#include "zara/promptgen.hpp"

using namespace zara;
using namespace zara::promptgen;
using namespace zara::testing;

TEST(Prompt, SbicPromptContainsPostVerbatim) {
  const auto inst = sample_instance(Task::SBIC, "s");
  const auto prompt = render_prompt(default_template(Task::SBIC), inst);
  EXPECT_NE(prompt.find("just when i thought women couldn't get any stupider."), std::string::npos);
}

TEST(Prompt, EcqaChoicesRenderWithLetters) {
  const auto prompt = render_prompt(default_template(Task::ECQA), sample_instance(Task::ECQA, "q"));
  EXPECT_NE(prompt.find("(a) state park (b) bus stop (c) bus depot (d) statue (e) train station"),
            std::string::npos);
}

TEST(Prompt, BraceEscapesAreLiteral) {
  PromptTemplate t = default_template(Task::SBIC);
  t.input_pattern = "{{post}} = {post}";
  const auto inst = sbic("s", "hello {post}");
  // Substitution is single pass: braces inside the value are not expanded.
  EXPECT_EQ(render_prompt(t, inst), "{post} = hello {post}");
}

TEST(Prompt, EmptyFieldsWarn) {
  std::vector<std::string> warnings;
  const auto prompt = render_prompt(default_template(Task::SBIC), sbic("s", ""), &warnings);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_EQ(prompt, "explain whether the post is offensive. post: ");
}

TEST(Prompt, UnknownPlaceholderOrUnterminatedPatternRejected) {
  PromptTemplate t = default_template(Task::ComVE);
  t.input_pattern = "choice: {choice3}";
  EXPECT_THROW(render_prompt(t, sample_instance(Task::ComVE, "c")), PreconditionError);
  t.input_pattern = "choice: {choice1";
  EXPECT_THROW(validate_template(t), PreconditionError);
}

TEST(Prompt, TargetPatternValidation) {
  PromptTemplate t = default_template(Task::ComVE);
  EXPECT_NO_THROW(validate_template(t));
  t.target_pattern = "{answer} {answer} because {rationale}";
  EXPECT_THROW(validate_template(t), PreconditionError);
  t.target_pattern = "{answer}: {rationale}";
  EXPECT_THROW(validate_template(t), PreconditionError);
  t.separator = "";
  EXPECT_THROW(validate_template(t), PreconditionError);
}

TEST(Prompt, TemplateFileRoundTrip) {
  TempDir dir;
  PromptTemplate t = default_template(Task::ESNLI);
  t.input_pattern = "p: {premise} | h: {hypothesis}";
  t.target_pattern = "answer: {answer} so {rationale}.";
  t.separator = " so ";
  save_template(t, dir / "t.json");
  EXPECT_EQ(load_template(dir / "t.json", Task::ESNLI), t);
}

TEST(Target, EcqaAnswerIsChoiceText) {
  const auto inst = sample_instance(Task::ECQA, "q");
  EXPECT_EQ(render_target(default_template(Task::ECQA), inst, Label{0}, "it is green."),
            "state park because it is green.");
  EXPECT_EQ(render_target(default_template(Task::ECQA), inst, std::string_view("(b)"), "r"),
            "bus stop because r");
  EXPECT_THROW(render_target(default_template(Task::ECQA), inst, std::string_view("(f)"), "r"),
               PreconditionError);
}

TEST(Parse, EcqaGenerationWithLongRationale) {
  const auto inst = sample_instance(Task::ECQA, "q");
  const auto p = parse_prediction(default_template(Task::ECQA),
                                  "state park because state park is a protected public garden. public "
                                  "gardens generally have benches for people to sit and relax.",
                                  inst);
  ASSERT_TRUE(p.parse_ok);
  EXPECT_EQ(p.answer, Label{0});
  EXPECT_EQ(p.rationale->rfind("state park is a protected", 0), 0u);
}

TEST(Parse, AnswerMatchingIsCaseAndSpaceInsensitive) {
  const auto inst = sample_instance(Task::SBIC, "s");
  const auto p = parse_prediction(default_template(Task::SBIC), "  Not Offensive  because it is a joke", inst);
  ASSERT_TRUE(p.parse_ok);
  EXPECT_EQ(p.answer, Label{1});
  EXPECT_EQ(*p.rationale, "it is a joke");
}

TEST(Parse, SplitsAtFirstSeparator) {
  const auto inst = sample_instance(Task::ComVE, "c");
  const auto p = parse_prediction(default_template(Task::ComVE), "choice2 because a because b", inst);
  ASSERT_TRUE(p.parse_ok);
  EXPECT_EQ(*p.rationale, "a because b");
}

TEST(Parse, FailuresAreReportedNotThrown) {
  const auto inst = sample_instance(Task::ESNLI, "e");
  const auto tmpl = default_template(Task::ESNLI);
  for (const char* text : {"", "entailment", "because", "maybe because it is", "entailment and nothing else"}) {
    const auto p = parse_prediction(tmpl, text, inst);
    EXPECT_FALSE(p.parse_ok) << text;
    EXPECT_FALSE(p.answer) << text;
    EXPECT_FALSE(p.rationale) << text;
    EXPECT_EQ(p.raw_text, text);
  }
  // A template for another task never parses.
  EXPECT_FALSE(parse_prediction(default_template(Task::SBIC), "entailment because x", inst).parse_ok);
}

TEST(Parse, InvertsRenderTargetForEveryTaskAndLabel) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> words = {"the", "cat", "sat", "because", "on", "mat", "not", "it's", "a"};
  for (Task task : kAllTasks) {
    const auto tmpl = default_template(task);
    const auto inst = sample_instance(task, "i");
    for (int trial = 0; trial < 200; ++trial) {
      std::string rationale;
      const std::size_t n = 1 + rng() % 8;
      for (std::size_t w = 0; w < n; ++w) rationale += (w ? " " : "") + words[rng() % words.size()];
      const Label label{static_cast<int>(rng() % class_count(task))};
      const auto p = parse_prediction(tmpl, render_target(tmpl, inst, label, rationale), inst);
      ASSERT_TRUE(p.parse_ok) << rationale;
      EXPECT_EQ(p.answer, label);
      EXPECT_EQ(p.rationale, rationale);
    }
  }
}

TEST(Parse, InvertsCustomPrefixSuffixTemplate) {
  PromptTemplate t = default_template(Task::ComVE);
  t.target_pattern = "answer: {answer}; reason: {rationale} [end]";
  t.separator = "; reason: ";
  const auto inst = sample_instance(Task::ComVE, "c");
  const auto p = parse_prediction(t, render_target(t, inst, Label{1}, "x y"), inst);
  ASSERT_TRUE(p.parse_ok);
  EXPECT_EQ(p.answer, Label{1});
  EXPECT_EQ(*p.rationale, "x y");
}

TEST(Parse, IsTotalOnRandomStrings) {
  std::mt19937_64 rng(2024);
  const std::string alphabet = "abc ABC()because\"\\{}\n\t\xC3\xA9\x01\x7F" "0123456789choice";
  for (Task task : kAllTasks) {
    const auto tmpl = default_template(task);
    const auto inst = sample_instance(task, "i");
    for (int i = 0; i < 2500; ++i) {
      std::string text;
      const std::size_t n = rng() % 64;
      for (std::size_t k = 0; k < n; ++k) text += alphabet[rng() % alphabet.size()];
      Prediction p;
      ASSERT_NO_THROW(p = parse_prediction(tmpl, text, inst));
      EXPECT_EQ(p.parse_ok, p.answer.has_value());
      EXPECT_EQ(p.parse_ok, p.rationale.has_value());
      if (p.answer) {
        EXPECT_TRUE(is_valid_label(task, *p.answer));
      }
    }
  }
}
