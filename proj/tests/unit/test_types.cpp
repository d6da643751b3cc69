#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "zara/types.hpp"

using namespace zara;
using namespace zara::testing;

TEST(Types, ClassCountsMatchRandomBaselines) {
  EXPECT_EQ(class_count(Task::ComVE), 2u);
  EXPECT_EQ(class_count(Task::SBIC), 2u);
  EXPECT_EQ(class_count(Task::ESNLI), 3u);
  EXPECT_EQ(class_count(Task::ECQA), 5u);
  // Random rows of the results table: 50.0 / 50.0 / 33.3 / 20.0.
  EXPECT_NEAR(100.0 / class_count(Task::ESNLI), 33.3, 0.05);
  EXPECT_NEAR(100.0 / class_count(Task::ECQA), 20.0, 1e-12);
}

TEST(Types, TaskKeysRoundTrip) {
  for (Task t : kAllTasks) {
    EXPECT_EQ(parse_task(task_key(t)), t);
    EXPECT_EQ(parse_task(task_display_name(t)), t);
    EXPECT_EQ(task_from_key(task_key(t)), t);
  }
  EXPECT_EQ(parse_task("E-SNLI"), Task::ESNLI);
  EXPECT_FALSE(parse_task("mnli"));
  EXPECT_THROW(task_from_key("mnli"), PreconditionError);
}

TEST(Types, CanonicalLabelStrings) {
  EXPECT_EQ(label_name(Task::ComVE, Label{0}), "choice1");
  EXPECT_EQ(label_name(Task::ComVE, Label{1}), "choice2");
  EXPECT_EQ(label_name(Task::SBIC, Label{0}), "offensive");
  EXPECT_EQ(label_name(Task::SBIC, Label{1}), "not offensive");
  EXPECT_EQ(label_name(Task::ESNLI, Label{0}), "entailment");
  EXPECT_EQ(label_name(Task::ESNLI, Label{1}), "neutral");
  EXPECT_EQ(label_name(Task::ESNLI, Label{2}), "contradiction");
  EXPECT_EQ(label_name(Task::ECQA, Label{3}), "3");
  EXPECT_EQ(label_key(Task::ECQA, Label{3}), "(d)");
}

TEST(Types, LabelsRoundTripForEveryTask) {
  for (Task t : kAllTasks) {
    for (int i = 0; i < static_cast<int>(class_count(t)); ++i) {
      EXPECT_EQ(parse_label(t, label_name(t, Label{i})), Label{i});
      EXPECT_TRUE(is_valid_label(t, Label{i}));
    }
    EXPECT_FALSE(is_valid_label(t, Label{static_cast<int>(class_count(t))}));
    EXPECT_FALSE(is_valid_label(t, Label{-1}));
  }
  EXPECT_EQ(parse_label(Task::ECQA, "(b)"), Label{1});
  EXPECT_FALSE(parse_label(Task::ECQA, "5"));
  EXPECT_FALSE(parse_label(Task::SBIC, "hateful"));
}

TEST(Types, AnswerTextUsesChoiceWordingForEcqa) {
  const auto inst = sample_instance(Task::ECQA, "q1");
  EXPECT_EQ(answer_text(inst, Label{0}), "state park");
  EXPECT_EQ(answer_text(inst, Label{4}), "train station");
  const auto sb = sample_instance(Task::SBIC, "s1");
  EXPECT_EQ(answer_text(sb, Label{1}), "not offensive");
}

TEST(Types, WithoutGoldStripsOnlyGoldFields) {
  const auto inst = sample_instance(Task::ESNLI, "e1");
  const auto masked = without_gold(inst);
  EXPECT_EQ(masked.id, inst.id);
  EXPECT_EQ(masked.content, inst.content);
  EXPECT_FALSE(masked.gold_label);
  EXPECT_FALSE(masked.gold_rationale);
}

TEST(Types, ValidateInstanceRejectsBrokenContent) {
  EXPECT_NO_THROW(validate_instance(sample_instance(Task::ComVE, "c")));
  auto bad_label = sample_instance(Task::ComVE, "c");
  bad_label.gold_label = Label{2};
  EXPECT_THROW(validate_instance(bad_label), DataError);
  auto empty_choice = sample_instance(Task::ECQA, "q");
  std::get<ECQAContent>(empty_choice.content).choices[2] = "";
  EXPECT_THROW(validate_instance(empty_choice), DataError);
  auto no_id = sample_instance(Task::SBIC, "");
  EXPECT_THROW(validate_instance(no_id), DataError);
}
