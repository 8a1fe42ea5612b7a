#include <gtest/gtest.h>

#include <random>

#include "d2d/dialog.hpp"
#include "d2d/errors.hpp"
#include "oracles.hpp"

using namespace d2d;

namespace {

PromptContext classic(int n) {
  PromptContext c;
  c.kind = ScenarioKind::classic;
  c.option_count = n;
  return c;
}

PromptContext tolling(std::vector<double> tolls) {
  PromptContext c;
  c.kind = ScenarioKind::tolling;
  c.option_count = static_cast<int>(tolls.size());
  c.tolls = std::move(tolls);
  return c;
}

FeedbackBundle times(ScenarioKind kind, std::vector<double> t, std::vector<double> money = {}) {
  FeedbackBundle b;
  b.kind = kind;
  for (std::size_t k = 0; k < t.size(); ++k) {
    OptionExperience o;
    o.time = t[k];
    o.money = money.empty() ? 0.0 : money[k];
    b.options.push_back(o);
  }
  return b;
}

const std::string kStrategyText =
    "Your goal is to explore all available commuting options and eventually settle on one or more "
    "preferred choices. To do so, you will maintain a mixed strategy over these options and update "
    "it progressively according to your daily travel experience.";

}  // namespace

TEST(SystemPrompt, ClassicGuidedIsVerbatim) {
  const std::string expected =
      "You are a daily commuter in a transportation network. Each day, you may choose from 4 "
      "available routes (indexed by 1, ..., 4) as your commuting option. The travel time on each "
      "route increases as more commuters use it. However, you do not know how others explore the "
      "different routes.\n\n" +
      kStrategyText +
      "\n\n"
      "Each day, you will complete two tasks based on your current strategy and recent travel "
      "experiences:\n"
      "- Task 1: \"Select the commuting options you would like to use more often.\"\n"
      "- Task 2: \"Indicate how you will update your mixed strategy to reinforce the use of these "
      "options.\"\n"
      "For Task 1, your answer must follow these requirements:\n"
      "- Think step by step, starting by reflecting on your current strategy and the recent travel "
      "experiences.\n"
      "- Provide a thorough but concise analysis, and present the final result only after that.\n"
      "- You must not increase the probability of all options simultaneously.\n"
      "- If you decide not to reinforce any options, output: <result> Options selected for "
      "increase: None. </result>; otherwise, output: <result> Options selected for increase: [xx, "
      "xx, ...]. </result>.\n"
      "For Task 2, your response must follow these requirements:\n"
      "- Output in the format: <result> Updated strategy: [xx, xx, ...]. </result>.";
  EXPECT_EQ(render_system_prompt(classic(4), MechanismKind::guided_rl), expected);
}

TEST(SystemPrompt, BaselineAndRlRequirementBlocks) {
  const auto base = render_prompt_bundle(classic(3), MechanismKind::llm_baseline);
  EXPECT_EQ(base.requirement_block,
            "Each day, you will be asked to revise your strategy by reflecting on your current "
            "strategy and your travel experiences in recent days. Your answer must follow the "
            "following requirements:\n"
            "- Think step by step, starting by reflecting your current strategy and the recent "
            "travel experiences.\n"
            "- Provide a thorough but concise analysis, and present the final result only after "
            "that.\n"
            "- Output: <result> Updated strategy: [xx, xx, ...]. </result>.");
  const auto rl = render_prompt_bundle(classic(3), MechanismKind::llm_rl);
  EXPECT_NE(rl.requirement_block.find(
                "- If you decide not to reinforce any options, output: <result> None. </result>.\n"
                "- Otherwise, output: <result> Options selected for increase: [xx, xx, ...]. "
                "</result>.\n"),
            std::string::npos);
  EXPECT_NE(rl.requirement_block.find("For Task 2, your answer must follow these requirements:\n"
                                      "- Think step by step.\n"),
            std::string::npos);
  EXPECT_EQ(rl.strategy_block, kStrategyText);
  EXPECT_THROW(render_prompt_bundle(classic(3), MechanismKind::best_response), DomainError);
}

TEST(SystemPrompt, TollingScenarioAndExtraItem) {
  const auto b = render_prompt_bundle(tolling({0, 30, 34}), MechanismKind::guided_rl);
  EXPECT_EQ(b.scenario_block,
            "You are a daily commuter in a transportation network. You have a monthly salary of "
            "25,000 HKD (the average income level in your area is about 20,000 HKD). You rent an "
            "apartment with a monthly rent of 9,000 HKD, and your monthly spending on food is "
            "approximately 5,000 HKD. Each morning, you may choose from these 3 available routes "
            "(indexed by 1, ..., 3) as your commuting option:\n"
            "- Route 1 is toll-free.\n"
            "- Route 2 is a tolled route costing 30 HKD per trip.\n"
            "- Route 3 is also tolled at 34 HKD per trip.\n"
            "The travel time on each route increases as more commuters use it. However, you do "
            "not know how others explore the different routes.");
  const std::string bounded =
      "- You should behave like a human being with bounded rationality: make decisions through a "
      "combination of subjective perception, psychological intuition, and a moderate degree of "
      "rational analysis, rather than purely logical computation or strict comparisons.";
  EXPECT_NE(b.requirement_block.find(bounded + "\nFor Task 2"), std::string::npos);
  EXPECT_EQ(render_prompt_bundle(classic(3), MechanismKind::guided_rl)
                .requirement_block.find("bounded rationality"),
            std::string::npos);
}

TEST(SystemPrompt, MultimodalProfiles) {
  PromptContext c;
  c.kind = ScenarioKind::multimodal;
  c.option_count = 3;
  c.income = IncomeClass::low;
  const auto b = render_prompt_bundle(c, MechanismKind::guided_rl);
  EXPECT_EQ(b.scenario_block.rfind("You are a daily commuter living in a suburban area near "
                                   "Chicago, and you need to travel to Downtown Chicago for work.\n"
                                   "You own a private car valued at $10,000 and rent an apartment",
                                   0),
            0u);
  EXPECT_NE(b.scenario_block.find("(about $7,500).\nEach working day, you can commute between home "
                                  "and work using one of the following three options.\n- Option 1"),
            std::string::npos);
  EXPECT_NE(b.scenario_block.find("work ($4 per trip)."), std::string::npos);
  EXPECT_NE(b.requirement_block.find("and any inconvenience involved in transfers."),
            std::string::npos);
  c.income = IncomeClass::middle;
  EXPECT_NE(render_system_prompt(c, MechanismKind::llm_rl).find("a conda valued at $100,000"),
            std::string::npos);
  c.option_count = 2;
  EXPECT_THROW(render_system_prompt(c, MechanismKind::llm_rl), DomainError);
}

TEST(TurnPrompts, Verbatim) {
  EXPECT_EQ(render_initial_prompt(MixedStrategy::uniform(2)),
            "Suppose that your initial mixed strategy is [0.500000, 0.500000].");
  EXPECT_EQ(render_initial_prompt(std::nullopt),
            "Based on your prior information about all commuting options, please think first, "
            "then provide the initial mixed strategy for exploration.");
  EXPECT_EQ(render_positive_prompt(),
            "Please reflect on your current strategy and your travel experiences in recent days, "
            "and then select a subset of the commuting options for which you would like to "
            "increase the selection probability for the next day.");
  EXPECT_EQ(render_revise_prompt(),
            "Please indicate how you will update your strategy to reinforce the use of these "
            "options.");
  EXPECT_EQ(render_baseline_prompt(),
            "Please revise your strategy by reflecting on your current strategy and your travel "
            "experiences in recent days.");
  EXPECT_EQ(render_update_confirmation(MixedStrategy({0.75, 0.25})),
            "I would like to update my mixed strategy to [0.750000, 0.250000] for tomorrow's use.");
}

TEST(Feedback, ClassicList) {
  EXPECT_EQ(render_feedback_prompt(classic(3), times(ScenarioKind::classic, {12.34, 9.0, 10.06})),
            "Today, the travel times of the 3 routes are realized as follows: [12.3, 9.0, 10.1].");
  auto c = classic(2);
  c.time_decimals = 3;
  EXPECT_EQ(render_feedback_prompt(c, times(ScenarioKind::classic, {1.23456, 2})),
            "Today, the travel times of the 2 routes are realized as follows: [1.235, 2.000].");
  EXPECT_THROW(render_feedback_prompt(classic(3), times(ScenarioKind::classic, {1, 2})),
               DomainError);
}

TEST(Feedback, TollingSentences) {
  EXPECT_EQ(render_feedback_prompt(tolling({0, 30}),
                                   times(ScenarioKind::tolling, {50.04, 41.24}, {0, 30})),
            "Today, Route 1 has a travel time of 50.0 minutes and is toll-free and Route 2 takes "
            "41.2 minutes with a toll fee of 30 HKD.");
  EXPECT_EQ(render_feedback_prompt(tolling({0, 30, 34}),
                                   times(ScenarioKind::tolling, {50, 41, 37}, {0, 30, 34})),
            "Today, Route 1 has a travel time of 50.0 minutes and is toll-free, Route 2 takes 41.0 "
            "minutes with a toll fee of 30 HKD, and Route 3 takes 37.0 minutes with a toll fee of "
            "34 HKD.");
}

TEST(Parse, ReinforcedSet) {
  EXPECT_EQ(parse_reinforced_set("blah <result> Options selected for increase: [1, 3]. </result>", 3),
            (OptionSet{0, 2}));
  EXPECT_EQ(parse_reinforced_set("<result> Options selected for increase: None. </result>", 3),
            OptionSet{});
  EXPECT_EQ(parse_reinforced_set("<result> None. </result>", 3), OptionSet{});
  EXPECT_EQ(parse_reinforced_set("<result>[Route 2]</result>", 3), OptionSet{1});
  // The last segment wins.
  EXPECT_EQ(parse_reinforced_set("<result>[1]</result> then <result>[2]</result>", 3), OptionSet{1});
  EXPECT_THROW(parse_reinforced_set("Options selected for increase: [1]", 3), ParseRejection);
  EXPECT_THROW(parse_reinforced_set("<result>[4]</result>", 3), ParseRejection);
  EXPECT_THROW(parse_reinforced_set("<result>[1.5]</result>", 3), ParseRejection);
  EXPECT_THROW(parse_reinforced_set("<result>[Nonetheless]</result>", 3), ParseRejection);
  EXPECT_THROW(parse_reinforced_set("<result>nonexistent</result>", 3), ParseRejection);
  // Full set is rejected unless allowed.
  EXPECT_THROW(parse_reinforced_set("<result>[1, 2]</result>", 2), ParseRejection);
  EXPECT_EQ(parse_reinforced_set("<result>[1, 2]</result>", 2, false), (OptionSet{0, 1}));
}

TEST(Parse, Strategy) {
  const auto p = parse_strategy("<result> Updated strategy: [0.6, 0.4]. </result>", 2);
  EXPECT_EQ(p.probs(), (std::vector<double>{0.6, 0.4}));
  const auto q = parse_strategy("<result> Updated strategy: [60%, 40%]. </result>", 2);
  EXPECT_NEAR(q[0], 0.6, 1e-15);
  const auto r = parse_strategy("<result>[0.5, 0.49]</result>", 2);
  EXPECT_NEAR(r[0] + r[1], 1.0, 1e-15);
  // Projection shifts every entry by the same amount.
  EXPECT_NEAR(r[0], 0.505, 1e-15);
  const auto z = parse_strategy("<result>[0.005, 0.5, 0.515]</result>", 3);
  EXPECT_EQ(z[0], 0.0);
  EXPECT_NEAR(z[1], 0.4925, 1e-15);
  EXPECT_THROW(parse_strategy("<result>[0.5, 0.4]</result>", 2), ParseRejection);
  EXPECT_THROW(parse_strategy("<result>[1.2, -0.2]</result>", 2), ParseRejection);
  EXPECT_THROW(parse_strategy("<result>[0.5, 0.25, 0.25]</result>", 2), ParseRejection);
  EXPECT_THROW(parse_strategy("[0.5, 0.5]", 2), ParseRejection);
  EXPECT_THROW(parse_strategy("<result>[a, b]</result>", 2), ParseRejection);
}

TEST(Parse, InitialStrategyFallsBackToLastBracket) {
  EXPECT_EQ(parse_initial_strategy("I'd start with [0.4, 0.3, 0.3].", 3).probs(),
            (std::vector<double>{0.4, 0.3, 0.3}));
  EXPECT_EQ(parse_initial_strategy("[0.1, 0.9] no, <result> Initial strategy: [0.2, 0.8]. </result>", 2)
                .probs(),
            (std::vector<double>{0.2, 0.8}));
  EXPECT_THROW(parse_initial_strategy("no numbers", 2), ParseRejection);
}

TEST(Parse, ConfirmationRoundTripWithin1e6) {
  std::mt19937_64 rng(17);
  std::exponential_distribution<double> ex(1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng() % 8;
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& v : p) s += (v = ex(rng));
    for (auto& v : p) v /= s;
    const MixedStrategy ps(p);
    const auto back = parse_strategy(
        "<result> Updated strategy: " + format_strategy(ps) + ". </result>", static_cast<int>(n));
    worst = std::max(worst, oracle::max_abs_diff(back.probs(), p));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Parse, ResultSegmentEdgeCases) {
  EXPECT_EQ(last_result_segment("a <result>x</result> b <result>y</result>"), "y");
  EXPECT_EQ(last_result_segment("<result>unclosed <result>z</result>"), "z");
  EXPECT_FALSE(last_result_segment("<result>never closed").has_value());
}

TEST(Corrective, NamesDiagnosticAndFormat) {
  const auto s = render_corrective_prompt(ReplyFormat::strategy, "probabilities sum to 0.5", 3);
  EXPECT_NE(s.find("probabilities sum to 0.5"), std::string::npos);
  EXPECT_NE(s.find("<result> Updated strategy: [xx, xx, ...]. </result> with 3"), std::string::npos);
}

TEST(Roles, ParseAndPrint) {
  EXPECT_EQ(parse_role("assistant"), Role::agent);
  EXPECT_EQ(to_string(Role::agent), "agent");
  EXPECT_THROW(parse_role("bot"), ParseError);
  EXPECT_EQ(parse_mechanism_kind("llm_rl"), MechanismKind::llm_rl);
}
