#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "d2d/feedback.hpp"
#include "d2d/strategy.hpp"

namespace d2d {

enum class Role { system, user, agent };
std::string_view to_string(Role role);
Role parse_role(std::string_view name);

struct Message {
  Role role = Role::user;
  std::string content;

  bool operator==(const Message&) const = default;
};

using DialogHistory = std::vector<Message>;

enum class MechanismKind { llm_baseline, llm_rl, guided_rl, best_response };
std::string_view to_string(MechanismKind kind);
MechanismKind parse_mechanism_kind(std::string_view name);

enum class IncomeClass { high, middle, low };

// What the system prompt needs to know about the scenario and the class.
struct PromptContext {
  ScenarioKind kind = ScenarioKind::classic;
  int option_count = 0;
  std::vector<double> tolls;  // tolling: per route
  IncomeClass income = IncomeClass::middle;  // multimodal
  int time_decimals = 1;      // feedback rounding
};

struct PromptBundle {
  std::string scenario_block;
  std::string strategy_block;
  std::string requirement_block;

  std::string joined() const;
};

PromptBundle render_prompt_bundle(const PromptContext& ctx, MechanismKind mechanism);
std::string render_system_prompt(const PromptContext& ctx, MechanismKind mechanism);

std::string render_initial_prompt(const std::optional<MixedStrategy>& external);
std::string render_feedback_prompt(const PromptContext& ctx, const FeedbackBundle& bundle);
std::string render_positive_prompt();
std::string render_revise_prompt();
std::string render_baseline_prompt();
std::string render_update_confirmation(const MixedStrategy& p);

enum class ReplyFormat { reinforced_set, strategy, initial_strategy };
// Short user message restating the required output after a rejected reply.
std::string render_corrective_prompt(ReplyFormat format, const std::string& diagnostic,
                                     int option_count);

// Content of the last <result>...</result> segment, if any.
std::optional<std::string> last_result_segment(std::string_view text);

// 0-based indices. Throws ParseRejection on a missing segment, an index out
// of range, or (when forbid_full_set) a set naming every option.
OptionSet parse_reinforced_set(std::string_view text, int option_count,
                               bool forbid_full_set = true);

// Sums within [0.98, 1.02] are projected onto the simplex (a common shift,
// clipped at zero); anything else is rejected.
MixedStrategy parse_strategy(std::string_view text, int option_count);

// As parse_strategy, but falls back to the last bracketed vector in the
// whole reply when no result segment is present.
MixedStrategy parse_initial_strategy(std::string_view text, int option_count);

// Segment names used by the multimodal feedback renderer and scenarios.
namespace segment {
inline constexpr std::string_view local_roads = "local roads";
inline constexpr std::string_view highway = "highway";
inline constexpr std::string_view access_drive = "drive to station";
}  // namespace segment

}  // namespace d2d
