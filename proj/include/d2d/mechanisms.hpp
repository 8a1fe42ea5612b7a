#pragma once

#include <optional>
#include <string>
#include <vector>

#include "d2d/dialog.hpp"
#include "d2d/kernel.hpp"
#include "d2d/scenarios.hpp"
#include "d2d/strategy.hpp"

namespace d2d {

enum class InitMode { external_uniform, self_chosen };
std::string_view to_string(InitMode mode);
InitMode parse_init_mode(std::string_view name);

struct MechanismConfig {
  MechanismKind kind = MechanismKind::guided_rl;
  std::optional<UpdateRule> rule = UpdateRule::rule1;  // guided_rl only
  StepSchedule schedule;
  InitMode init = InitMode::external_uniform;
  int max_reasks = 3;

  void validate() const;
};

struct AgentState {
  int class_id = 0;
  MixedStrategy strategy;
  DialogHistory history;
  int day = 0;
};

struct StepReport {
  std::optional<OptionSet> k_plus;  // unknown when the mechanism never asks
  int messages_appended = 0;
  std::vector<std::string> events;
};

AgentState initialize_agent(const MechanismConfig& config, const PromptContext& prompt,
                            int class_id, Kernel* kernel, const CallContext& ctx,
                            std::vector<std::string>* events = nullptr);

StepReport step_llm_baseline(AgentState& state, const std::string& feedback, Kernel& kernel,
                             const CallContext& ctx, int max_reasks = 3);
StepReport step_llm_rl(AgentState& state, const std::string& feedback, Kernel& kernel,
                       const CallContext& ctx, int max_reasks = 3);
StepReport step_guided_rl(AgentState& state, const std::string& feedback, UpdateRule rule,
                          double eta, Kernel& kernel, const CallContext& ctx, int max_reasks = 3);
StepReport step_best_response(AgentState& state, const std::vector<double>& costs, double eta);

// ---- run record ----

struct ClassDay {
  MixedStrategy strategy;  // p^t, the strategy used on this day
  std::vector<double> flows;
  std::vector<double> cost_time;
  std::vector<double> cost_money;
  std::optional<OptionSet> k_plus;
  double eta = 0.0;
  int history_growth = 0;
  std::vector<std::string> events;

  bool operator==(const ClassDay&) const = default;
};

struct DayRecord {
  int day = 0;
  std::optional<double> gap;  // classic scenarios only, at pre-update flows
  std::vector<ClassDay> classes;

  bool operator==(const DayRecord&) const = default;
};

enum class RunStatus { completed, failed };
std::string_view to_string(RunStatus status);
RunStatus parse_run_status(std::string_view name);

struct RunRecord {
  std::string run_id;
  std::string config_json;  // canonical JSON snapshot of the run configuration
  std::vector<std::vector<std::string>> init_events;  // per class
  std::vector<DayRecord> days;
  std::vector<MixedStrategy> final_strategies;  // after the last completed day
  std::string transcript;                       // file name, empty when not recorded
  RunStatus status = RunStatus::completed;
  std::string error;

  bool operator==(const RunRecord&) const = default;
};

struct DayLoopOptions {
  std::string run_id = "run";
  int days = 1;
  int time_decimals = 1;
  bool parallel = false;  // one task per class within a day
};

// Algorithm 1. Kernel errors end the run with status failed and the days
// completed so far.
RunRecord run_day_loop(const ScenarioSpec& scenario, const std::vector<MechanismConfig>& configs,
                       Kernel* kernel, const DayLoopOptions& options);

}  // namespace d2d
