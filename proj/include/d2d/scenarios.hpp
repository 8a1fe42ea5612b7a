#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "d2d/dialog.hpp"
#include "d2d/feedback.hpp"
#include "d2d/network.hpp"

namespace d2d {

struct ClassSpec {
  double demand = 0.0;
  int option_count = 0;
  IncomeClass income = IncomeClass::middle;  // multimodal profile
};

// Fixed trip model for the transit / driving / park-and-ride scenario.
// Road link ids refer to the scenario network.
struct MultimodalParams {
  int local_link = 1;    // (1,3)
  int highway_link = 2;  // (3,10)
  int access_link = 3;   // (1,8)
  double bus_seats = 5.0;
  double line1_seats = 3.75;
  double line2_seats = 7.5;
  double transit_fare = 8.0;
  double drive_fuel = 4.0;
  double drive_parking = 40.0;
  double pnr_fuel = 2.0;
  double pnr_parking = 25.0;
  double pnr_fare = 8.0;
};

struct ScenarioSpec {
  std::string name;
  ScenarioKind kind = ScenarioKind::classic;
  Network network;
  std::vector<ClassSpec> classes;
  MultimodalParams multimodal;

  std::size_t class_count() const { return classes.size(); }
  void validate() const;
};

// Per-class experiences at the joint flow profile.
std::vector<FeedbackBundle> compute_experiences(const ScenarioSpec& spec, const FlowProfile& flows);

// Throws DomainError unless flows hold one non-negative entry per option
// summing to each class's demand.
void check_scenario_flows(const ScenarioSpec& spec, const FlowProfile& flows);

PromptContext prompt_context(const ScenarioSpec& spec, std::size_t class_id, int time_decimals = 1);

std::vector<std::string> scenario_names();
ScenarioSpec scenario_by_name(std::string_view name);
std::vector<ScenarioSpec> scenario_catalog();

// Declarative scenario description (JSON text). Relative file paths resolve
// against base_dir.
ScenarioSpec scenario_from_json(std::string_view json_text, const std::filesystem::path& base_dir);

}  // namespace d2d
