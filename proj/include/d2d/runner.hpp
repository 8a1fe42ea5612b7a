#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "d2d/kernel.hpp"
#include "d2d/mechanisms.hpp"
#include "d2d/scenarios.hpp"

namespace d2d {

class EnsembleError : public std::runtime_error {
 public:
  EnsembleError(const std::string& what, std::vector<std::string> failed)
      : std::runtime_error(what), failed_(std::move(failed)) {}
  const std::vector<std::string>& failed_runs() const noexcept { return failed_; }

 private:
  std::vector<std::string> failed_;
};

enum class KernelType { scripted_min_cost, scripted_noisy, live };
std::string_view to_string(KernelType type);
KernelType parse_kernel_type(std::string_view name);

struct ExperimentConfig {
  std::string scenario = "classic_3n4l";  // builtin name
  std::string scenario_file;              // JSON description; overrides `scenario`
  MechanismKind mechanism = MechanismKind::guided_rl;
  std::optional<UpdateRule> rule = UpdateRule::rule1;
  StepSchedule schedule;
  InitMode init = InitMode::external_uniform;
  int max_reasks = 3;
  int days = 30;
  int runs = 10;
  int discard = 4;
  std::uint64_t seed = 1;
  KernelType kernel = KernelType::scripted_min_cost;
  KernelConfig live;
  double noisy_none_prob = 0.1;
  double noisy_extra_prob = 0.3;
  std::string replay;  // transcript file or directory; not part of the snapshot
  std::string output_dir;
  bool dry_run = false;  // forces the scripted min-cost kernel
  bool parallel_classes = false;
  bool parallel_runs = false;
  int time_decimals = 1;

  void validate() const;
  MechanismConfig mechanism_config() const;
  KernelType effective_kernel() const;
};

// Keys mirror the field names; "kernel" may be a string or an object with
// type/endpoint/model/temperature/... Relative scenario_file paths resolve
// against base_dir.
ExperimentConfig config_from_json(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical snapshot (sorted keys). Omits replay and output_dir.
std::string config_snapshot(const ExperimentConfig& config);

std::vector<std::uint64_t> derive_seeds(std::uint64_t master, int count);
std::string run_id_for(int index);
std::string transcript_name(const std::string& run_id);

ScenarioSpec resolve_scenario(const ExperimentConfig& config);

// One run. Builds the kernel from the config (or the replay transcript),
// records a transcript next to the outputs, and writes CSV/JSON/plot files
// when output_dir is set.
RunRecord run_experiment(const ExperimentConfig& config, const std::string& run_id,
                         std::uint64_t seed);
// Same, with a caller-supplied kernel (no transcript handling).
RunRecord run_with_kernel(const ExperimentConfig& config, const std::string& run_id,
                          Kernel* kernel);

struct ShareStats {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double stddev = 0.0;
};

struct EnsembleSummary {
  std::vector<std::string> run_ids;
  std::vector<double> deviation_scores;  // per run, same order as run_ids
  std::vector<std::string> retained;
  std::vector<std::string> discarded;
  int days = 0;
  // [day][class][option] over retained runs
  std::vector<std::vector<std::vector<ShareStats>>> shares;
  // [class][option] of final strategies over retained runs
  std::vector<std::vector<ShareStats>> final_shares;
  // [day], classic scenarios only
  std::vector<ShareStats> gap;
};

// Mean over days of the summed per-class L1 distance to the cross-run mean.
std::vector<double> deviation_scores(const std::vector<RunRecord>& runs);
// Indices of the runs.size() - discard lowest scores (ties to lower index),
// in ascending index order.
std::vector<std::size_t> retained_indices(const std::vector<double>& scores, int discard);
EnsembleSummary summarize_ensemble(const std::vector<RunRecord>& runs, int discard);

struct EnsembleResult {
  std::vector<RunRecord> runs;
  EnsembleSummary summary;
};
EnsembleResult run_ensemble(const ExperimentConfig& config);

struct Table1Report {
  char setting = 'A';
  std::vector<double> target_without;  // shares of routes 1, 2 without Road 3
  double lambda = 0.0;
  std::vector<double> ue_with;         // UE shares with Road 3
  std::vector<double> reference_llm;   // published LLM shares with Road 3
  std::vector<double> reference_ue;    // published UE shares with Road 3
  std::vector<double> generalized_costs;
  bool road3_dominated = false;
  double relative_gap = 0.0;
};

// Default target shares exist for settings A and C only.
std::optional<std::vector<double>> table1_default_targets(char setting);
Table1Report table1_experiment(char setting, const std::vector<double>& target_without);

// ---- outputs ----

std::string record_csv(const RunRecord& record);
std::string record_to_json(const RunRecord& record);
RunRecord record_from_json(std::string_view text);
std::string run_plot_csv(const RunRecord& record, bool gap);
std::string summary_to_json(const EnsembleSummary& summary);
std::string summary_plot_csv(const EnsembleSummary& summary, bool gap);
std::string table1_to_json(const Table1Report& report);

// Writes <run_id>.csv, <run_id>.json and plot files under dir.
void emit_outputs(const RunRecord& record, const std::filesystem::path& dir);
void emit_outputs(const EnsembleSummary& summary, const std::filesystem::path& dir);

}  // namespace d2d
