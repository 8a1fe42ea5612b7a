#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "d2d/errors.hpp"
#include "d2d/runner.hpp"
#include "json.hpp"

using namespace d2d;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto c = line.find(',', start);
    out.push_back(line.substr(start, c - start));
    if (c == std::string::npos) break;
    start = c + 1;
  }
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// One OD pair over four parallel links.
void write_four_route_network(const fs::path& dir) {
  std::ofstream(dir / "net.tntp") << "<NUMBER OF ZONES> 2\n<NUMBER OF NODES> 2\n<FIRST THRU NODE> 1\n"
                                     "<NUMBER OF LINKS> 4\n<END OF METADATA>\n"
                                     "~ init term cap len fft b power speed toll type ;\n"
                                     "1 2 4 0 10 0.15 4 0 0 1 ;\n1 2 3 0 11 0.15 4 0 0 1 ;\n"
                                     "1 2 5 0 12 0.15 4 0 0 1 ;\n1 2 2 0 9 0.15 4 0 0 1 ;\n";
  std::ofstream(dir / "trips.tntp") << "<NUMBER OF ZONES> 2\n<END OF METADATA>\nOrigin 1\n 2 : 10.0;\n";
  std::ofstream(dir / "four.json")
      << R"({"kind":"classic","name":"four","network":{"net":"net.tntp","trips":"trips.tntp","k":4}})";
}

}  // namespace

TEST(Config, ParsesAllKeys) {
  const auto c = config_from_json(R"({
    "scenario": "tolling_A_with3", "mechanism": "guided_rl", "rule": "rule2",
    "schedule": {"kind": "constant", "eta0": 0.2, "offset": 3}, "init": "self_chosen",
    "max_reasks": 2, "days": 12, "runs": 8, "discard": 2, "seed": 99,
    "kernel": {"type": "live", "endpoint": "http://localhost:9", "model": "x", "temperature": 0.7},
    "output_dir": "out", "dry_run": true, "parallel_classes": true, "parallel_runs": true,
    "time_decimals": 3})");
  EXPECT_EQ(c.scenario, "tolling_A_with3");
  EXPECT_EQ(c.rule, UpdateRule::rule2);
  EXPECT_EQ(c.schedule.kind, StepSchedule::Kind::constant);
  EXPECT_DOUBLE_EQ(c.schedule.eta0, 0.2);
  EXPECT_EQ(c.init, InitMode::self_chosen);
  EXPECT_EQ(c.days, 12);
  EXPECT_EQ(c.discard, 2);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.kernel, KernelType::live);
  EXPECT_EQ(c.live.model, "x");
  EXPECT_DOUBLE_EQ(c.live.temperature, 0.7);
  EXPECT_EQ(c.effective_kernel(), KernelType::scripted_min_cost);  // dry run
  EXPECT_TRUE(c.parallel_runs);
  EXPECT_EQ(c.time_decimals, 3);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(config_from_json(R"({"kernel": "scripted_noisy"})").kernel, KernelType::scripted_noisy);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(config_from_json("[1]"), ConfigError);
  EXPECT_THROW(config_from_json("{"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"dayz": 3})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"days": "three"})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"mechanism": "telepathy"})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"kernel": "oracle"})"), ConfigError);
  auto c = config_from_json(R"({"mechanism": "best_response", "init": "self_chosen"})");
  EXPECT_THROW(c.validate(), ConfigError);
  c = config_from_json(R"({"runs": 10, "discard": 10})");
  EXPECT_THROW(c.validate(), ConfigError);
  c = config_from_json(R"({"mechanism": "llm_rl", "rule": "rule1"})");
  EXPECT_THROW(c.validate(), ConfigError);
  // The rule1 default applies only to guided_rl.
  EXPECT_NO_THROW(config_from_json(R"({"mechanism": "best_response"})").validate());
  EXPECT_FALSE(config_from_json(R"({"mechanism": "llm_rl"})").rule.has_value());
  c = config_from_json(R"({"days": 0})");
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/d2d.json"), ConfigError);
}

TEST(Config, SnapshotIsCanonicalAndOmitsPaths) {
  ExperimentConfig a;
  ExperimentConfig b = a;
  b.output_dir = "elsewhere";
  b.replay = "t.jsonl";
  EXPECT_EQ(config_snapshot(a), config_snapshot(b));
  const auto j = nlohmann::json::parse(config_snapshot(a));
  EXPECT_EQ(j.at("kernel").at("type"), "scripted_min_cost");
  EXPECT_EQ(j.at("rule"), "rule1");
  b.kernel = KernelType::live;
  EXPECT_EQ(nlohmann::json::parse(config_snapshot(b)).at("kernel").at("seeded"), false);
}

TEST(Seeds, DistinctAndReproducible) {
  const auto a = derive_seeds(7, 10);
  EXPECT_EQ(a, derive_seeds(7, 10));
  EXPECT_NE(a, derive_seeds(8, 10));
  std::set<std::uint64_t> uniq(a.begin(), a.end());
  EXPECT_EQ(uniq.size(), 10u);
  EXPECT_EQ(run_id_for(3), "run-03");
}

TEST(RunExperiment, CsvRowCountAndSchema) {
  TempDir dir("d2d_test_csv");
  write_four_route_network(dir.path());
  ExperimentConfig c;
  c.scenario_file = (dir.path() / "four.json").string();
  c.mechanism = MechanismKind::best_response;
  c.rule.reset();
  c.days = 50;
  c.output_dir = (dir.path() / "out").string();
  const auto rec = run_experiment(c, "r", 1);
  ASSERT_EQ(rec.status, RunStatus::completed);
  const auto rows = lines(slurp(dir.path() / "out" / "r.csv"));
  ASSERT_EQ(rows.size(), 201u);
  EXPECT_EQ(rows[0], "run_id,day,class,option,probability,flow,cost_time,cost_money,gap,k_plus_member");
  std::map<int, double> sums;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = split(rows[i]);
    ASSERT_EQ(f.size(), 10u);
    sums[std::stoi(f[1])] += std::stod(f[4]);
    EXPECT_FALSE(f[8].empty());
  }
  EXPECT_EQ(sums.size(), 50u);
  for (auto [d, s] : sums) EXPECT_NEAR(s, 1.0, 1e-6) << "day " << d;
  EXPECT_TRUE(rec.transcript.empty());
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "r.gap.plot.csv"));
}

TEST(RunExperiment, TollingGuidedCompletesOnSimplex) {
  ExperimentConfig c;
  c.scenario = "tolling_A_with3";
  c.days = 30;
  const auto rec = run_experiment(c, "t", 1);
  ASSERT_EQ(rec.status, RunStatus::completed);
  ASSERT_EQ(rec.days.size(), 30u);
  for (const auto& d : rec.days) {
    EXPECT_FALSE(d.gap.has_value());
    double s = 0.0;
    for (double p : d.classes[0].strategy.probs()) {
      EXPECT_GE(p, 0.0);
      s += p;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  const auto csv = lines(record_csv(rec));
  EXPECT_EQ(split(csv[1])[8], "");  // gap blank outside classic scenarios
  EXPECT_EQ(rec.transcript, "t.transcript.jsonl");
}

TEST(RunRecordJson, RoundTrips) {
  ExperimentConfig c;
  c.scenario = "multimodal";
  c.kernel = KernelType::scripted_noisy;
  c.days = 10;
  const auto rec = run_experiment(c, "m", 5);
  const auto back = record_from_json(record_to_json(rec));
  EXPECT_EQ(back, rec);
  EXPECT_EQ(record_to_json(back), record_to_json(rec));
  EXPECT_THROW(record_from_json("{}"), ConfigError);
}

TEST(RunExperiment, RecordThenReplayIsByteExact) {
  TempDir dir("d2d_test_replay");
  ExperimentConfig c;
  c.scenario = "tolling_B_with3";
  c.kernel = KernelType::scripted_noisy;
  c.rule = UpdateRule::rule2;
  c.days = 20;
  c.output_dir = (dir.path() / "rec").string();
  run_experiment(c, "run-00", 11);
  ExperimentConfig r = c;
  r.replay = (dir.path() / "rec").string();
  r.output_dir = (dir.path() / "rep").string();
  const auto rep = run_experiment(r, "run-00", 11);
  ASSERT_EQ(rep.status, RunStatus::completed) << rep.error;
  for (const char* f : {"run-00.csv", "run-00.json", "run-00.shares.plot.csv"})
    EXPECT_EQ(slurp(dir.path() / "rec" / f), slurp(dir.path() / "rep" / f)) << f;
  // A different run shape finds no transcript entries.
  ExperimentConfig longer = r;
  longer.days = 21;
  const auto failed = run_experiment(longer, "run-00", 11);
  EXPECT_EQ(failed.status, RunStatus::failed);
  EXPECT_EQ(failed.days.size(), 20u);
}

TEST(Ensemble, DeterministicRunsScoreZero) {
  TempDir dir("d2d_test_ensemble");
  ExperimentConfig c;
  c.scenario = "classic_3n4l";
  c.days = 15;
  c.runs = 10;
  c.discard = 4;
  c.output_dir = dir.path().string();
  const auto res = run_ensemble(c);
  ASSERT_EQ(res.runs.size(), 10u);
  for (double s : res.summary.deviation_scores) EXPECT_EQ(s, 0.0);
  EXPECT_EQ(res.summary.retained.size(), 6u);
  EXPECT_EQ(res.summary.discarded.size(), 4u);
  for (const auto& day : res.summary.shares)
    for (const auto& cls : day)
      for (const auto& st : cls) {
        EXPECT_EQ(st.stddev, 0.0);
        EXPECT_EQ(st.lo, st.hi);
      }
  const auto plot = lines(slurp(dir.path() / "ensemble.shares.plot.csv"));
  EXPECT_EQ(plot.size(), 1u + 15u * 3u * 1u);
  EXPECT_EQ(plot[0], "day,series,mean,lo,hi");
  EXPECT_EQ(lines(slurp(dir.path() / "ensemble.gap.plot.csv")).size(), 1u + 15u);
  EXPECT_NO_THROW(nlohmann::json::parse(slurp(dir.path() / "ensemble.summary.json")));
}

TEST(Ensemble, RetentionKeepsLowestScores) {
  const std::vector<double> s{0.5, 0.1, 0.9, 0.1, 0.3, 0.7, 0.2, 0.8, 0.0, 0.4};
  EXPECT_EQ(retained_indices(s, 4), (std::vector<std::size_t>{1, 3, 4, 6, 8, 9}));
  // Ties break toward the lower index.
  EXPECT_EQ(retained_indices({1, 1, 1}, 1), (std::vector<std::size_t>{0, 1}));
  EXPECT_THROW(retained_indices(s, 10), ConfigError);
  EXPECT_THROW(retained_indices(s, -1), ConfigError);
}

TEST(Ensemble, ScoresMatchHandComputation) {
  // Two runs, one class, two options, one day: mean is the midpoint.
  RunRecord a, b;
  DayRecord da, db;
  ClassDay ca, cb;
  ca.strategy = MixedStrategy({1.0, 0.0});
  cb.strategy = MixedStrategy({0.5, 0.5});
  da.classes = {ca};
  db.classes = {cb};
  a.days = {da};
  b.days = {db};
  const auto s = deviation_scores({a, b});
  EXPECT_NEAR(s[0], 0.5, 1e-15);
  EXPECT_NEAR(s[1], 0.5, 1e-15);
  EXPECT_THROW(deviation_scores({a, RunRecord{}}), DomainError);
}

TEST(Ensemble, FailedRunsRaiseEnsembleError) {
  TempDir dir("d2d_test_ensemble_fail");
  ExperimentConfig c;
  c.days = 3;
  c.runs = 3;
  c.discard = 1;
  c.replay = (dir.path() / "missing.transcript.jsonl").string();
  std::ofstream(c.replay) << "";
  try {
    run_ensemble(c);
    FAIL() << "expected EnsembleError";
  } catch (const EnsembleError& e) {
    EXPECT_EQ(e.failed_runs(), (std::vector<std::string>{"run-00", "run-01", "run-02"}));
  }
}

TEST(Table1, SettingAMatchesPublishedUe) {
  const auto r = table1_experiment('A', *table1_default_targets('A'));
  EXPECT_NEAR(r.lambda, 2.3693, 1e-4);
  ASSERT_EQ(r.ue_with.size(), 3u);
  EXPECT_NEAR(r.ue_with[0], 0.31, 0.01);
  EXPECT_NEAR(r.ue_with[1], 0.69, 0.01);
  EXPECT_NEAR(r.ue_with[2], 0.0, 0.01);
  EXPECT_TRUE(r.road3_dominated);
  EXPECT_LE(r.relative_gap, 1e-9);
  EXPECT_FALSE(table1_default_targets('B').has_value());
  EXPECT_THROW(table1_experiment('A', {1.0, 0.0}), CalibrationError);
  EXPECT_THROW(table1_experiment('D', {0.5, 0.5}), ConfigError);
  EXPECT_NO_THROW(nlohmann::json::parse(table1_to_json(r)));
}
