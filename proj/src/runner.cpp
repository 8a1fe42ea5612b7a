#include "d2d/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "d2d/assignment.hpp"
#include "d2d/errors.hpp"
#include "json.hpp"

namespace d2d {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
  if (!out) throw ConfigError("write failed: " + p.string());
}

std::vector<TranscriptRecord> load_replay(const fs::path& p) {
  if (!fs::is_directory(p)) return TranscriptStore::load(p);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(p)) {
    const auto name = e.path().filename().string();
    if (name.size() > 17 && name.ends_with(".transcript.jsonl")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TranscriptRecord> out;
  for (const auto& f : files) {
    auto r = TranscriptStore::load(f);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

json strategy_json(const MixedStrategy& p) { return p.probs(); }

json option_set_json(const std::optional<OptionSet>& s) {
  if (!s) return nullptr;
  return std::vector<int>(s->begin(), s->end());
}

std::optional<OptionSet> option_set_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  auto v = j.get<std::vector<int>>();
  return OptionSet(v.begin(), v.end());
}

// Mean shifted by the first sample, so identical samples give it back exactly.
double shifted_mean(const std::vector<double>& xs) {
  double d = 0.0;
  for (double x : xs) d += x - xs.front();
  return xs.front() + d / static_cast<double>(xs.size());
}

ShareStats stats_of(const std::vector<double>& xs) {
  ShareStats s;
  if (xs.empty()) return s;
  s.lo = *std::min_element(xs.begin(), xs.end());
  s.hi = *std::max_element(xs.begin(), xs.end());
  s.mean = shifted_mean(xs);
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

json stats_json(const ShareStats& s) {
  return {{"mean", s.mean}, {"lo", s.lo}, {"hi", s.hi}, {"stddev", s.stddev}};
}

std::string series_name(std::size_t m, std::size_t k) {
  return fmt::format("class{}_option{}", m + 1, k + 1);
}

}  // namespace

std::string_view to_string(KernelType type) {
  switch (type) {
    case KernelType::scripted_min_cost: return "scripted_min_cost";
    case KernelType::scripted_noisy: return "scripted_noisy";
    case KernelType::live: return "live";
  }
  return "?";
}

KernelType parse_kernel_type(std::string_view name) {
  if (name == "scripted_min_cost" || name == "scripted") return KernelType::scripted_min_cost;
  if (name == "scripted_noisy") return KernelType::scripted_noisy;
  if (name == "live") return KernelType::live;
  throw ConfigError(fmt::format("unknown kernel '{}'", name));
}

// ---- config ----

KernelType ExperimentConfig::effective_kernel() const {
  return dry_run ? KernelType::scripted_min_cost : kernel;
}

MechanismConfig ExperimentConfig::mechanism_config() const {
  MechanismConfig m;
  m.kind = mechanism;
  m.rule = mechanism == MechanismKind::guided_rl ? std::optional(rule.value_or(UpdateRule::rule1))
                                                 : std::nullopt;
  m.schedule = schedule;
  m.init = init;
  m.max_reasks = max_reasks;
  return m;
}

void ExperimentConfig::validate() const {
  if (days < 1) throw ConfigError("days must be at least 1");
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (discard < 0 || discard >= runs) throw ConfigError("discard must be in [0, runs)");
  if (rule && mechanism != MechanismKind::guided_rl)
    throw ConfigError(fmt::format("mechanism {} takes no update rule", d2d::to_string(mechanism)));
  if (time_decimals < 0 || time_decimals > 12) throw ConfigError("time_decimals must be in [0, 12]");
  if (!(noisy_none_prob >= 0.0 && noisy_none_prob <= 1.0) ||
      !(noisy_extra_prob >= 0.0 && noisy_extra_prob <= 1.0))
    throw ConfigError("noisy kernel probabilities must be in [0, 1]");
  mechanism_config().validate();
  if (effective_kernel() == KernelType::live) live.validate();
}

ExperimentConfig config_from_json(std::string_view text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{
      "scenario", "scenario_file", "mechanism", "rule", "schedule", "init", "max_reasks",
      "days", "runs", "discard", "seed", "kernel", "replay", "output_dir", "dry_run",
      "parallel_classes", "parallel_runs", "time_decimals"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError(fmt::format("unknown config key '{}'", k));

  ExperimentConfig c;
  try {
    c.scenario = j.value("scenario", c.scenario);
    if (j.contains("scenario_file")) {
      fs::path p = j.at("scenario_file").get<std::string>();
      c.scenario_file = (p.is_absolute() || base_dir.empty() ? p : base_dir / p).string();
    }
    if (j.contains("mechanism"))
      c.mechanism = parse_mechanism_kind(j.at("mechanism").get<std::string>());
    if (j.contains("rule") && !j.at("rule").is_null())
      c.rule = parse_update_rule(j.at("rule").get<std::string>());
    else if (c.mechanism != MechanismKind::guided_rl)
      c.rule.reset();
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      if (s.contains("kind")) c.schedule.kind = parse_schedule_kind(s.at("kind").get<std::string>());
      c.schedule.eta0 = s.value("eta0", c.schedule.eta0);
      c.schedule.offset = s.value("offset", c.schedule.offset);
    }
    if (j.contains("init")) c.init = parse_init_mode(j.at("init").get<std::string>());
    c.max_reasks = j.value("max_reasks", c.max_reasks);
    c.days = j.value("days", c.days);
    c.runs = j.value("runs", c.runs);
    c.discard = j.value("discard", c.discard);
    c.seed = j.value("seed", c.seed);
    if (j.contains("kernel")) {
      const auto& k = j.at("kernel");
      if (k.is_string()) {
        c.kernel = parse_kernel_type(k.get<std::string>());
      } else {
        if (k.contains("type")) c.kernel = parse_kernel_type(k.at("type").get<std::string>());
        c.live.endpoint = k.value("endpoint", c.live.endpoint);
        c.live.model = k.value("model", c.live.model);
        c.live.temperature = k.value("temperature", c.live.temperature);
        c.live.timeout_seconds = k.value("timeout_seconds", c.live.timeout_seconds);
        c.live.max_retries = k.value("max_retries", c.live.max_retries);
        c.live.backoff_ms = k.value("backoff_ms", c.live.backoff_ms);
        c.live.api_key_env = k.value("api_key_env", c.live.api_key_env);
        c.noisy_none_prob = k.value("none_prob", c.noisy_none_prob);
        c.noisy_extra_prob = k.value("extra_prob", c.noisy_extra_prob);
      }
    }
    c.replay = j.value("replay", c.replay);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.dry_run = j.value("dry_run", c.dry_run);
    c.parallel_classes = j.value("parallel_classes", c.parallel_classes);
    c.parallel_runs = j.value("parallel_runs", c.parallel_runs);
    c.time_decimals = j.value("time_decimals", c.time_decimals);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  return config_from_json(read_file(path), path.parent_path());
}

std::string config_snapshot(const ExperimentConfig& c) {
  const auto mc = c.mechanism_config();
  json kernel{{"type", to_string(c.effective_kernel())}};
  switch (c.effective_kernel()) {
    case KernelType::live:
      kernel["endpoint"] = c.live.endpoint;
      kernel["model"] = c.live.model;
      kernel["temperature"] = c.live.temperature;
      kernel["seeded"] = false;  // remote sampling cannot be seeded
      break;
    case KernelType::scripted_noisy:
      kernel["none_prob"] = c.noisy_none_prob;
      kernel["extra_prob"] = c.noisy_extra_prob;
      kernel["seeded"] = true;
      break;
    case KernelType::scripted_min_cost:
      kernel["seeded"] = true;
      break;
  }
  json j{{"scenario", c.scenario_file.empty() ? c.scenario : fs::path(c.scenario_file).filename().string()},
         {"mechanism", to_string(c.mechanism)},
         {"rule", mc.rule ? json(to_string(*mc.rule)) : json(nullptr)},
         {"schedule",
          {{"kind", to_string(c.schedule.kind)}, {"eta0", c.schedule.eta0}, {"offset", c.schedule.offset}}},
         {"init", to_string(c.init)},
         {"max_reasks", c.max_reasks},
         {"days", c.days},
         {"runs", c.runs},
         {"discard", c.discard},
         {"seed", c.seed},
         {"kernel", kernel},
         {"time_decimals", c.time_decimals}};
  return j.dump();
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t master, int count) {
  std::mt19937_64 gen(master);
  std::vector<std::uint64_t> out(static_cast<std::size_t>(std::max(count, 0)));
  for (auto& s : out) s = gen();
  return out;
}

std::string run_id_for(int index) { return fmt::format("run-{:02}", index); }

std::string transcript_name(const std::string& run_id) { return run_id + ".transcript.jsonl"; }

ScenarioSpec resolve_scenario(const ExperimentConfig& config) {
  if (!config.scenario_file.empty()) {
    const fs::path p = config.scenario_file;
    return scenario_from_json(read_file(p), p.parent_path());
  }
  return scenario_by_name(config.scenario);
}

// ---- runs ----

RunRecord run_with_kernel(const ExperimentConfig& config, const std::string& run_id,
                          Kernel* kernel) {
  config.validate();
  const auto scenario = resolve_scenario(config);
  const std::vector<MechanismConfig> mcs(scenario.class_count(), config.mechanism_config());
  DayLoopOptions opts;
  opts.run_id = run_id;
  opts.days = config.days;
  opts.time_decimals = config.time_decimals;
  opts.parallel = config.parallel_classes;
  auto rec = run_day_loop(scenario, mcs, kernel, opts);
  rec.config_json = config_snapshot(config);
  return rec;
}

RunRecord run_experiment(const ExperimentConfig& config, const std::string& run_id,
                         std::uint64_t seed) {
  config.validate();
  const bool uses_kernel = config.mechanism != MechanismKind::best_response;
  if (!config.output_dir.empty()) fs::create_directories(config.output_dir);

  std::shared_ptr<Kernel> kernel;
  if (uses_kernel) {
    if (!config.replay.empty()) {
      kernel = std::make_shared<ReplayKernel>(load_replay(config.replay));
    } else {
      std::shared_ptr<Kernel> inner;
      switch (config.effective_kernel()) {
        case KernelType::scripted_min_cost:
          inner = std::make_shared<ScriptedMinCostKernel>();
          break;
        case KernelType::scripted_noisy:
          inner = std::make_shared<ScriptedNoisyKernel>(seed, config.noisy_none_prob,
                                                        config.noisy_extra_prob);
          break;
        case KernelType::live:
          inner = std::make_shared<LiveKernel>(config.live);
          break;
      }
      auto store = config.output_dir.empty()
                       ? std::make_shared<TranscriptStore>()
                       : std::make_shared<TranscriptStore>(fs::path(config.output_dir) /
                                                           transcript_name(run_id));
      kernel = std::make_shared<RecordingKernel>(inner, store);
    }
  }

  auto rec = run_with_kernel(config, run_id, kernel.get());
  auto snap = json::parse(rec.config_json);
  snap["run_seed"] = seed;
  rec.config_json = snap.dump();
  if (uses_kernel) rec.transcript = transcript_name(run_id);
  if (!config.output_dir.empty()) emit_outputs(rec, config.output_dir);
  return rec;
}

// ---- ensembles ----

std::vector<double> deviation_scores(const std::vector<RunRecord>& runs) {
  std::vector<double> scores(runs.size(), 0.0);
  if (runs.empty()) return scores;
  const std::size_t days = runs.front().days.size();
  for (const auto& r : runs)
    if (r.days.size() != days) throw DomainError("runs differ in length");
  if (days == 0) return scores;
  for (std::size_t t = 0; t < days; ++t) {
    const std::size_t classes = runs.front().days[t].classes.size();
    for (std::size_t m = 0; m < classes; ++m) {
      std::vector<double> mean(runs.front().days[t].classes[m].strategy.size());
      for (std::size_t k = 0; k < mean.size(); ++k) {
        std::vector<double> xs;
        for (const auto& r : runs) xs.push_back(r.days[t].classes[m].strategy[k]);
        mean[k] = shifted_mean(xs);
      }
      for (std::size_t i = 0; i < runs.size(); ++i) {
        double l1 = 0.0;
        for (std::size_t k = 0; k < mean.size(); ++k)
          l1 += std::abs(runs[i].days[t].classes[m].strategy[k] - mean[k]);
        scores[i] += l1;
      }
    }
  }
  for (auto& s : scores) s /= static_cast<double>(days);
  return scores;
}

std::vector<std::size_t> retained_indices(const std::vector<double>& scores, int discard) {
  if (discard < 0 || static_cast<std::size_t>(discard) >= scores.size())
    throw ConfigError("discard must be in [0, runs)");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  order.resize(scores.size() - static_cast<std::size_t>(discard));
  std::sort(order.begin(), order.end());
  return order;
}

EnsembleSummary summarize_ensemble(const std::vector<RunRecord>& runs, int discard) {
  EnsembleSummary s;
  s.deviation_scores = deviation_scores(runs);
  const auto keep = retained_indices(s.deviation_scores, discard);
  std::vector<bool> kept(runs.size(), false);
  for (auto i : keep) kept[i] = true;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    s.run_ids.push_back(runs[i].run_id);
    (kept[i] ? s.retained : s.discarded).push_back(runs[i].run_id);
  }
  s.days = static_cast<int>(runs.front().days.size());
  for (int t = 0; t < s.days; ++t) {
    const auto& ref = runs.front().days[t];
    std::vector<std::vector<ShareStats>> day(ref.classes.size());
    for (std::size_t m = 0; m < ref.classes.size(); ++m)
      for (std::size_t k = 0; k < ref.classes[m].strategy.size(); ++k) {
        std::vector<double> xs;
        for (auto i : keep) xs.push_back(runs[i].days[t].classes[m].strategy[k]);
        day[m].push_back(stats_of(xs));
      }
    s.shares.push_back(std::move(day));
    if (ref.gap) {
      std::vector<double> gs;
      for (auto i : keep) gs.push_back(runs[i].days[t].gap.value_or(0.0));
      s.gap.push_back(stats_of(gs));
    }
  }
  const auto& fin = runs.front().final_strategies;
  for (std::size_t m = 0; m < fin.size(); ++m) {
    std::vector<ShareStats> row;
    for (std::size_t k = 0; k < fin[m].size(); ++k) {
      std::vector<double> xs;
      for (auto i : keep) xs.push_back(runs[i].final_strategies[m][k]);
      row.push_back(stats_of(xs));
    }
    s.final_shares.push_back(std::move(row));
  }
  return s;
}

EnsembleResult run_ensemble(const ExperimentConfig& config) {
  config.validate();
  const auto seeds = derive_seeds(config.seed, config.runs);
  EnsembleResult res;
  res.runs.resize(static_cast<std::size_t>(config.runs));
  if (config.parallel_runs) {
    std::vector<std::future<RunRecord>> tasks;
    for (int i = 0; i < config.runs; ++i)
      tasks.push_back(std::async(std::launch::async, [&, i] {
        return run_experiment(config, run_id_for(i), seeds[static_cast<std::size_t>(i)]);
      }));
    for (std::size_t i = 0; i < tasks.size(); ++i) res.runs[i] = tasks[i].get();
  } else {
    for (int i = 0; i < config.runs; ++i)
      res.runs[static_cast<std::size_t>(i)] =
          run_experiment(config, run_id_for(i), seeds[static_cast<std::size_t>(i)]);
  }
  std::vector<std::string> failed;
  for (const auto& r : res.runs)
    if (r.status != RunStatus::completed) failed.push_back(r.run_id);
  if (!failed.empty()) {
    std::string list;
    for (const auto& f : failed) list += (list.empty() ? "" : ", ") + f;
    throw EnsembleError(fmt::format("ensemble runs failed: {}", list), failed);
  }
  res.summary = summarize_ensemble(res.runs, config.discard);
  if (!config.output_dir.empty()) emit_outputs(res.summary, config.output_dir);
  return res;
}

// ---- Table 1 ----

std::optional<std::vector<double>> table1_default_targets(char setting) {
  switch (setting) {
    case 'A': return std::vector<double>{0.31, 0.69};
    case 'C': return std::vector<double>{0.52, 0.48};
    default: return std::nullopt;
  }
}

Table1Report table1_experiment(char setting, const std::vector<double>& target_without) {
  if (setting != 'A' && setting != 'B' && setting != 'C')
    throw ConfigError(fmt::format("unknown setting '{}'", setting));
  Table1Report r;
  r.setting = setting;
  r.target_without = target_without;
  const auto without = builtin_network(fmt::format("tolling_{}_without3", setting));
  const auto with3 = builtin_network(fmt::format("tolling_{}_with3", setting));
  r.lambda = calibrate_vot(without, target_without);

  UeOptions o;
  o.method = UeMethod::pairwise;
  o.tol = 1e-12;
  o.max_iters = 20000;
  o.spec = GeneralizedCostSpec{r.lambda};
  const auto ue = solve_ue(with3, o);
  r.relative_gap = ue.gap;
  const double d = with3.classes().front().demand;
  for (double f : ue.flows.front()) r.ue_with.push_back(f / d);
  r.generalized_costs = generalized_route_costs(with3, ue.flows, o.spec).front();

  double min_used = INFINITY;
  for (std::size_t k = 0; k < r.ue_with.size(); ++k)
    if (r.ue_with[k] > 1e-9) min_used = std::min(min_used, r.generalized_costs[k]);
  const auto& road3 = with3.link(3);
  r.road3_dominated = r.lambda * road3.free_flow_time + road3.toll > min_used;

  switch (setting) {
    case 'A':
      r.reference_ue = {0.31, 0.69, 0.0};
      r.reference_llm = {0.24, 0.74, 0.02};
      break;
    case 'B':
      r.reference_ue = {0.0, 0.47, 0.53};
      r.reference_llm = {0.03, 0.48, 0.49};
      break;
    default:
      r.reference_ue = {0.45, 0.55, 0.0};
      r.reference_llm = {0.32, 0.66, 0.01};
  }
  return r;
}

// ---- outputs ----

std::string record_csv(const RunRecord& rec) {
  std::string out = "run_id,day,class,option,probability,flow,cost_time,cost_money,gap,k_plus_member\n";
  for (const auto& d : rec.days) {
    const std::string gap = d.gap ? fmt::format("{}", *d.gap) : "";
    for (std::size_t m = 0; m < d.classes.size(); ++m) {
      const auto& c = d.classes[m];
      for (std::size_t k = 0; k < c.strategy.size(); ++k) {
        const std::string member =
            c.k_plus ? (c.k_plus->count(static_cast<int>(k)) ? "1" : "0") : "";
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", rec.run_id, d.day, m + 1, k + 1,
                           c.strategy[k], c.flows[k], c.cost_time[k], c.cost_money[k], gap, member);
      }
    }
  }
  return out;
}

std::string record_to_json(const RunRecord& rec) {
  json days = json::array();
  for (const auto& d : rec.days) {
    json classes = json::array();
    for (const auto& c : d.classes)
      classes.push_back({{"strategy", strategy_json(c.strategy)},
                         {"flows", c.flows},
                         {"cost_time", c.cost_time},
                         {"cost_money", c.cost_money},
                         {"k_plus", option_set_json(c.k_plus)},
                         {"eta", c.eta},
                         {"history_growth", c.history_growth},
                         {"events", c.events}});
    days.push_back({{"day", d.day},
                    {"gap", d.gap ? json(*d.gap) : json(nullptr)},
                    {"classes", std::move(classes)}});
  }
  json finals = json::array();
  for (const auto& p : rec.final_strategies) finals.push_back(strategy_json(p));
  json j{{"run_id", rec.run_id},
         {"config", rec.config_json.empty() ? json::object() : json::parse(rec.config_json)},
         {"status", to_string(rec.status)},
         {"error", rec.error},
         {"transcript", rec.transcript},
         {"init_events", rec.init_events},
         {"days", std::move(days)},
         {"final_strategies", std::move(finals)}};
  return j.dump(2) + "\n";
}

RunRecord record_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    RunRecord rec;
    rec.run_id = j.at("run_id").get<std::string>();
    const auto& cfg = j.at("config");
    rec.config_json = cfg.empty() ? "" : cfg.dump();
    rec.status = parse_run_status(j.at("status").get<std::string>());
    rec.error = j.at("error").get<std::string>();
    rec.transcript = j.at("transcript").get<std::string>();
    rec.init_events = j.at("init_events").get<std::vector<std::vector<std::string>>>();
    for (const auto& dj : j.at("days")) {
      DayRecord d;
      d.day = dj.at("day").get<int>();
      if (!dj.at("gap").is_null()) d.gap = dj.at("gap").get<double>();
      for (const auto& cj : dj.at("classes")) {
        ClassDay c;
        c.strategy = MixedStrategy(cj.at("strategy").get<std::vector<double>>());
        c.flows = cj.at("flows").get<std::vector<double>>();
        c.cost_time = cj.at("cost_time").get<std::vector<double>>();
        c.cost_money = cj.at("cost_money").get<std::vector<double>>();
        c.k_plus = option_set_from(cj.at("k_plus"));
        c.eta = cj.at("eta").get<double>();
        c.history_growth = cj.at("history_growth").get<int>();
        c.events = cj.at("events").get<std::vector<std::string>>();
        d.classes.push_back(std::move(c));
      }
      rec.days.push_back(std::move(d));
    }
    for (const auto& pj : j.at("final_strategies"))
      rec.final_strategies.emplace_back(pj.get<std::vector<double>>());
    return rec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run record: ") + e.what());
  }
}

std::string run_plot_csv(const RunRecord& rec, bool gap) {
  std::string out = "day,series,mean,lo,hi\n";
  for (const auto& d : rec.days) {
    if (gap) {
      if (d.gap) out += fmt::format("{},gap,{},{},{}\n", d.day, *d.gap, *d.gap, *d.gap);
      continue;
    }
    for (std::size_t m = 0; m < d.classes.size(); ++m)
      for (std::size_t k = 0; k < d.classes[m].strategy.size(); ++k) {
        const double p = d.classes[m].strategy[k];
        out += fmt::format("{},{},{},{},{}\n", d.day, series_name(m, k), p, p, p);
      }
  }
  return out;
}

std::string summary_to_json(const EnsembleSummary& s) {
  json shares = json::array();
  for (const auto& day : s.shares) {
    json dj = json::array();
    for (const auto& cls : day) {
      json cj = json::array();
      for (const auto& st : cls) cj.push_back(stats_json(st));
      dj.push_back(std::move(cj));
    }
    shares.push_back(std::move(dj));
  }
  json finals = json::array();
  for (const auto& cls : s.final_shares) {
    json cj = json::array();
    for (const auto& st : cls) cj.push_back(stats_json(st));
    finals.push_back(std::move(cj));
  }
  json gap = json::array();
  for (const auto& st : s.gap) gap.push_back(stats_json(st));
  json j{{"run_ids", s.run_ids},      {"deviation_scores", s.deviation_scores},
         {"retained", s.retained},    {"discarded", s.discarded},
         {"days", s.days},            {"shares", std::move(shares)},
         {"final_shares", std::move(finals)}, {"gap", std::move(gap)}};
  return j.dump(2) + "\n";
}

std::string summary_plot_csv(const EnsembleSummary& s, bool gap) {
  std::string out = "day,series,mean,lo,hi\n";
  if (gap) {
    for (std::size_t t = 0; t < s.gap.size(); ++t)
      out += fmt::format("{},gap,{},{},{}\n", t, s.gap[t].mean, s.gap[t].lo, s.gap[t].hi);
    return out;
  }
  for (std::size_t t = 0; t < s.shares.size(); ++t)
    for (std::size_t m = 0; m < s.shares[t].size(); ++m)
      for (std::size_t k = 0; k < s.shares[t][m].size(); ++k) {
        const auto& st = s.shares[t][m][k];
        out += fmt::format("{},{},{},{},{}\n", t, series_name(m, k), st.mean, st.lo, st.hi);
      }
  return out;
}

std::string table1_to_json(const Table1Report& r) {
  json j{{"setting", std::string(1, r.setting)},
         {"target_without_road3", r.target_without},
         {"lambda", r.lambda},
         {"ue_with_road3", r.ue_with},
         {"generalized_costs", r.generalized_costs},
         {"road3_dominated", r.road3_dominated},
         {"relative_gap", r.relative_gap},
         {"reference_ue", r.reference_ue},
         {"reference_llm", r.reference_llm}};
  return j.dump(2) + "\n";
}

void emit_outputs(const RunRecord& rec, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / (rec.run_id + ".csv"), record_csv(rec));
  write_file(dir / (rec.run_id + ".json"), record_to_json(rec));
  write_file(dir / (rec.run_id + ".shares.plot.csv"), run_plot_csv(rec, false));
  if (!rec.days.empty() && rec.days.front().gap)
    write_file(dir / (rec.run_id + ".gap.plot.csv"), run_plot_csv(rec, true));
}

void emit_outputs(const EnsembleSummary& s, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "ensemble.summary.json", summary_to_json(s));
  write_file(dir / "ensemble.shares.plot.csv", summary_plot_csv(s, false));
  if (!s.gap.empty()) write_file(dir / "ensemble.gap.plot.csv", summary_plot_csv(s, true));
}

}  // namespace d2d
