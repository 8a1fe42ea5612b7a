// d2d: command-line front end for the day-to-day simulator.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "d2d/assignment.hpp"
#include "d2d/errors.hpp"
#include "d2d/network.hpp"
#include "d2d/runner.hpp"

namespace fs = std::filesystem;
using namespace d2d;

namespace {

struct Overrides {
  std::string config;
  std::string scenario, scenario_file, mechanism, rule, schedule, init, kernel, endpoint, model,
      replay, out;
  std::optional<double> eta0, temperature;
  std::optional<int> offset, days, runs, discard, time_decimals, max_reasks;
  std::optional<std::uint64_t> seed;
  bool dry_run = false, parallel_classes = false, parallel_runs = false;
};

void add_run_options(CLI::App* app, Overrides& o, bool ensemble) {
  app->add_option("-c,--config", o.config, "JSON experiment config");
  app->add_option("--scenario", o.scenario, "builtin scenario name");
  app->add_option("--scenario-file", o.scenario_file, "JSON scenario description");
  app->add_option("--mechanism", o.mechanism, "llm_baseline | llm_rl | guided_rl | best_response");
  app->add_option("--rule", o.rule, "rule1 | rule2 (guided_rl)");
  app->add_option("--schedule", o.schedule, "harmonic | constant");
  app->add_option("--eta0", o.eta0);
  app->add_option("--offset", o.offset);
  app->add_option("--init", o.init, "external_uniform | self_chosen");
  app->add_option("--max-reasks", o.max_reasks);
  app->add_option("--days", o.days);
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--kernel", o.kernel, "scripted_min_cost | scripted_noisy | live");
  app->add_option("--endpoint", o.endpoint);
  app->add_option("--model", o.model);
  app->add_option("--temperature", o.temperature);
  app->add_option("--replay", o.replay, "transcript file or directory to replay");
  app->add_option("-o,--out", o.out, "output directory");
  app->add_option("--time-decimals", o.time_decimals, "decimals of feedback times");
  app->add_flag("--dry-run", o.dry_run, "use the scripted min-cost kernel");
  app->add_flag("--parallel-classes", o.parallel_classes);
  if (ensemble) {
    app->add_option("--runs", o.runs);
    app->add_option("--discard", o.discard);
    app->add_flag("--parallel-runs", o.parallel_runs);
  }
}

ExperimentConfig build_config(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (!o.scenario.empty()) {
    c.scenario = o.scenario;
    c.scenario_file.clear();
  }
  if (!o.scenario_file.empty()) c.scenario_file = o.scenario_file;
  if (!o.mechanism.empty()) {
    c.mechanism = parse_mechanism_kind(o.mechanism);
    if (c.mechanism != MechanismKind::guided_rl && o.rule.empty()) c.rule.reset();
  }
  if (!o.rule.empty()) c.rule = parse_update_rule(o.rule);
  if (!o.schedule.empty()) c.schedule.kind = parse_schedule_kind(o.schedule);
  if (o.eta0) c.schedule.eta0 = *o.eta0;
  if (o.offset) c.schedule.offset = *o.offset;
  if (!o.init.empty()) c.init = parse_init_mode(o.init);
  if (o.max_reasks) c.max_reasks = *o.max_reasks;
  if (o.days) c.days = *o.days;
  if (o.runs) c.runs = *o.runs;
  if (o.discard) c.discard = *o.discard;
  if (o.seed) c.seed = *o.seed;
  if (!o.kernel.empty()) c.kernel = parse_kernel_type(o.kernel);
  if (!o.endpoint.empty()) c.live.endpoint = o.endpoint;
  if (!o.model.empty()) c.live.model = o.model;
  if (o.temperature) c.live.temperature = *o.temperature;
  if (!o.replay.empty()) c.replay = o.replay;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.time_decimals) c.time_decimals = *o.time_decimals;
  if (o.dry_run) c.dry_run = true;
  if (o.parallel_classes) c.parallel_classes = true;
  if (o.parallel_runs) c.parallel_runs = true;
  c.validate();
  return c;
}

struct NetworkArgs {
  std::string name, net, trips, routes;
  int k = 5;
};

void add_network_options(CLI::App* app, NetworkArgs& n) {
  app->add_option("--network", n.name, "builtin network name");
  app->add_option("--net", n.net, "TNTP network file");
  app->add_option("--trips", n.trips, "TNTP trips file");
  app->add_option("--routes", n.routes, "route file");
  app->add_option("-k", n.k, "routes per OD pair when no route file is given");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Network build_network(const NetworkArgs& a, bool need_routes) {
  if (!a.name.empty()) return builtin_network(a.name);
  if (a.net.empty() || a.trips.empty()) throw ConfigError("give --network or both --net and --trips");
  Network net = load_tntp_files(a.net, a.trips);
  if (!need_routes) return net;
  std::vector<std::vector<Route>> sets;
  if (!a.routes.empty()) {
    sets = parse_route_file(slurp(a.routes), net);
  } else {
    for (const auto& c : net.classes())
      sets.push_back(k_shortest_routes(net, c.origin, c.destination, a.k));
  }
  return net.with_routes(std::move(sets));
}

// Lines "class route flow" (1-based), '#' comments.
FlowProfile parse_flow_file(const std::string& text, const Network& net) {
  FlowProfile f(net.class_count());
  for (std::size_t m = 0; m < f.size(); ++m) f[m].assign(net.classes()[m].routes.size(), 0.0);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    long m = 0, r = 0;
    double v = 0.0;
    if (!(ls >> m)) continue;
    if (!(ls >> r >> v)) throw ParseError("expected: class route flow", lineno);
    if (m < 1 || static_cast<std::size_t>(m) > f.size() || r < 1 ||
        static_cast<std::size_t>(r) > f[m - 1].size())
      throw ParseError("class or route out of range", lineno);
    f[m - 1][r - 1] = v;
  }
  return f;
}

void print_flows(const FlowProfile& f) {
  for (std::size_t m = 0; m < f.size(); ++m)
    for (std::size_t r = 0; r < f[m].size(); ++r) fmt::print("{} {} {}\n", m + 1, r + 1, f[m][r]);
}

int report_run(const RunRecord& rec) {
  std::string last;
  if (!rec.days.empty()) {
    const auto& d = rec.days.back();
    if (d.gap) last = fmt::format(", last gap {:.3e}", *d.gap);
  }
  fmt::print("{}: {} ({} days{}){}\n", rec.run_id, to_string(rec.status), rec.days.size(), last,
             rec.error.empty() ? "" : " - " + rec.error);
  return rec.status == RunStatus::completed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Day-to-day traffic simulator with representative LLM agents"};
  app.require_subcommand(1);

  Overrides run_o, ens_o;
  auto* run = app.add_subcommand("run", "one simulation run");
  add_run_options(run, run_o, false);
  auto* ens = app.add_subcommand("ensemble", "repeated runs with outlier filtering");
  add_run_options(ens, ens_o, true);

  auto* t1 = app.add_subcommand("table1", "calibrate value of time and compare UE with Road 3");
  std::string setting = "A";
  std::vector<double> shares;
  std::string t1_out;
  t1->add_option("--setting", setting)->check(CLI::IsMember({"A", "B", "C"}));
  t1->add_option("--shares", shares, "route 1 and 2 shares without Road 3")->delimiter(',');
  t1->add_option("-o,--out", t1_out, "write the report JSON here");

  NetworkArgs gap_n, ue_n, routes_n;
  std::string flow_file;
  auto* gap = app.add_subcommand("gap", "relative gap of a route flow file");
  add_network_options(gap, gap_n);
  gap->add_option("--flows", flow_file, "lines: class route flow")->required();

  auto* ue = app.add_subcommand("ue", "solve the benchmark user equilibrium");
  add_network_options(ue, ue_n);
  std::string method = "msa";
  double tol = 1e-4;
  int max_iters = 1000;
  std::optional<double> vot;
  ue->add_option("--method", method, "msa | frank_wolfe | pairwise");
  ue->add_option("--tol", tol);
  ue->add_option("--max-iters", max_iters);
  ue->add_option("--vot", vot, "value of time; enables generalized cost with tolls");

  auto* routes = app.add_subcommand("routes", "enumerate k shortest free-flow routes");
  add_network_options(routes, routes_n);
  std::string routes_out;
  routes->add_option("-o,--out", routes_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = build_config(run_o);
      const auto seed = derive_seeds(cfg.seed, 1).front();
      return report_run(run_experiment(cfg, run_id_for(0), seed));
    }
    if (*ens) {
      const auto cfg = build_config(ens_o);
      try {
        const auto res = run_ensemble(cfg);
        for (std::size_t i = 0; i < res.runs.size(); ++i)
          fmt::print("{}: deviation {:.6g}\n", res.runs[i].run_id, res.summary.deviation_scores[i]);
        fmt::print("retained: {}\n", fmt::join(res.summary.retained, " "));
        for (std::size_t m = 0; m < res.summary.final_shares.size(); ++m) {
          std::vector<std::string> cells;
          for (const auto& st : res.summary.final_shares[m])
            cells.push_back(fmt::format("{:.3f} [{:.3f}, {:.3f}]", st.mean, st.lo, st.hi));
          fmt::print("class {} final shares: {}\n", m + 1, fmt::join(cells, "  "));
        }
        return 0;
      } catch (const EnsembleError& e) {
        fmt::print(stderr, "{}\n", e.what());
        return 1;
      }
    }
    if (*t1) {
      const char s = setting.front();
      if (shares.empty()) {
        auto def = table1_default_targets(s);
        if (!def) throw ConfigError(fmt::format("setting {} needs --shares", s));
        shares = *def;
      }
      const auto text = table1_to_json(table1_experiment(s, shares));
      if (!t1_out.empty()) {
        std::ofstream(t1_out) << text;
      }
      fmt::print("{}", text);
      return 0;
    }
    if (*gap) {
      const auto net = build_network(gap_n, true);
      const auto flows = parse_flow_file(slurp(flow_file), net);
      const auto rep = relative_gap(net, flows);
      fmt::print("relative_gap {}\ntotal_cost {}\n", rep.relative_gap, rep.total_cost);
      return 0;
    }
    if (*ue) {
      const auto net = build_network(ue_n, true);
      UeOptions o;
      o.method = parse_ue_method(method);
      o.tol = tol;
      o.max_iters = max_iters;
      if (vot) o.spec = GeneralizedCostSpec{*vot};
      const auto res = solve_ue(net, o);
      fmt::print("# method {} iterations {} converged {} relative_gap {}\n", to_string(o.method),
                 res.iterations, res.converged, res.gap);
      print_flows(res.flows);
      return res.converged ? 0 : 1;
    }
    if (*routes) {
      auto net = build_network(routes_n, false);
      std::vector<std::vector<Route>> sets;
      if (net.has_routes()) {
        for (const auto& c : net.classes()) sets.push_back(c.routes);
      } else {
        for (const auto& c : net.classes())
          sets.push_back(k_shortest_routes(net, c.origin, c.destination, routes_n.k));
      }
      const auto text = format_route_file(net.with_routes(sets));
      if (routes_out.empty())
        fmt::print("{}", text);
      else
        std::ofstream(routes_out) << text;
      return 0;
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
