#include "d2d/scenarios.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "d2d/assignment.hpp"
#include "d2d/errors.hpp"
#include "json.hpp"

namespace d2d {

using nlohmann::json;

namespace {

// Fixed transit segment times, minutes.
constexpr double kWalkToBus = 10, kBusWait = 3, kBusRide = 10, kBusToMetro = 5, kLine1 = 13,
                 kLineTransfer = 4, kLine2 = 10, kFinalWalk = 3, kParkWalk = 3, kPnrWalkWait = 3;

std::vector<ClassSpec> classes_from_network(const Network& net) {
  std::vector<ClassSpec> out;
  for (const auto& c : net.classes())
    out.push_back(ClassSpec{c.demand, static_cast<int>(c.routes.size()), IncomeClass::middle});
  return out;
}

ScenarioSpec network_scenario(std::string name, ScenarioKind kind, Network net) {
  ScenarioSpec s;
  s.name = std::move(name);
  s.kind = kind;
  s.classes = classes_from_network(net);
  s.network = std::move(net);
  return s;
}

ScenarioSpec multimodal_scenario() {
  ScenarioSpec s;
  s.name = "multimodal";
  s.kind = ScenarioKind::multimodal;
  s.network = builtin_network("multimodal");
  s.classes = {{7.5, 3, IncomeClass::high}, {15.0, 3, IncomeClass::middle}, {7.5, 3, IncomeClass::low}};
  return s;
}

IncomeClass parse_income(const std::string& s) {
  if (s == "high") return IncomeClass::high;
  if (s == "middle") return IncomeClass::middle;
  if (s == "low") return IncomeClass::low;
  throw ConfigError(fmt::format("unknown income class '{}'", s));
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void ScenarioSpec::validate() const {
  if (classes.empty()) throw ConfigError(fmt::format("scenario '{}' has no classes", name));
  for (const auto& c : classes) {
    if (!(c.demand > 0.0)) throw ConfigError("class demand must be positive");
    if (c.option_count < 1) throw ConfigError("class needs at least one option");
  }
  if (kind == ScenarioKind::multimodal) {
    for (const auto& c : classes)
      if (c.option_count != 3) throw ConfigError("multimodal classes have exactly 3 options");
    for (int id : {multimodal.local_link, multimodal.highway_link, multimodal.access_link})
      network.link(id);
    for (double seats : {multimodal.bus_seats, multimodal.line1_seats, multimodal.line2_seats})
      if (!(seats > 0.0)) throw ConfigError("seat capacities must be positive");
  } else {
    if (classes.size() != network.class_count())
      throw ConfigError("scenario classes do not match network OD pairs");
    if (!network.has_routes()) throw ConfigError("every OD pair needs a route set");
  }
}

void check_scenario_flows(const ScenarioSpec& spec, const FlowProfile& flows) {
  if (spec.kind != ScenarioKind::multimodal) {
    check_feasible(spec.network, flows);
    return;
  }
  if (flows.size() != spec.classes.size()) throw DomainError("flow profile class count mismatch");
  for (std::size_t m = 0; m < flows.size(); ++m) {
    if (static_cast<int>(flows[m].size()) != spec.classes[m].option_count)
      throw DomainError(fmt::format("class {}: flow vector size mismatch", m));
    double sum = 0.0;
    for (double f : flows[m]) {
      if (!(f >= 0.0)) throw DomainError(fmt::format("class {}: negative flow", m));
      sum += f;
    }
    if (std::abs(sum - spec.classes[m].demand) > 1e-9 * spec.classes[m].demand)
      throw DomainError(fmt::format("class {}: flows do not sum to demand", m));
  }
}

std::vector<FeedbackBundle> compute_experiences(const ScenarioSpec& spec, const FlowProfile& flows) {
  check_scenario_flows(spec, flows);
  std::vector<FeedbackBundle> out;
  switch (spec.kind) {
    case ScenarioKind::classic:
    case ScenarioKind::tolling: {
      const auto times = route_costs(spec.network, flows);
      std::vector<double> link_tolls;
      for (const auto& l : spec.network.links()) link_tolls.push_back(l.toll);
      const auto tolls = route_costs_from_link_costs(spec.network, link_tolls);
      for (std::size_t m = 0; m < times.size(); ++m) {
        FeedbackBundle b;
        b.kind = spec.kind;
        for (std::size_t k = 0; k < times[m].size(); ++k) {
          OptionExperience o;
          o.time = times[m][k];
          o.money = tolls[m][k];
          if (o.money > 0.0) o.money_items.push_back({"toll", o.money});
          b.options.push_back(std::move(o));
        }
        out.push_back(std::move(b));
      }
      return out;
    }
    case ScenarioKind::multimodal: {
      const auto& mp = spec.multimodal;
      double transit = 0.0, driving = 0.0, pnr = 0.0;
      for (const auto& f : flows) {
        transit += f[0];
        driving += f[1];
        pnr += f[2];
      }
      const auto& local = spec.network.link(mp.local_link);
      const auto& highway = spec.network.link(mp.highway_link);
      const auto& access = spec.network.link(mp.access_link);
      const double t_local = link_travel_time(local, driving);
      const double t_highway = link_travel_time(highway, driving);
      const double t_access = link_travel_time(access, pnr);

      OptionExperience tr;
      tr.segments = {{"walk to bus stop", kWalkToBus}, {"bus wait", kBusWait},
                     {"bus ride", kBusRide},           {"transfer to metro", kBusToMetro},
                     {"metro line 1", kLine1},         {"line transfer", kLineTransfer},
                     {"metro line 2", kLine2},         {"walk to work", kFinalWalk}};
      tr.money_items = {{"fare", mp.transit_fare}};
      tr.crowding = {{transit, mp.bus_seats}, {transit, mp.line1_seats}, {transit + pnr, mp.line2_seats}};

      OptionExperience dr;
      dr.segments = {{std::string(segment::local_roads), t_local},
                     {std::string(segment::highway), t_highway},
                     {"walk from parking", kParkWalk}};
      dr.money_items = {{"fuel", mp.drive_fuel}, {"parking", mp.drive_parking}};
      dr.highway_ratio = t_highway / highway.free_flow_time;

      OptionExperience pr;
      pr.segments = {{std::string(segment::access_drive), t_access},
                     {"walk and wait", kPnrWalkWait},
                     {"metro line 2", kLine2},
                     {"walk to work", kFinalWalk}};
      pr.money_items = {{"fuel", mp.pnr_fuel}, {"parking", mp.pnr_parking}, {"fare", mp.pnr_fare}};
      pr.crowding = {{transit + pnr, mp.line2_seats}};

      for (auto* o : {&tr, &dr, &pr}) {
        o->time = 0.0;
        for (const auto& s : o->segments) o->time += s.minutes;
        o->money = 0.0;
        for (const auto& mi : o->money_items) o->money += mi.amount;
      }
      FeedbackBundle b;
      b.kind = ScenarioKind::multimodal;
      b.options = {tr, dr, pr};
      out.assign(spec.classes.size(), b);
      return out;
    }
  }
  throw DomainError("unknown scenario kind");
}

PromptContext prompt_context(const ScenarioSpec& spec, std::size_t class_id, int time_decimals) {
  if (class_id >= spec.classes.size()) throw DomainError("class index out of range");
  PromptContext ctx;
  ctx.kind = spec.kind;
  ctx.option_count = spec.classes[class_id].option_count;
  ctx.income = spec.classes[class_id].income;
  ctx.time_decimals = time_decimals;
  if (spec.kind == ScenarioKind::tolling) ctx.tolls = route_tolls(spec.network)[class_id];
  return ctx;
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> names{"classic_3n4l", "classic_hearn", "classic_sioux_falls"};
  for (char s : {'A', 'B', 'C'})
    for (const char* v : {"with3", "without3"}) names.push_back(fmt::format("tolling_{}_{}", s, v));
  names.push_back("multimodal");
  return names;
}

ScenarioSpec scenario_by_name(std::string_view name) {
  if (name == "multimodal") return multimodal_scenario();
  if (name.substr(0, 8) == "classic_")
    return network_scenario(std::string(name), ScenarioKind::classic,
                            builtin_network(name.substr(8)));
  if (name.substr(0, 8) == "tolling_")
    return network_scenario(std::string(name), ScenarioKind::tolling, builtin_network(name));
  throw ConfigError(fmt::format("unknown scenario '{}'", name));
}

std::vector<ScenarioSpec> scenario_catalog() {
  std::vector<ScenarioSpec> out;
  for (const auto& n : scenario_names()) out.push_back(scenario_by_name(n));
  return out;
}

ScenarioSpec scenario_from_json(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario description is not valid JSON: ") + e.what());
  }
  try {
    if (j.is_string()) return scenario_by_name(j.get<std::string>());
    const auto kind_name = j.at("kind").get<std::string>();
    const auto name = j.value("name", std::string("custom"));
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_absolute() ? path : base_dir / path;
    };
    ScenarioSpec s;
    if (kind_name == "classic") {
      const auto& nj = j.at("network");
      Network net;
      if (nj.is_string()) {
        net = builtin_network(nj.get<std::string>());
      } else {
        net = load_tntp_files(resolve(nj.at("net").get<std::string>()),
                              resolve(nj.at("trips").get<std::string>()));
        std::vector<std::vector<Route>> sets;
        if (nj.contains("routes")) {
          sets = parse_route_file(read_text(resolve(nj.at("routes").get<std::string>())), net);
        } else {
          const int k = nj.value("k", 5);
          for (const auto& c : net.classes())
            sets.push_back(k_shortest_routes(net, c.origin, c.destination, k));
        }
        net = net.with_routes(std::move(sets));
      }
      s = network_scenario(name, ScenarioKind::classic, std::move(net));
    } else if (kind_name == "tolling") {
      std::vector<Link> links;
      std::vector<Route> routes;
      for (const auto& rj : j.at("routes")) {
        Link l;
        l.id = static_cast<int>(links.size()) + 1;
        l.tail = 1;
        l.head = 2;
        l.free_flow_time = rj.at("free_flow_time").get<double>();
        l.capacity = rj.at("capacity").get<double>();
        l.toll = rj.value("toll", 0.0);
        l.bpr_alpha = rj.value("bpr_alpha", 0.15);
        l.bpr_beta = rj.value("bpr_beta", 4.0);
        routes.push_back(Route{1, 2, {l.id}});
        links.push_back(l);
      }
      Network net(2, std::move(links), {OdClass{1, 2, j.value("demand", 10.0), std::move(routes)}});
      s = network_scenario(name, ScenarioKind::tolling, std::move(net));
    } else if (kind_name == "multimodal") {
      s = multimodal_scenario();
      s.name = name;
      if (j.contains("classes")) {
        s.classes.clear();
        for (const auto& cj : j.at("classes"))
          s.classes.push_back(ClassSpec{cj.at("demand").get<double>(), 3,
                                        parse_income(cj.at("income").get<std::string>())});
      }
      if (j.contains("seats")) {
        const auto& sj = j.at("seats");
        s.multimodal.bus_seats = sj.value("bus", s.multimodal.bus_seats);
        s.multimodal.line1_seats = sj.value("line1", s.multimodal.line1_seats);
        s.multimodal.line2_seats = sj.value("line2", s.multimodal.line2_seats);
      }
    } else {
      throw ConfigError(fmt::format("unknown scenario kind '{}'", kind_name));
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad scenario description: ") + e.what());
  }
}

}  // namespace d2d
