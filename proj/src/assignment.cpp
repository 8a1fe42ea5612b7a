#include "d2d/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "d2d/errors.hpp"

namespace d2d {

namespace {

std::size_t argmin_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] < v[best]) best = k;
  return best;
}

double dot(const RouteCosts& c, const FlowProfile& f) {
  double s = 0.0;
  for (std::size_t m = 0; m < c.size(); ++m)
    for (std::size_t k = 0; k < c[m].size(); ++k) s += c[m][k] * f[m][k];
  return s;
}

FlowProfile uniform_flows(const Network& network) {
  FlowProfile f;
  for (const auto& c : network.classes()) {
    if (c.routes.empty())
      throw StructuralError(fmt::format("OD ({}, {}) has no route", c.origin, c.destination));
    f.emplace_back(c.routes.size(), c.demand / static_cast<double>(c.routes.size()));
  }
  return f;
}

// Per-link cost w * t_a(x) + toll_a, where w is lambda (generalized) or 1 and
// tolls only count under a generalized spec.
struct LinkCost {
  const Network& net;
  double weight = 1.0;
  bool tolls = false;

  double operator()(std::size_t a, double x) const {
    const auto& l = net.links()[a];
    return weight * link_travel_time(l, std::max(0.0, x)) + (tolls ? l.toll : 0.0);
  }
  double derivative(std::size_t a, double x) const {
    const auto& l = net.links()[a];
    x = std::max(0.0, x);
    if (x == 0.0 && l.bpr_beta > 1.0) return 0.0;
    return weight * l.free_flow_time * l.bpr_alpha * l.bpr_beta *
           std::pow(x / l.capacity, l.bpr_beta - 1.0) / l.capacity;
  }
};

LinkCost make_link_cost(const Network& network, const std::optional<GeneralizedCostSpec>& spec) {
  if (spec && !(spec->vot_lambda > 0.0)) throw DomainError("value of time must be positive");
  return LinkCost{network, spec ? spec->vot_lambda : 1.0, spec.has_value()};
}

RouteCosts costs_at(const Network& network, const LinkCost& lc, const std::vector<double>& x) {
  std::vector<double> c(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) c[a] = lc(a, x[a]);
  return route_costs_from_link_costs(network, c);
}

std::vector<double> link_delta(const Network& network, const FlowProfile& from,
                               const FlowProfile& to) {
  std::vector<double> d(network.links().size(), 0.0);
  const auto& classes = network.classes();
  for (std::size_t m = 0; m < classes.size(); ++m)
    for (std::size_t k = 0; k < classes[m].routes.size(); ++k) {
      const double df = to[m][k] - from[m][k];
      if (df != 0.0)
        for (int id : classes[m].routes[k].links) d[id - 1] += df;
    }
  return d;
}

// Exact line search for the Beckmann objective along x + alpha * dx.
double line_search(const LinkCost& lc, const std::vector<double>& x, const std::vector<double>& dx) {
  auto slope = [&](double alpha) {
    double s = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a)
      if (dx[a] != 0.0) s += lc(a, x[a] + alpha * dx[a]) * dx[a];
    return s;
  };
  if (slope(1.0) <= 0.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 100 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Moves flow from route l to route s of one class until their costs meet or
// route l empties. Updates f and x in place.
void equilibrate_pair(const LinkCost& lc, std::vector<double>& f,
                      std::vector<double>& x, const Route& rl, const Route& rs, std::size_t l,
                      std::size_t s) {
  std::vector<std::size_t> only_l, only_s;
  for (int id : rl.links)
    if (std::find(rs.links.begin(), rs.links.end(), id) == rs.links.end()) only_l.push_back(id - 1);
  for (int id : rs.links)
    if (std::find(rl.links.begin(), rl.links.end(), id) == rl.links.end()) only_s.push_back(id - 1);
  auto g = [&](double d) {
    double v = 0.0;
    for (auto a : only_l) v += lc(a, x[a] - d);
    for (auto a : only_s) v -= lc(a, x[a] + d);
    return v;
  };
  auto dg = [&](double d) {
    double v = 0.0;
    for (auto a : only_l) v -= lc.derivative(a, x[a] - d);
    for (auto a : only_s) v -= lc.derivative(a, x[a] + d);
    return v;
  };
  const double cap = f[l];
  double delta;
  if (g(cap) >= 0.0) {
    delta = cap;
  } else {
    double lo = 0.0, hi = cap, d = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double gv = g(d);
      if (gv > 0.0) lo = d; else hi = d;
      if (gv == 0.0 || hi - lo <= 1e-15 * std::max(1.0, cap)) break;
      const double slope = dg(d);
      double next = slope < 0.0 ? d - gv / slope : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      d = next;
    }
    delta = d;
  }
  f[l] -= delta;
  if (f[l] < 0.0 || delta == cap) f[l] = 0.0;
  f[s] += delta;
  for (auto a : only_l) x[a] = std::max(0.0, x[a] - delta);
  for (auto a : only_s) x[a] += delta;
}

std::vector<double> raw_link_flows(const Network& network, const FlowProfile& f) {
  std::vector<double> x(network.links().size(), 0.0);
  const auto& classes = network.classes();
  for (std::size_t m = 0; m < classes.size(); ++m)
    for (std::size_t k = 0; k < classes[m].routes.size(); ++k)
      for (int id : classes[m].routes[k].links) x[id - 1] += f[m][k];
  return x;
}

}  // namespace

FlowProfile all_or_nothing(const Network& network, const RouteCosts& costs) {
  const auto& classes = network.classes();
  if (costs.size() != classes.size()) throw StructuralError("cost vector does not cover classes");
  FlowProfile out;
  out.reserve(classes.size());
  for (std::size_t m = 0; m < classes.size(); ++m) {
    if (classes[m].routes.empty())
      throw StructuralError(fmt::format("OD ({}, {}) has no route", classes[m].origin,
                                        classes[m].destination));
    if (costs[m].size() != classes[m].routes.size())
      throw StructuralError(fmt::format("class {}: cost vector does not cover routes", m));
    std::vector<double> f(costs[m].size(), 0.0);
    f[argmin_lowest(costs[m])] = classes[m].demand;
    out.push_back(std::move(f));
  }
  return out;
}

GapReport gap_report(const Network& network, const FlowProfile& flows, const RouteCosts& costs) {
  check_feasible(network, flows);
  GapReport r;
  r.aon_profile = all_or_nothing(network, costs);
  r.total_cost = dot(costs, flows);
  if (!(r.total_cost > 0.0)) throw DomainError("total cost is zero");
  const double aon_cost = dot(costs, r.aon_profile);
  r.relative_gap = (r.total_cost - aon_cost) / r.total_cost;
  for (const auto& c : costs) r.od_min_costs.push_back(c[argmin_lowest(c)]);
  return r;
}

GapReport relative_gap(const Network& network, const FlowProfile& flows) {
  return gap_report(network, flows, route_costs(network, flows));
}

RouteCosts route_tolls(const Network& network) {
  std::vector<double> tolls;
  for (const auto& l : network.links()) tolls.push_back(l.toll);
  return route_costs_from_link_costs(network, tolls);
}

RouteCosts generalized_route_costs(const Network& network, const FlowProfile& flows,
                                   const std::optional<GeneralizedCostSpec>& spec) {
  auto time = route_costs(network, flows);
  if (!spec) return time;
  if (!(spec->vot_lambda > 0.0)) throw DomainError("value of time must be positive");
  const auto tolls = route_tolls(network);
  for (std::size_t m = 0; m < time.size(); ++m)
    for (std::size_t k = 0; k < time[m].size(); ++k)
      time[m][k] = spec->vot_lambda * time[m][k] + tolls[m][k];
  return time;
}

UeMethod parse_ue_method(std::string_view name) {
  if (name == "msa") return UeMethod::msa;
  if (name == "frank_wolfe" || name == "fw") return UeMethod::frank_wolfe;
  if (name == "pairwise") return UeMethod::pairwise;
  throw ConfigError(fmt::format("unknown UE method '{}'", name));
}

std::string_view to_string(UeMethod method) {
  switch (method) {
    case UeMethod::msa: return "msa";
    case UeMethod::frank_wolfe: return "frank_wolfe";
    case UeMethod::pairwise: return "pairwise";
  }
  return "?";
}

UeResult solve_ue(const Network& network, const UeOptions& options) {
  if (options.max_iters < 1) throw DomainError("max_iters must be at least 1");
  if (!(options.tol > 0.0)) throw DomainError("tol must be positive");
  const LinkCost lc = make_link_cost(network, options.spec);

  FlowProfile f = options.initial ? *options.initial : uniform_flows(network);
  check_feasible(network, f);

  UeResult best;
  best.gap = std::numeric_limits<double>::infinity();
  for (int it = 0;; ++it) {
    auto x = raw_link_flows(network, f);
    const auto costs = costs_at(network, lc, x);
    const auto rep = gap_report(network, f, costs);
    if (rep.relative_gap < best.gap) {
      best.flows = f;
      best.gap = rep.relative_gap;
      best.iterations = it;
    }
    if (rep.relative_gap <= options.tol) {
      best = UeResult{f, rep.relative_gap, it, true};
      return best;
    }
    if (it >= options.max_iters) break;

    switch (options.method) {
      case UeMethod::msa: {
        const double eta = 1.0 / (it + 2.0);
        for (std::size_t m = 0; m < f.size(); ++m)
          for (std::size_t k = 0; k < f[m].size(); ++k)
            f[m][k] = (1.0 - eta) * f[m][k] + eta * rep.aon_profile[m][k];
        break;
      }
      case UeMethod::frank_wolfe: {
        const auto dx = link_delta(network, f, rep.aon_profile);
        const double alpha = line_search(lc, x, dx);
        for (std::size_t m = 0; m < f.size(); ++m)
          for (std::size_t k = 0; k < f[m].size(); ++k)
            f[m][k] = (1.0 - alpha) * f[m][k] + alpha * rep.aon_profile[m][k];
        break;
      }
      case UeMethod::pairwise: {
        const auto& classes = network.classes();
        for (std::size_t m = 0; m < classes.size(); ++m) {
          const auto& routes = classes[m].routes;
          std::vector<double> c(routes.size());
          for (std::size_t k = 0; k < routes.size(); ++k) {
            double s = 0.0;
            for (int id : routes[k].links) s += lc(id - 1, x[id - 1]);
            c[k] = s;
          }
          const std::size_t s = argmin_lowest(c);
          std::size_t l = s;
          for (std::size_t k = 0; k < routes.size(); ++k)
            if (f[m][k] > 0.0 && (l == s || c[k] > c[l])) l = k;
          if (l == s || !(c[l] > c[s])) continue;
          equilibrate_pair(lc, f[m], x, routes[l], routes[s], l, s);
        }
        break;
      }
    }
  }
  best.converged = false;
  return best;
}

double calibrate_vot(const Network& network, std::span<const double> target_shares) {
  if (network.class_count() != 1 || network.classes()[0].routes.size() != 2)
    throw CalibrationError("calibration needs a single class with exactly two routes");
  if (target_shares.size() != 2) throw CalibrationError("calibration needs two target shares");
  for (double s : target_shares)
    if (!(s > 0.0 && s < 1.0)) throw CalibrationError("target shares must be strictly interior");
  if (std::abs(target_shares[0] + target_shares[1] - 1.0) > 1e-9)
    throw CalibrationError("target shares must sum to 1");
  const double d = network.classes()[0].demand;
  FlowProfile f{{d * target_shares[0], d * target_shares[1]}};
  f[0][1] = d - f[0][0];
  const auto t = route_costs(network, f)[0];
  const auto pi = route_tolls(network)[0];
  const double dt = t[0] - t[1];
  const double lambda = (pi[1] - pi[0]) / dt;
  if (!(dt != 0.0) || !std::isfinite(lambda) || !(lambda > 0.0))
    throw CalibrationError(fmt::format(
        "no positive value of time explains shares ({}, {})", target_shares[0], target_shares[1]));
  return lambda;
}

}  // namespace d2d
