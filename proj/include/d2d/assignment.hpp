#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "d2d/network.hpp"

namespace d2d {

using RouteCosts = std::vector<std::vector<double>>;

struct GapReport {
  double relative_gap = 0.0;
  double total_cost = 0.0;           // <c(f), f>
  std::vector<double> od_min_costs;  // per class
  FlowProfile aon_profile;
};

// Route cost = vot_lambda * time + toll.
struct GeneralizedCostSpec {
  double vot_lambda = 1.0;
};

// Entire demand of each class on its cheapest route; ties go to the lowest index.
FlowProfile all_or_nothing(const Network& network, const RouteCosts& costs);

// Relative gap of `flows` against the given route costs.
GapReport gap_report(const Network& network, const FlowProfile& flows, const RouteCosts& costs);

// Relative gap with plain travel-time costs.
GapReport relative_gap(const Network& network, const FlowProfile& flows);

// Per-route toll sums.
RouteCosts route_tolls(const Network& network);

// Travel time, or lambda * time + toll when a spec is given.
RouteCosts generalized_route_costs(const Network& network, const FlowProfile& flows,
                                   const std::optional<GeneralizedCostSpec>& spec);

enum class UeMethod {
  msa,          // f <- (1 - eta) f + eta * aon, eta = 1/(t+2)
  frank_wolfe,  // same direction, exact line search on the Beckmann objective
  pairwise,     // per-class shift from the costliest used route to the cheapest
};

UeMethod parse_ue_method(std::string_view name);
std::string_view to_string(UeMethod method);

struct UeOptions {
  int max_iters = 1000;
  double tol = 1e-4;
  UeMethod method = UeMethod::msa;
  std::optional<GeneralizedCostSpec> spec;
  std::optional<FlowProfile> initial;  // uniform split when absent
};

struct UeResult {
  FlowProfile flows;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Non-convergence is reported through `converged`, not thrown.
UeResult solve_ue(const Network& network, const UeOptions& options = {});

// Value of time that makes the two routes of a single-class instance
// indifferent at flows d * shares.
double calibrate_vot(const Network& network, std::span<const double> target_shares);

}  // namespace d2d
