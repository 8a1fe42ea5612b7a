#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace d2d {

// Directed link with a BPR travel-time function. Ids are 1-based and equal
// to the link's position in Network::links() plus one.
struct Link {
  int id = 0;
  int tail = 0;
  int head = 0;
  double free_flow_time = 0.0;  // minutes
  double capacity = 0.0;        // flow units
  double bpr_alpha = 0.15;
  double bpr_beta = 4.0;
  double toll = 0.0;  // currency units
};

struct Route {
  int origin = 0;
  int destination = 0;
  std::vector<int> links;  // ordered link ids

  bool operator==(const Route&) const = default;
};

// One traveler class on an OD pair: the demand d_m and its option set K_m.
struct OdClass {
  int origin = 0;
  int destination = 0;
  double demand = 0.0;
  std::vector<Route> routes;
};

// Route flows per class, indexed [class][route].
using FlowProfile = std::vector<std::vector<double>>;

// Immutable after construction. A network may carry OD demands without
// route sets (freshly parsed TNTP data); every operation that touches route
// flows requires each class to have at least one route.
class Network {
 public:
  Network() = default;
  Network(int node_count, std::vector<Link> links, std::vector<OdClass> classes);

  int node_count() const noexcept { return node_count_; }
  const std::vector<Link>& links() const noexcept { return links_; }
  const Link& link(int id) const;
  const std::vector<OdClass>& classes() const noexcept { return classes_; }
  std::size_t class_count() const noexcept { return classes_.size(); }
  bool has_routes() const noexcept;

  // Index of the class serving (origin, destination), or -1.
  int find_class(int origin, int destination) const;

  // Copy of this network with route sets installed, one vector per class.
  Network with_routes(std::vector<std::vector<Route>> route_sets) const;

 private:
  void validate() const;

  int node_count_ = 0;
  std::vector<Link> links_;
  std::vector<OdClass> classes_;
};

double link_travel_time(const Link& link, double flow);

// Throws DomainError unless every class has one non-negative flow per route
// summing to its demand (1e-9 relative).
void check_feasible(const Network& network, const FlowProfile& flows);

std::vector<double> load_link_flows(const Network& network, const FlowProfile& flows);

// c_{m,k} = sum over the route's links of `link_costs[id - 1]`.
std::vector<std::vector<double>> route_costs_from_link_costs(const Network& network,
                                                            std::span<const double> link_costs);

// Travel-time route costs at the given flows.
std::vector<std::vector<double>> route_costs(const Network& network, const FlowProfile& flows);

// TNTP network + trips tables. Zero-demand pairs are dropped and the
// resulting classes carry no routes.
Network load_tntp(std::string_view net_text, std::string_view trips_text);
Network load_tntp_files(const std::filesystem::path& net_file,
                        const std::filesystem::path& trips_file);

// k loopless routes with the smallest free-flow time, ties broken by the
// lexicographic link-id sequence. Returns fewer when fewer exist.
std::vector<Route> k_shortest_routes(const Network& network, int origin, int destination, int k);

// Route-set text format: one route per line, "origin destination id id ...";
// '#' starts a comment.
std::vector<std::vector<Route>> parse_route_file(std::string_view text, const Network& network);
std::string format_route_file(const Network& network);

std::filesystem::path data_dir();

// Built-in instances: 3n4l, hearn, sioux_falls, tolling_{A,B,C}_{with3,without3},
// multimodal (road links only, no classes).
Network builtin_network(std::string_view name);
std::vector<std::string> builtin_network_names();

}  // namespace d2d
