#include "d2d/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

#include <fmt/format.h>

#include "d2d/errors.hpp"

#ifndef D2D_DEFAULT_DATA_DIR
#define D2D_DEFAULT_DATA_DIR "data"
#endif

namespace d2d {

namespace {

void validate_link(const Link& l) {
  if (!(l.free_flow_time > 0.0))
    throw StructuralError(fmt::format("link {}: free-flow time must be positive", l.id));
  if (!(l.capacity > 0.0))
    throw StructuralError(fmt::format("link {}: capacity must be positive", l.id));
  if (!(l.bpr_alpha >= 0.0))
    throw StructuralError(fmt::format("link {}: BPR alpha must be non-negative", l.id));
  if (!(l.bpr_beta >= 1.0))
    throw StructuralError(fmt::format("link {}: BPR beta must be at least 1", l.id));
  if (!(l.toll >= 0.0)) throw StructuralError(fmt::format("link {}: negative toll", l.id));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

double parse_number(std::string_view token, int line) {
  std::string s(token);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    throw ParseError(fmt::format("non-numeric field '{}'", s), line);
  return v;
}

int parse_node(std::string_view token, int line) {
  double v = parse_number(token, line);
  if (v != std::floor(v) || v < 1)
    throw ParseError(fmt::format("invalid node id '{}'", token), line);
  return static_cast<int>(v);
}

// Metadata block: "<KEY> value" lines up to "<END OF METADATA>". Returns the
// index of the first line after the block.
std::size_t read_metadata(const std::vector<std::string_view>& lines,
                          std::map<std::string, std::string>& meta) {
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty()) continue;
    if (line.front() != '<') {
      throw ParseError("expected metadata line starting with '<'", static_cast<int>(i + 1));
    }
    auto close = line.find('>');
    if (close == std::string_view::npos)
      throw ParseError("unterminated metadata tag", static_cast<int>(i + 1));
    std::string key(trim(line.substr(1, close - 1)));
    if (key == "END OF METADATA") return i + 1;
    meta[key] = std::string(trim(line.substr(close + 1)));
  }
  throw ParseError("missing <END OF METADATA>", 0);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool route_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

Network::Network(int node_count, std::vector<Link> links, std::vector<OdClass> classes)
    : node_count_(node_count), links_(std::move(links)), classes_(std::move(classes)) {
  validate();
}

void Network::validate() const {
  if (node_count_ < 0) throw StructuralError("negative node count");
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const auto& l = links_[i];
    if (l.id != static_cast<int>(i) + 1)
      throw StructuralError(fmt::format("link at position {} has id {}", i + 1, l.id));
    if (l.tail < 1 || l.tail > node_count_ || l.head < 1 || l.head > node_count_)
      throw StructuralError(fmt::format("link {} references an unknown node", l.id));
    validate_link(l);
  }
  for (const auto& c : classes_) {
    if (!(c.demand > 0.0))
      throw StructuralError(
          fmt::format("OD ({}, {}): demand must be positive", c.origin, c.destination));
    for (const auto& r : c.routes) {
      if (r.origin != c.origin || r.destination != c.destination)
        throw StructuralError("route endpoints do not match its OD pair");
      if (r.links.empty()) throw StructuralError("empty route");
      int at = r.origin;
      std::vector<int> seen;
      for (int id : r.links) {
        if (id < 1 || id > static_cast<int>(links_.size()))
          throw StructuralError(fmt::format("route references unknown link {}", id));
        const auto& l = links_[id - 1];
        if (l.tail != at)
          throw StructuralError(fmt::format("route is not connected at link {}", id));
        if (std::find(seen.begin(), seen.end(), id) != seen.end())
          throw StructuralError(fmt::format("route repeats link {}", id));
        seen.push_back(id);
        at = l.head;
      }
      if (at != r.destination) throw StructuralError("route does not reach its destination");
    }
  }
}

const Link& Network::link(int id) const {
  if (id < 1 || id > static_cast<int>(links_.size()))
    throw StructuralError(fmt::format("unknown link {}", id));
  return links_[id - 1];
}

bool Network::has_routes() const noexcept {
  return std::all_of(classes_.begin(), classes_.end(),
                     [](const OdClass& c) { return !c.routes.empty(); });
}

int Network::find_class(int origin, int destination) const {
  for (std::size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i].origin == origin && classes_[i].destination == destination)
      return static_cast<int>(i);
  return -1;
}

Network Network::with_routes(std::vector<std::vector<Route>> route_sets) const {
  if (route_sets.size() != classes_.size())
    throw StructuralError(fmt::format("{} route sets for {} classes", route_sets.size(),
                                      classes_.size()));
  auto classes = classes_;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (route_sets[i].empty())
      throw StructuralError(fmt::format("OD ({}, {}) has no route", classes[i].origin,
                                        classes[i].destination));
    classes[i].routes = std::move(route_sets[i]);
  }
  return Network(node_count_, links_, std::move(classes));
}

double link_travel_time(const Link& link, double flow) {
  if (flow < 0.0 || std::isnan(flow))
    throw DomainError(fmt::format("negative flow {} on link {}", flow, link.id));
  return link.free_flow_time *
         (1.0 + link.bpr_alpha * std::pow(flow / link.capacity, link.bpr_beta));
}

void check_feasible(const Network& network, const FlowProfile& flows) {
  const auto& classes = network.classes();
  if (flows.size() != classes.size())
    throw DomainError(fmt::format("flow profile has {} classes, network has {}", flows.size(),
                                  classes.size()));
  for (std::size_t m = 0; m < classes.size(); ++m) {
    if (classes[m].routes.empty())
      throw StructuralError(fmt::format("OD ({}, {}) has no route", classes[m].origin,
                                        classes[m].destination));
    if (flows[m].size() != classes[m].routes.size())
      throw DomainError(fmt::format("class {}: {} flows for {} routes", m, flows[m].size(),
                                    classes[m].routes.size()));
    double sum = 0.0;
    for (double f : flows[m]) {
      if (!(f >= 0.0)) throw DomainError(fmt::format("class {}: negative route flow", m));
      sum += f;
    }
    if (std::abs(sum - classes[m].demand) > 1e-9 * classes[m].demand)
      throw DomainError(
          fmt::format("class {}: flows sum to {} but demand is {}", m, sum, classes[m].demand));
  }
}

std::vector<double> load_link_flows(const Network& network, const FlowProfile& flows) {
  check_feasible(network, flows);
  std::vector<double> x(network.links().size(), 0.0);
  const auto& classes = network.classes();
  for (std::size_t m = 0; m < classes.size(); ++m) {
    for (std::size_t k = 0; k < classes[m].routes.size(); ++k) {
      const double f = flows[m][k];
      for (int id : classes[m].routes[k].links) x[network.link(id).id - 1] += f;
    }
  }
  return x;
}

std::vector<std::vector<double>> route_costs_from_link_costs(const Network& network,
                                                            std::span<const double> link_costs) {
  if (link_costs.size() != network.links().size())
    throw StructuralError("link cost vector size mismatch");
  std::vector<std::vector<double>> out;
  out.reserve(network.class_count());
  for (const auto& c : network.classes()) {
    std::vector<double> costs;
    costs.reserve(c.routes.size());
    for (const auto& r : c.routes) {
      double sum = 0.0;
      for (int id : r.links) sum += link_costs[id - 1];
      costs.push_back(sum);
    }
    out.push_back(std::move(costs));
  }
  return out;
}

std::vector<std::vector<double>> route_costs(const Network& network, const FlowProfile& flows) {
  const auto x = load_link_flows(network, flows);
  std::vector<double> t(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) t[a] = link_travel_time(network.links()[a], x[a]);
  return route_costs_from_link_costs(network, t);
}

Network load_tntp(std::string_view net_text, std::string_view trips_text) {
  const auto lines = split_lines(net_text);
  std::map<std::string, std::string> meta;
  std::size_t i = read_metadata(lines, meta);

  auto meta_int = [&](const std::string& key) -> int {
    auto it = meta.find(key);
    if (it == meta.end()) return -1;
    double v = parse_number(it->second, 0);
    if (v < 0 || v != std::floor(v)) throw ParseError("malformed header value for " + key, 0);
    return static_cast<int>(v);
  };
  const int nodes = meta_int("NUMBER OF NODES");
  if (nodes < 0) throw ParseError("missing <NUMBER OF NODES>", 0);
  const int declared_links = meta_int("NUMBER OF LINKS");

  std::vector<Link> links;
  for (; i < lines.size(); ++i) {
    const int lineno = static_cast<int>(i + 1);
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '~') continue;
    auto fields = split_fields(line);
    if (!fields.empty() && fields.back() == ";") fields.pop_back();
    if (!fields.empty() && fields.back().back() == ';') fields.back().remove_suffix(1);
    if (fields.size() < 7) throw ParseError("link row needs at least 7 columns", lineno);
    Link l;
    l.id = static_cast<int>(links.size()) + 1;
    l.tail = parse_node(fields[0], lineno);
    l.head = parse_node(fields[1], lineno);
    l.capacity = parse_number(fields[2], lineno);
    l.free_flow_time = parse_number(fields[4], lineno);
    l.bpr_alpha = parse_number(fields[5], lineno);
    l.bpr_beta = parse_number(fields[6], lineno);
    if (fields.size() > 8) l.toll = parse_number(fields[8], lineno);
    if (l.tail > nodes || l.head > nodes)
      throw ParseError(fmt::format("link references node beyond {}", nodes), lineno);
    try {
      validate_link(l);
    } catch (const StructuralError& e) {
      throw ParseError(e.what(), lineno);
    }
    links.push_back(l);
  }
  if (declared_links >= 0 && declared_links != static_cast<int>(links.size()))
    throw ParseError(fmt::format("header declares {} links, table has {}", declared_links,
                                 links.size()),
                     0);

  // Trips: "Origin o" blocks followed by "d : v;" entries.
  std::vector<OdClass> classes;
  if (!trim(trips_text).empty()) {
    const auto tl = split_lines(trips_text);
    std::map<std::string, std::string> tmeta;
    std::size_t j = read_metadata(tl, tmeta);
    int origin = -1;
    for (; j < tl.size(); ++j) {
      const int lineno = static_cast<int>(j + 1);
      auto line = trim(tl[j]);
      if (line.empty() || line.front() == '~') continue;
      if (line.substr(0, 6) == "Origin") {
        origin = parse_node(trim(line.substr(6)), lineno);
        if (origin > nodes) throw ParseError("origin beyond node count", lineno);
        continue;
      }
      if (origin < 0) throw ParseError("demand entry before any Origin line", lineno);
      std::string_view rest = line;
      while (!trim(rest).empty()) {
        auto semi = rest.find(';');
        auto entry = trim(rest.substr(0, semi));
        rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
        if (entry.empty()) continue;
        auto colon = entry.find(':');
        if (colon == std::string_view::npos) throw ParseError("expected 'dest : value'", lineno);
        int dest = parse_node(trim(entry.substr(0, colon)), lineno);
        double v = parse_number(trim(entry.substr(colon + 1)), lineno);
        if (dest > nodes) throw ParseError("destination beyond node count", lineno);
        if (v < 0) throw ParseError("negative demand", lineno);
        if (v > 0 && dest != origin) classes.push_back(OdClass{origin, dest, v, {}});
      }
    }
  }
  return Network(nodes, std::move(links), std::move(classes));
}

Network load_tntp_files(const std::filesystem::path& net_file,
                        const std::filesystem::path& trips_file) {
  return load_tntp(read_file(net_file), read_file(trips_file));
}

std::vector<Route> k_shortest_routes(const Network& network, int origin, int destination, int k) {
  if (k < 1) throw DomainError("k must be at least 1");
  const int n = network.node_count();
  if (origin < 1 || origin > n || destination < 1 || destination > n)
    throw StructuralError("unknown OD node");
  const auto& links = network.links();
  constexpr double inf = std::numeric_limits<double>::infinity();

  // Exact free-flow distance to the destination: an admissible bound for
  // best-first search over loopless partial paths.
  std::vector<double> to_dest(n + 1, inf);
  std::vector<std::vector<int>> in_links(n + 1), out_links(n + 1);
  for (const auto& l : links) {
    in_links[l.head].push_back(l.id);
    out_links[l.tail].push_back(l.id);
  }
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  to_dest[destination] = 0.0;
  pq.push({0.0, destination});
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > to_dest[v]) continue;
    for (int id : in_links[v]) {
      const auto& l = links[id - 1];
      double nd = d + l.free_flow_time;
      if (nd < to_dest[l.tail]) {
        to_dest[l.tail] = nd;
        pq.push({nd, l.tail});
      }
    }
  }

  struct Partial {
    double bound;
    double cost;
    int node;
    std::vector<int> links;
    std::vector<char> visited;
  };
  auto worse = [](const Partial& a, const Partial& b) {
    if (a.bound != b.bound) return a.bound > b.bound;
    return route_less(b.links, a.links);
  };
  std::priority_queue<Partial, std::vector<Partial>, decltype(worse)> open(worse);
  std::vector<Route> out;
  if (to_dest[origin] == inf || origin == destination) return out;
  {
    Partial start{to_dest[origin], 0.0, origin, {}, std::vector<char>(n + 1, 0)};
    start.visited[origin] = 1;
    open.push(std::move(start));
  }
  while (!open.empty() && static_cast<int>(out.size()) < k) {
    Partial p = open.top();
    open.pop();
    if (p.node == destination) {
      out.push_back(Route{origin, destination, p.links});
      continue;
    }
    for (int id : out_links[p.node]) {
      const auto& l = links[id - 1];
      if (p.visited[l.head] || to_dest[l.head] == inf) continue;
      Partial q{0.0, p.cost + l.free_flow_time, l.head, p.links, p.visited};
      q.bound = q.cost + to_dest[l.head];
      q.links.push_back(id);
      q.visited[l.head] = 1;
      open.push(std::move(q));
    }
  }
  return out;
}

std::vector<std::vector<Route>> parse_route_file(std::string_view text, const Network& network) {
  std::vector<std::vector<Route>> sets(network.class_count());
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int lineno = static_cast<int>(i + 1);
    auto line = trim(lines[i]);
    auto hash = line.find('#');
    if (hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() < 3) throw ParseError("route line needs origin, destination, links", lineno);
    Route r;
    r.origin = parse_node(fields[0], lineno);
    r.destination = parse_node(fields[1], lineno);
    for (std::size_t f = 2; f < fields.size(); ++f) {
      const int id = parse_node(fields[f], lineno);
      if (id > static_cast<int>(network.links().size()))
        throw ParseError(fmt::format("unknown link {}", id), lineno);
      r.links.push_back(id);
    }
    int m = network.find_class(r.origin, r.destination);
    if (m < 0)
      throw ParseError(fmt::format("no OD pair ({}, {})", r.origin, r.destination), lineno);
    sets[m].push_back(std::move(r));
  }
  return sets;
}

std::string format_route_file(const Network& network) {
  std::string out;
  for (const auto& c : network.classes()) {
    for (const auto& r : c.routes) {
      out += fmt::format("{} {}", r.origin, r.destination);
      for (int id : r.links) out += fmt::format(" {}", id);
      out += '\n';
    }
  }
  return out;
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("D2D_DATA_DIR"); env && *env) return env;
  return D2D_DEFAULT_DATA_DIR;
}

namespace {

Network tolling_network(char setting, bool with_road3) {
  std::vector<Link> links{
      {1, 1, 2, 45.0, 8.0, 0.15, 4.0, 0.0},
      {2, 1, 2, 30.0, 8.0, 0.15, 4.0, 30.0},
      {3, 1, 2, 37.0, 8.0, 0.15, 4.0, 34.0},
  };
  if (setting == 'B') links[1].capacity = 4.0;
  if (setting == 'C') links[0].free_flow_time = 40.0;
  if (!with_road3) links.pop_back();
  std::vector<Route> routes;
  for (const auto& l : links) routes.push_back(Route{1, 2, {l.id}});
  return Network(2, std::move(links), {OdClass{1, 2, 10.0, std::move(routes)}});
}

Network classic_network(const std::string& stem, int k) {
  const auto dir = data_dir() / "networks";
  auto net = load_tntp_files(dir / (stem + "_net.tntp"), dir / (stem + "_trips.tntp"));
  std::vector<std::vector<Route>> sets;
  for (const auto& c : net.classes())
    sets.push_back(k_shortest_routes(net, c.origin, c.destination, k));
  return net.with_routes(std::move(sets));
}

}  // namespace

Network builtin_network(std::string_view name) {
  if (name == "3n4l") return classic_network("3n4l", 64);
  if (name == "hearn") return classic_network("hearn", 5);
  if (name == "sioux_falls") {
    const auto dir = data_dir() / "networks";
    auto net = load_tntp_files(dir / "SiouxFalls_net.tntp", dir / "SiouxFalls_trips.tntp");
    return net.with_routes(parse_route_file(read_file(dir / "SiouxFalls_routes.txt"), net));
  }
  if (name == "multimodal") {
    // Road segments (1,3) local roads, (3,10) highway, (1,8) park-and-ride access.
    return Network(11,
                   {{1, 1, 3, 5.0, 8.0, 0.15, 4.0, 0.0},
                    {2, 3, 10, 25.0, 10.0, 0.15, 4.0, 0.0},
                    {3, 1, 8, 15.0, 12.0, 0.15, 4.0, 0.0}},
                   {});
  }
  for (char s : {'A', 'B', 'C'}) {
    if (name == fmt::format("tolling_{}_with3", s)) return tolling_network(s, true);
    if (name == fmt::format("tolling_{}_without3", s)) return tolling_network(s, false);
  }
  throw StructuralError(fmt::format("unknown built-in network '{}'", name));
}

std::vector<std::string> builtin_network_names() {
  std::vector<std::string> names{"3n4l", "hearn", "sioux_falls", "multimodal"};
  for (char s : {'A', 'B', 'C'}) {
    names.push_back(fmt::format("tolling_{}_with3", s));
    names.push_back(fmt::format("tolling_{}_without3", s));
  }
  return names;
}

}  // namespace d2d
