#pragma once

// Reference computations written directly from the defining formulas. They
// share no code with the library so a library bug cannot hide in both.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

namespace oracle {

inline double bpr(double u0, double cap, double x) {
  const double r = x / cap;
  return u0 * (1.0 + 0.15 * r * r * r * r);
}

struct Arc {
  double u0, cap, toll;
};

// paths[m][k] lists 0-based arc indices.
using Paths = std::vector<std::vector<std::vector<int>>>;
using Flows = std::vector<std::vector<double>>;

inline std::vector<double> arc_flows(const std::vector<Arc>& arcs, const Paths& paths,
                                     const Flows& f) {
  std::vector<double> x(arcs.size(), 0.0);
  for (std::size_t m = 0; m < paths.size(); ++m)
    for (std::size_t k = 0; k < paths[m].size(); ++k)
      for (int a : paths[m][k]) x[static_cast<std::size_t>(a)] += f[m][k];
  return x;
}

inline Flows path_times(const std::vector<Arc>& arcs, const Paths& paths, const Flows& f) {
  const auto x = arc_flows(arcs, paths, f);
  Flows c(paths.size());
  for (std::size_t m = 0; m < paths.size(); ++m)
    for (const auto& p : paths[m]) {
      double s = 0.0;
      for (int a : p) s += bpr(arcs[a].u0, arcs[a].cap, x[a]);
      c[m].push_back(s);
    }
  return c;
}

// (sum c f - sum d * min c) / sum c f
inline double gap(const Flows& c, const Flows& f) {
  double tot = 0.0, best = 0.0;
  for (std::size_t m = 0; m < c.size(); ++m) {
    double d = 0.0;
    for (std::size_t k = 0; k < c[m].size(); ++k) {
      tot += c[m][k] * f[m][k];
      d += f[m][k];
    }
    best += d * *std::min_element(c[m].begin(), c[m].end());
  }
  return (tot - best) / tot;
}

// Rule 1 by hand: mass on K grows from s to s + eta (1 - s), split in
// proportion to current probabilities; everything else shrinks by (1 - eta).
inline std::vector<double> rule1(const std::vector<double>& p, const std::set<int>& K, double eta) {
  double s = 0.0;
  for (int k : K) s += p[static_cast<std::size_t>(k)];
  const double s_new = s + eta * (1.0 - s);
  std::vector<double> q(p.size());
  for (std::size_t k = 0; k < p.size(); ++k)
    q[k] = K.count(static_cast<int>(k)) ? p[k] * s_new / s : (1.0 - eta) * p[k];
  return q;
}

inline std::vector<double> rule2(const std::vector<double>& p, const std::set<int>& K, double eta) {
  std::vector<double> w(p.size());
  double z = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    w[k] = p[k] * (K.count(static_cast<int>(k)) ? std::exp(eta) : 1.0);
    z += w[k];
  }
  for (auto& v : w) v /= z;
  return w;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace oracle
