#include "d2d/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "d2d/errors.hpp"

namespace d2d {

namespace {

constexpr double kSumTol = 1e-9;
constexpr double kRenormTol = 1e-12;

void check_eta(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError(fmt::format("step size {} outside (0,1)", eta));
}

void check_set(const OptionSet& s, std::size_t n) {
  for (int k : s)
    if (k < 0 || k >= static_cast<int>(n))
      throw DomainError(fmt::format("option {} outside 1..{}", k + 1, n));
}

// Cancels floating-point drift; a residual larger than 1e-12 means a bug.
std::vector<double> renormalize(std::vector<double> p) {
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  if (std::abs(sum - 1.0) > kRenormTol)
    throw DomainError(fmt::format("update residual {} exceeds renormalization bound", sum - 1.0));
  if (sum != 1.0)
    for (auto& v : p) v /= sum;
  return p;
}

}  // namespace

MixedStrategy::MixedStrategy(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw DomainError("empty strategy");
  double sum = 0.0;
  for (double v : probs_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("strategy entry must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTol)
    throw DomainError(fmt::format("strategy sums to {}, not 1", sum));
}

MixedStrategy MixedStrategy::uniform(std::size_t n) {
  if (n == 0) throw DomainError("empty strategy");
  return MixedStrategy(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

MixedStrategy MixedStrategy::pure(std::size_t n, std::size_t k) {
  if (k >= n) throw DomainError("pure strategy index out of range");
  std::vector<double> p(n, 0.0);
  p[k] = 1.0;
  return MixedStrategy(std::move(p));
}

std::string format_strategy(const MixedStrategy& p, int decimals) {
  return fmt::format("[{:.{}f}]", fmt::join(p.probs(), ", "), decimals);
}

double l1_distance(const MixedStrategy& a, const MixedStrategy& b) {
  if (a.size() != b.size()) throw DomainError("strategy dimension mismatch");
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += std::abs(a[k] - b[k]);
  return d;
}

std::vector<double> flows_from_strategy(double demand, const MixedStrategy& p) {
  if (!(demand > 0.0)) throw DomainError("demand must be positive");
  std::vector<double> f(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) f[k] = demand * p[k];
  return f;
}

MixedStrategy rule1_update(const MixedStrategy& p, const OptionSet& reinforced, double eta) {
  check_eta(eta);
  if (reinforced.empty()) throw DomainError("empty reinforced set");
  check_set(reinforced, p.size());
  double s = 0.0;
  for (int k : reinforced) s += p[k];
  if (!(s > 0.0)) throw DomainError("reinforced options carry zero probability");
  const double s_next = (1.0 - eta) * s + eta;
  std::vector<double> out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k)
    out[k] = reinforced.count(static_cast<int>(k)) ? p[k] * s_next / s : (1.0 - eta) * p[k];
  return MixedStrategy(renormalize(std::move(out)));
}

MixedStrategy rule2_update(const MixedStrategy& p, const OptionSet& reinforced, double eta) {
  check_eta(eta);
  if (reinforced.empty()) throw DomainError("empty reinforced set");
  check_set(reinforced, p.size());
  const double boost = std::exp(eta);
  std::vector<double> w(p.size());
  double z = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    w[k] = reinforced.count(static_cast<int>(k)) ? p[k] * boost : p[k];
    z += w[k];
  }
  for (auto& v : w) v /= z;
  return MixedStrategy(renormalize(std::move(w)));
}

UpdateRule parse_update_rule(std::string_view name) {
  if (name == "rule1") return UpdateRule::rule1;
  if (name == "rule2") return UpdateRule::rule2;
  throw ConfigError(fmt::format("unknown update rule '{}'", name));
}

std::string_view to_string(UpdateRule rule) {
  return rule == UpdateRule::rule1 ? "rule1" : "rule2";
}

MixedStrategy apply_rule(UpdateRule rule, const MixedStrategy& p, const OptionSet& reinforced,
                         double eta) {
  return rule == UpdateRule::rule1 ? rule1_update(p, reinforced, eta)
                                   : rule2_update(p, reinforced, eta);
}

std::vector<double> propensity_update(std::span<const double> q, const OptionSet& reinforced,
                                      double eta) {
  check_eta(eta);
  check_set(reinforced, q.size());
  std::vector<double> out(q.begin(), q.end());
  for (int k : reinforced) out[k] += eta;
  return out;
}

MixedStrategy softmax(std::span<const double> q) {
  if (q.empty()) throw DomainError("empty propensity vector");
  const double mx = *std::max_element(q.begin(), q.end());
  std::vector<double> p(q.size());
  double z = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) z += (p[k] = std::exp(q[k] - mx));
  for (auto& v : p) v /= z;
  return MixedStrategy(std::move(p));
}

double StepSchedule::at(int t) const {
  if (t < 0) throw DomainError("negative day index");
  if (kind == Kind::constant) return eta0;
  const double eta = eta0 * offset / (offset + static_cast<double>(t));
  return std::clamp(eta, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
}

void StepSchedule::validate() const {
  if (!(eta0 > 0.0 && eta0 < 1.0)) throw ConfigError("eta0 must lie in (0,1)");
  if (offset < 1) throw ConfigError("schedule offset must be a positive integer");
}

std::string_view to_string(StepSchedule::Kind kind) {
  return kind == StepSchedule::Kind::harmonic ? "harmonic" : "constant";
}

StepSchedule::Kind parse_schedule_kind(std::string_view name) {
  if (name == "harmonic") return StepSchedule::Kind::harmonic;
  if (name == "constant") return StepSchedule::Kind::constant;
  throw ConfigError(fmt::format("unknown schedule kind '{}'", name));
}

}  // namespace d2d
