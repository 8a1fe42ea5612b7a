#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace d2d {

// Option indices are 0-based internally; prompts show them 1-based.
using OptionSet = std::set<int>;

// Probability vector over a class's options. Entries are non-negative and sum
// to 1 within 1e-9.
class MixedStrategy {
 public:
  MixedStrategy() = default;
  explicit MixedStrategy(std::vector<double> probs);

  static MixedStrategy uniform(std::size_t n);
  static MixedStrategy pure(std::size_t n, std::size_t k);

  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t k) const { return probs_[k]; }

  bool operator==(const MixedStrategy&) const = default;

 private:
  std::vector<double> probs_;
};

// "[0.250000, 0.750000]"
std::string format_strategy(const MixedStrategy& p, int decimals = 6);

double l1_distance(const MixedStrategy& a, const MixedStrategy& b);

std::vector<double> flows_from_strategy(double demand, const MixedStrategy& p);

// Proportional shift toward the reinforced set. Throws DomainError when the
// set carries no probability mass.
MixedStrategy rule1_update(const MixedStrategy& p, const OptionSet& reinforced, double eta);

// Multiplicative weights with exponent eta on the reinforced set.
MixedStrategy rule2_update(const MixedStrategy& p, const OptionSet& reinforced, double eta);

enum class UpdateRule { rule1, rule2 };
UpdateRule parse_update_rule(std::string_view name);
std::string_view to_string(UpdateRule rule);
MixedStrategy apply_rule(UpdateRule rule, const MixedStrategy& p, const OptionSet& reinforced,
                         double eta);

std::vector<double> propensity_update(std::span<const double> q, const OptionSet& reinforced,
                                      double eta);
MixedStrategy softmax(std::span<const double> q);

struct StepSchedule {
  enum class Kind { harmonic, constant };
  Kind kind = Kind::harmonic;
  double eta0 = 0.5;
  int offset = 2;

  // eta0 * offset / (offset + t) for harmonic, eta0 for constant.
  double at(int t) const;
  void validate() const;
};

std::string_view to_string(StepSchedule::Kind kind);
StepSchedule::Kind parse_schedule_kind(std::string_view name);

}  // namespace d2d
