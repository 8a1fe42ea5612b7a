#include "d2d/dialog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>

#include <fmt/format.h>

#include "d2d/errors.hpp"
#include "templates.hpp"

namespace d2d {

namespace t = templates;
using fmt::arg;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::agent: return "agent";
  }
  return "?";
}

Role parse_role(std::string_view name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "agent" || name == "assistant") return Role::agent;
  throw ParseError(fmt::format("unknown role '{}'", name), 0);
}

std::string_view to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::llm_baseline: return "llm_baseline";
    case MechanismKind::llm_rl: return "llm_rl";
    case MechanismKind::guided_rl: return "guided_rl";
    case MechanismKind::best_response: return "best_response";
  }
  return "?";
}

MechanismKind parse_mechanism_kind(std::string_view name) {
  if (name == "llm_baseline") return MechanismKind::llm_baseline;
  if (name == "llm_rl") return MechanismKind::llm_rl;
  if (name == "guided_rl") return MechanismKind::guided_rl;
  if (name == "best_response") return MechanismKind::best_response;
  throw ConfigError(fmt::format("unknown mechanism '{}'", name));
}

namespace {

std::string money(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return fmt::format("{:.0f}", v);
  return fmt::format("{:.2f}", v);
}

std::string times_list(const FeedbackBundle& b, int decimals) {
  std::vector<double> v;
  for (const auto& o : b.options) v.push_back(o.time);
  return fmt::format("[{:.{}f}]", fmt::join(v, ", "), decimals);
}

const Segment& find_segment(const OptionExperience& o, std::string_view name) {
  for (const auto& s : o.segments)
    if (s.name == name) return s;
  throw DomainError(fmt::format("feedback lacks segment '{}'", name));
}

double find_money(const OptionExperience& o, std::string_view name) {
  for (const auto& m : o.money_items)
    if (m.name == name) return m.amount;
  throw DomainError(fmt::format("feedback lacks money item '{}'", name));
}

std::string crowding_text(const Crowding& c) {
  const double occ = c.occupancy();
  const char* bucket = occ <= 1.0 ? t::kCrowdingFree : occ <= 1.5 ? t::kCrowdingSome : t::kCrowdingHeavy;
  return fmt::format(t::kCrowdingShares, arg("bucket", bucket),
                     arg("seated", fmt::format("{:.0f}", 100.0 * c.seated_share())),
                     arg("standing", fmt::format("{:.0f}", 100.0 * c.standing_share())));
}

std::string extra_items(const PromptContext& ctx) {
  std::string extra;
  if (ctx.kind == ScenarioKind::tolling || ctx.kind == ScenarioKind::multimodal)
    extra += std::string("\n") + t::kBoundedRationality;
  if (ctx.kind == ScenarioKind::multimodal) extra += std::string("\n") + t::kMultiFactor;
  return extra;
}

std::string scenario_block(const PromptContext& ctx) {
  switch (ctx.kind) {
    case ScenarioKind::classic:
      return fmt::format(t::kClassicScenario, arg("n", ctx.option_count));
    case ScenarioKind::tolling: {
      if (static_cast<int>(ctx.tolls.size()) != ctx.option_count)
        throw DomainError("tolling prompt needs one toll per route");
      std::string s = fmt::format(t::kTollingScenarioHead, arg("n", ctx.option_count));
      bool tolled_seen = false;
      for (int k = 0; k < ctx.option_count; ++k) {
        s += '\n';
        const double toll = ctx.tolls[k];
        if (toll == 0.0) {
          s += fmt::format(t::kTollFreeRoute, arg("k", k + 1));
        } else {
          s += fmt::format(fmt::runtime(tolled_seen ? t::kNextTolledRoute : t::kFirstTolledRoute),
                           arg("k", k + 1), arg("toll", money(toll)));
          tolled_seen = true;
        }
      }
      return s + "\n" + t::kTollingScenarioTail;
    }
    case ScenarioKind::multimodal: {
      if (ctx.option_count != 3) throw DomainError("multimodal prompt needs exactly 3 options");
      const char* profile = ctx.income == IncomeClass::high     ? t::kHighIncome
                            : ctx.income == IncomeClass::middle ? t::kMiddleIncome
                                                                : t::kLowIncome;
      return fmt::format("{}\n{}\n{}", t::kMultimodalHead, profile, t::kMultimodalOptions);
    }
  }
  throw DomainError("unknown scenario kind");
}

}  // namespace

std::string PromptBundle::joined() const {
  return scenario_block + "\n\n" + strategy_block + "\n\n" + requirement_block;
}

PromptBundle render_prompt_bundle(const PromptContext& ctx, MechanismKind mechanism) {
  if (ctx.option_count < 1) throw DomainError("prompt needs at least one option");
  PromptBundle b;
  b.scenario_block = scenario_block(ctx);
  b.strategy_block = t::kStrategy;
  const auto extra = extra_items(ctx);
  switch (mechanism) {
    case MechanismKind::guided_rl:
      b.requirement_block = fmt::format(t::kRequirementGuided, arg("extra", extra));
      break;
    case MechanismKind::llm_rl:
      b.requirement_block = fmt::format(t::kRequirementRl, arg("extra", extra));
      break;
    case MechanismKind::llm_baseline:
      b.requirement_block = fmt::format(t::kRequirementBaseline, arg("extra", extra));
      break;
    case MechanismKind::best_response:
      throw DomainError("best_response has no dialog");
  }
  return b;
}

std::string render_system_prompt(const PromptContext& ctx, MechanismKind mechanism) {
  return render_prompt_bundle(ctx, mechanism).joined();
}

std::string render_initial_prompt(const std::optional<MixedStrategy>& external) {
  if (external) return fmt::format(t::kInitialExternal, arg("p", format_strategy(*external)));
  return t::kInitialSelf;
}

std::string render_feedback_prompt(const PromptContext& ctx, const FeedbackBundle& bundle) {
  if (static_cast<int>(bundle.options.size()) != ctx.option_count)
    throw DomainError(fmt::format("feedback covers {} options, class has {}",
                                  bundle.options.size(), ctx.option_count));
  if (bundle.kind != ctx.kind) throw DomainError("feedback kind does not match scenario");
  const int dec = ctx.time_decimals;
  switch (ctx.kind) {
    case ScenarioKind::classic:
      return fmt::format(t::kClassicFeedback, arg("n", ctx.option_count),
                         arg("costs", times_list(bundle, dec)));
    case ScenarioKind::tolling: {
      std::vector<std::string> parts;
      for (int k = 0; k < ctx.option_count; ++k) {
        const auto& o = bundle.options[k];
        std::string s = k == 0 ? fmt::format("Route 1 has a travel time of {:.{}f} minutes", o.time, dec)
                               : fmt::format("Route {} takes {:.{}f} minutes", k + 1, o.time, dec);
        s += o.money == 0.0 ? std::string(" and is toll-free")
                            : fmt::format(" with a toll fee of {} HKD", money(o.money));
        parts.push_back(std::move(s));
      }
      std::string body;
      if (parts.size() == 1) {
        body = parts[0];
      } else if (parts.size() == 2) {
        body = parts[0] + " and " + parts[1];
      } else {
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) body += parts[i] + ", ";
        body += "and " + parts.back();
      }
      return "Today, " + body + ".";
    }
    case ScenarioKind::multimodal: {
      const auto& transit = bundle.options.at(0);
      const auto& drive = bundle.options.at(1);
      const auto& pnr = bundle.options.at(2);
      if (transit.crowding.size() != 3 || pnr.crowding.size() != 1)
        throw DomainError("multimodal feedback lacks crowding legs");
      const double local = find_segment(drive, segment::local_roads).minutes;
      const double highway = find_segment(drive, segment::highway).minutes;
      auto m = [dec](double v) { return fmt::format("{:.{}f}", v, dec); };
      return fmt::format(
          t::kMultimodalFeedback, arg("bus", crowding_text(transit.crowding[0])),
          arg("line1", crowding_text(transit.crowding[1])),
          arg("line2", crowding_text(transit.crowding[2])),
          arg("transit_money", money(transit.money)), arg("drive_total", m(local + highway)),
          arg("highway", m(highway)), arg("ratio", fmt::format("{:.2f}", drive.highway_ratio)),
          arg("parking", money(find_money(drive, "parking"))),
          arg("fuel", money(find_money(drive, "fuel"))),
          arg("pnr_drive", m(find_segment(pnr, segment::access_drive).minutes)),
          arg("pnr_parking", money(find_money(pnr, "parking"))),
          arg("pnr_line", crowding_text(pnr.crowding[0])),
          arg("pnr_fuel", money(find_money(pnr, "fuel"))),
          arg("pnr_fare", money(find_money(pnr, "fare"))));
    }
  }
  throw DomainError("unknown scenario kind");
}

std::string render_positive_prompt() { return t::kPositive; }
std::string render_revise_prompt() { return t::kRevise; }
std::string render_baseline_prompt() { return t::kBaseline; }

std::string render_update_confirmation(const MixedStrategy& p) {
  return fmt::format(t::kConfirmation, arg("p", format_strategy(p)));
}

std::string render_corrective_prompt(ReplyFormat format, const std::string& diagnostic,
                                     int option_count) {
  const char* f = format == ReplyFormat::reinforced_set ? t::kFormatReinforced
                  : format == ReplyFormat::strategy     ? t::kFormatStrategy
                                                        : t::kFormatInitial;
  return fmt::format(t::kCorrective, arg("diag", diagnostic),
                     arg("format", fmt::format(fmt::runtime(f), arg("n", option_count))));
}

// ---- parsing ----

std::optional<std::string> last_result_segment(std::string_view text) {
  static constexpr std::string_view open = "<result>";
  static constexpr std::string_view close = "</result>";
  std::optional<std::string> last;
  std::size_t pos = 0;
  while (true) {
    auto a = text.find(open, pos);
    if (a == std::string_view::npos) break;
    auto b = text.find(close, a + open.size());
    if (b == std::string_view::npos) break;
    // An opening marker inside the candidate means the earlier one was not closed.
    auto inner = text.substr(a + open.size(), b - a - open.size());
    auto nested = inner.rfind(open);
    if (nested != std::string_view::npos) inner = inner.substr(nested + open.size());
    last = std::string(inner);
    pos = b + close.size();
  }
  return last;
}

namespace {

// Content between the last '[' and the ']' that follows it.
std::optional<std::string> last_bracket(std::string_view s) {
  auto close = s.rfind(']');
  if (close == std::string_view::npos) return std::nullopt;
  auto open = s.rfind('[', close);
  if (open == std::string_view::npos) return std::nullopt;
  return std::string(s.substr(open + 1, close - open - 1));
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto c = s.find(',', start);
    std::string item = s.substr(start, c == std::string::npos ? std::string::npos : c - start);
    auto b = item.find_first_not_of(" \t\r\n");
    auto e = item.find_last_not_of(" \t\r\n");
    out.push_back(b == std::string::npos ? std::string() : item.substr(b, e - b + 1));
    if (c == std::string::npos) break;
    start = c + 1;
  }
  return out;
}

bool contains_none(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  auto p = lower.find("none");
  if (p == std::string::npos) return false;
  auto isword = [&](std::size_t i) {
    return i < lower.size() && (std::isalnum(static_cast<unsigned char>(lower[i])) || lower[i] == '_');
  };
  return !(p > 0 && isword(p - 1)) && !isword(p + 4);
}

// Euclidean projection: one common shift, clipped at zero. Unlike scaling it
// moves no entry by more than the shift, which keeps rounded serializations
// within half a unit in the last place plus sum error / n.
std::vector<double> project_to_simplex(std::vector<double> p) {
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cum = 0.0, tau = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cum += sorted[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - t > 0.0) tau = t;
  }
  for (auto& v : p) v = std::max(v - tau, 0.0);
  return p;
}

MixedStrategy parse_vector(const std::string& body, int option_count) {
  auto items = split_commas(body);
  if (static_cast<int>(items.size()) != option_count)
    throw ParseRejection(
        fmt::format("expected {} probabilities, found {}", option_count, items.size()));
  std::vector<double> p;
  double sum = 0.0;
  for (const auto& it : items) {
    char* end = nullptr;
    double v = std::strtod(it.c_str(), &end);
    std::string rest(end);
    if (it.empty() || (rest != "" && rest != "%"))
      throw ParseRejection(fmt::format("'{}' is not a probability", it));
    if (rest == "%") v /= 100.0;
    if (!std::isfinite(v) || v < 0.0)
      throw ParseRejection(fmt::format("probability '{}' is negative or invalid", it));
    p.push_back(v);
    sum += v;
  }
  if (sum < 0.98 || sum > 1.02)
    throw ParseRejection(fmt::format("probabilities sum to {:.6g}, not 1", sum));
  return MixedStrategy(project_to_simplex(std::move(p)));
}

}  // namespace

OptionSet parse_reinforced_set(std::string_view text, int option_count, bool forbid_full_set) {
  auto seg = last_result_segment(text);
  if (!seg) throw ParseRejection("no <result> ... </result> segment found");
  auto body = last_bracket(*seg);
  OptionSet out;
  if (!body) {
    if (contains_none(*seg)) return out;
    throw ParseRejection("result segment lists neither options nor None");
  }
  auto items = split_commas(*body);
  if (items.size() == 1 && items[0].empty()) return out;
  for (const auto& it : items) {
    // Accepts "2", "Route 2", "Option 2": exactly one run of digits.
    std::vector<std::string> runs;
    for (std::size_t i = 0; i < it.size();) {
      if (!std::isdigit(static_cast<unsigned char>(it[i]))) { ++i; continue; }
      std::size_t j = i;
      while (j < it.size() && std::isdigit(static_cast<unsigned char>(it[j]))) ++j;
      runs.push_back(it.substr(i, j - i));
      i = j;
    }
    if (runs.size() != 1 || it.find('.') != std::string::npos || it.find('-') != std::string::npos)
      throw ParseRejection(fmt::format("'{}' is not an option number", it));
    const long k = std::strtol(runs[0].c_str(), nullptr, 10);
    if (k < 1 || k > option_count)
      throw ParseRejection(fmt::format("option {} is outside 1..{}", it, option_count));
    out.insert(static_cast<int>(k - 1));
  }
  if (forbid_full_set && static_cast<int>(out.size()) == option_count)
    throw ParseRejection("the probability of all options cannot be increased simultaneously");
  return out;
}

MixedStrategy parse_strategy(std::string_view text, int option_count) {
  auto seg = last_result_segment(text);
  if (!seg) throw ParseRejection("no <result> ... </result> segment found");
  auto body = last_bracket(*seg);
  if (!body) throw ParseRejection("result segment has no bracketed strategy");
  return parse_vector(*body, option_count);
}

MixedStrategy parse_initial_strategy(std::string_view text, int option_count) {
  if (auto seg = last_result_segment(text)) {
    if (auto body = last_bracket(*seg)) return parse_vector(*body, option_count);
  }
  auto body = last_bracket(text);
  if (!body) throw ParseRejection("no bracketed strategy found");
  return parse_vector(*body, option_count);
}

}  // namespace d2d
