#include "d2d/mechanisms.hpp"

#include <algorithm>
#include <functional>
#include <future>

#include <fmt/format.h>

#include "d2d/assignment.hpp"
#include "d2d/errors.hpp"

namespace d2d {

namespace {

template <class T>
struct Answer {
  std::string reply;
  std::optional<T> value;
  std::vector<std::string> events;
};

// Sends history + prompts and parses the reply. Rejected replies get a
// corrective re-ask; those exchanges never enter the agent's history.
template <class T>
Answer<T> ask(const DialogHistory& history, const std::vector<std::string>& prompts,
              const std::function<T(const std::string&)>& parse, ReplyFormat format,
              int option_count, Kernel& kernel, const CallContext& ctx, int max_reasks) {
  DialogHistory convo = history;
  for (const auto& p : prompts) convo.push_back({Role::user, p});
  Answer<T> out;
  for (int attempt = 0;; ++attempt) {
    out.reply = kernel.complete(convo, ctx);
    try {
      out.value = parse(out.reply);
      return out;
    } catch (const ParseRejection& e) {
      out.events.push_back(fmt::format("parse_rejection: {}", e.diagnostic()));
      if (attempt >= max_reasks) return out;
      convo.push_back({Role::agent, out.reply});
      convo.push_back({Role::user, render_corrective_prompt(format, e.diagnostic(), option_count)});
    }
  }
}

int option_count_of(const AgentState& s) { return static_cast<int>(s.strategy.size()); }

}  // namespace

std::string_view to_string(InitMode mode) {
  return mode == InitMode::external_uniform ? "external_uniform" : "self_chosen";
}

InitMode parse_init_mode(std::string_view name) {
  if (name == "external_uniform" || name == "external") return InitMode::external_uniform;
  if (name == "self_chosen") return InitMode::self_chosen;
  throw ConfigError(fmt::format("unknown initialization '{}'", name));
}

std::string_view to_string(RunStatus status) {
  return status == RunStatus::completed ? "completed" : "failed";
}

RunStatus parse_run_status(std::string_view name) {
  if (name == "completed") return RunStatus::completed;
  if (name == "failed") return RunStatus::failed;
  throw ConfigError(fmt::format("unknown run status '{}'", name));
}

void MechanismConfig::validate() const {
  if ((kind == MechanismKind::guided_rl) != rule.has_value())
    throw ConfigError("an update rule is required for guided_rl and only for guided_rl");
  if (kind == MechanismKind::best_response && init == InitMode::self_chosen)
    throw ConfigError("best_response has no kernel to choose an initial strategy");
  if (max_reasks < 0) throw ConfigError("max_reasks must be non-negative");
  schedule.validate();
}

AgentState initialize_agent(const MechanismConfig& config, const PromptContext& prompt,
                            int class_id, Kernel* kernel, const CallContext& ctx,
                            std::vector<std::string>* events) {
  config.validate();
  AgentState s;
  s.class_id = class_id;
  const auto n = static_cast<std::size_t>(prompt.option_count);
  if (config.kind == MechanismKind::best_response) {
    s.strategy = MixedStrategy::uniform(n);
    return s;
  }
  s.history.push_back({Role::system, render_system_prompt(prompt, config.kind)});
  if (config.init == InitMode::external_uniform) {
    s.strategy = MixedStrategy::uniform(n);
    s.history.push_back({Role::user, render_initial_prompt(s.strategy)});
    return s;
  }
  if (!kernel) throw ConfigError("self-chosen initialization needs a kernel");
  const std::string question = render_initial_prompt(std::nullopt);
  auto ans = ask<MixedStrategy>(
      s.history, {question},
      [&](const std::string& r) { return parse_initial_strategy(r, prompt.option_count); },
      ReplyFormat::initial_strategy, prompt.option_count, *kernel, ctx, config.max_reasks);
  if (events) events->insert(events->end(), ans.events.begin(), ans.events.end());
  if (!ans.value)
    throw ParseRejection(fmt::format("class {}: no valid initial strategy after {} re-asks",
                                     class_id, config.max_reasks));
  s.strategy = *ans.value;
  s.history.push_back({Role::user, question});
  s.history.push_back({Role::agent, ans.reply});
  return s;
}

StepReport step_llm_baseline(AgentState& state, const std::string& feedback, Kernel& kernel,
                             const CallContext& ctx, int max_reasks) {
  const int n = option_count_of(state);
  const std::string question = render_baseline_prompt();
  auto ans = ask<MixedStrategy>(
      state.history, {feedback, question},
      [&](const std::string& r) { return parse_strategy(r, n); }, ReplyFormat::strategy, n, kernel,
      ctx, max_reasks);
  StepReport rep;
  rep.events = std::move(ans.events);
  if (ans.value)
    state.strategy = *ans.value;
  else
    rep.events.push_back("strategy unchanged");
  state.history.push_back({Role::user, feedback});
  state.history.push_back({Role::user, question});
  state.history.push_back({Role::agent, ans.reply});
  rep.messages_appended = 3;
  ++state.day;
  return rep;
}

StepReport step_llm_rl(AgentState& state, const std::string& feedback, Kernel& kernel,
                       const CallContext& ctx, int max_reasks) {
  const int n = option_count_of(state);
  const std::string positive = render_positive_prompt();
  StepReport rep;
  auto first = ask<OptionSet>(
      state.history, {feedback, positive},
      [&](const std::string& r) { return parse_reinforced_set(r, n, false); },
      ReplyFormat::reinforced_set, n, kernel, ctx, max_reasks);
  rep.events = std::move(first.events);
  rep.k_plus = first.value;

  DialogHistory with_first = state.history;
  with_first.push_back({Role::user, feedback});
  with_first.push_back({Role::user, positive});
  with_first.push_back({Role::agent, first.reply});

  const std::string revise = render_revise_prompt();
  auto second = ask<MixedStrategy>(
      with_first, {revise}, [&](const std::string& r) { return parse_strategy(r, n); },
      ReplyFormat::strategy, n, kernel, ctx, max_reasks);
  rep.events.insert(rep.events.end(), second.events.begin(), second.events.end());
  if (second.value)
    state.strategy = *second.value;
  else
    rep.events.push_back("strategy unchanged");

  state.history = std::move(with_first);
  state.history.push_back({Role::user, revise});
  state.history.push_back({Role::agent, second.reply});
  rep.messages_appended = 5;
  ++state.day;
  return rep;
}

StepReport step_guided_rl(AgentState& state, const std::string& feedback, UpdateRule rule,
                          double eta, Kernel& kernel, const CallContext& ctx, int max_reasks) {
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError(fmt::format("step size {} not in (0,1)", eta));
  const int n = option_count_of(state);
  const std::string positive = render_positive_prompt();
  auto parse = [&](const std::string& r) {
    OptionSet set = parse_reinforced_set(r, n, true);
    if (rule == UpdateRule::rule1 && !set.empty()) {
      double s = 0.0;
      for (int k : set) s += state.strategy[static_cast<std::size_t>(k)];
      if (s == 0.0)
        throw ParseRejection("the selected options currently have zero probability");
    }
    return set;
  };
  auto ans = ask<OptionSet>(state.history, {feedback, positive}, parse, ReplyFormat::reinforced_set,
                            n, kernel, ctx, max_reasks);
  StepReport rep;
  rep.events = std::move(ans.events);
  OptionSet k_plus;
  if (ans.value)
    k_plus = *ans.value;
  else
    rep.events.push_back("treated as no reinforced option");
  rep.k_plus = k_plus;

  state.history.push_back({Role::user, feedback});
  state.history.push_back({Role::user, positive});
  state.history.push_back({Role::agent, ans.reply});
  rep.messages_appended = 3;
  if (!k_plus.empty()) {
    state.strategy = apply_rule(rule, state.strategy, k_plus, eta);
    state.history.push_back({Role::user, render_revise_prompt()});
    state.history.push_back({Role::agent, render_update_confirmation(state.strategy)});
    rep.messages_appended = 5;
  }
  ++state.day;
  return rep;
}

StepReport step_best_response(AgentState& state, const std::vector<double>& costs, double eta) {
  if (costs.size() != state.strategy.size()) throw DomainError("cost vector size mismatch");
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError(fmt::format("step size {} not in (0,1)", eta));
  const auto best = static_cast<std::size_t>(
      std::min_element(costs.begin(), costs.end()) - costs.begin());
  std::vector<double> next(costs.size());
  for (std::size_t k = 0; k < next.size(); ++k)
    next[k] = (1.0 - eta) * state.strategy[k] + (k == best ? eta : 0.0);
  state.strategy = MixedStrategy(std::move(next));
  ++state.day;
  StepReport rep;
  rep.k_plus = OptionSet{static_cast<int>(best)};
  return rep;
}

RunRecord run_day_loop(const ScenarioSpec& scenario, const std::vector<MechanismConfig>& configs,
                       Kernel* kernel, const DayLoopOptions& options) {
  scenario.validate();
  if (options.days < 1) throw ConfigError("days must be at least 1");
  const std::size_t m_count = scenario.class_count();
  if (configs.size() != m_count)
    throw ConfigError(fmt::format("{} mechanism configs for {} classes", configs.size(), m_count));
  for (const auto& c : configs) {
    c.validate();
    if (c.kind != MechanismKind::best_response && !kernel)
      throw ConfigError(fmt::format("mechanism {} needs a kernel", to_string(c.kind)));
  }

  RunRecord rec;
  rec.run_id = options.run_id;
  rec.init_events.resize(m_count);
  std::vector<PromptContext> prompts;
  std::vector<AgentState> agents;
  try {
    for (std::size_t m = 0; m < m_count; ++m) {
      prompts.push_back(prompt_context(scenario, m, options.time_decimals));
      CallContext ctx{options.run_id, static_cast<int>(m), -1};
      agents.push_back(initialize_agent(configs[m], prompts[m], static_cast<int>(m), kernel, ctx,
                                        &rec.init_events[m]));
    }
  } catch (const KernelError& e) {
    rec.status = RunStatus::failed;
    rec.error = fmt::format("initialization: {}", e.what());
    return rec;
  } catch (const ParseRejection& e) {
    rec.status = RunStatus::failed;
    rec.error = fmt::format("initialization: {}", e.diagnostic());
    return rec;
  }

  for (int t = 0; t < options.days; ++t) {
    FlowProfile flows(m_count);
    for (std::size_t m = 0; m < m_count; ++m)
      flows[m] = flows_from_strategy(scenario.classes[m].demand, agents[m].strategy);
    const auto bundles = compute_experiences(scenario, flows);

    DayRecord day;
    day.day = t;
    if (scenario.kind == ScenarioKind::classic)
      day.gap = relative_gap(scenario.network, flows).relative_gap;
    day.classes.resize(m_count);

    auto step = [&](std::size_t m) {
      auto& agent = agents[m];
      const auto& cfg = configs[m];
      ClassDay& cd = day.classes[m];
      cd.strategy = agent.strategy;
      cd.flows = flows[m];
      for (const auto& o : bundles[m].options) {
        cd.cost_time.push_back(o.time);
        cd.cost_money.push_back(o.money);
      }
      cd.eta = cfg.schedule.at(t);
      const CallContext ctx{options.run_id, static_cast<int>(m), t};
      StepReport rep;
      switch (cfg.kind) {
        case MechanismKind::best_response:
          rep = step_best_response(agent, cd.cost_time, cd.eta);
          break;
        case MechanismKind::llm_baseline:
          rep = step_llm_baseline(agent, render_feedback_prompt(prompts[m], bundles[m]), *kernel, ctx,
                                  cfg.max_reasks);
          break;
        case MechanismKind::llm_rl:
          rep = step_llm_rl(agent, render_feedback_prompt(prompts[m], bundles[m]), *kernel, ctx,
                            cfg.max_reasks);
          break;
        case MechanismKind::guided_rl:
          rep = step_guided_rl(agent, render_feedback_prompt(prompts[m], bundles[m]), *cfg.rule,
                               cd.eta, *kernel, ctx, cfg.max_reasks);
          break;
      }
      cd.k_plus = rep.k_plus;
      cd.history_growth = rep.messages_appended;
      cd.events = std::move(rep.events);
    };

    try {
      if (options.parallel && m_count > 1) {
        std::vector<std::future<void>> tasks;
        for (std::size_t m = 0; m < m_count; ++m)
          tasks.push_back(std::async(std::launch::async, step, m));
        // Wait for every task before rethrowing so no step outlives the day.
        std::exception_ptr first;
        for (auto& f : tasks) {
          try {
            f.get();
          } catch (...) {
            if (!first) first = std::current_exception();
          }
        }
        if (first) std::rethrow_exception(first);
      } else {
        for (std::size_t m = 0; m < m_count; ++m) step(m);
      }
    } catch (const KernelError& e) {
      rec.status = RunStatus::failed;
      rec.error = fmt::format("day {}: {}", t, e.what());
      break;
    }
    rec.days.push_back(std::move(day));
  }
  // On failure a day may be half-stepped; report the strategies that produced
  // the last recorded day's successors only when the run completed.
  if (rec.status == RunStatus::completed)
    for (const auto& a : agents) rec.final_strategies.push_back(a.strategy);
  return rec;
}

}  // namespace d2d
