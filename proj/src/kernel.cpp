#include "d2d/kernel.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <regex>

#include <fmt/format.h>
#include "json.hpp"

#include "d2d/errors.hpp"

namespace d2d {

using nlohmann::json;

void KernelConfig::validate() const {
  if (max_retries < 0) throw ConfigError("kernel max_retries must be >= 0");
  if (!(timeout_seconds > 0.0)) throw ConfigError("kernel timeout must be positive");
  if (!(temperature >= 0.0)) throw ConfigError("kernel temperature must be >= 0");
  if (backoff_ms < 0) throw ConfigError("kernel backoff must be >= 0");
  if (endpoint.empty()) throw ConfigError("kernel endpoint is empty");
}

std::string request_hash(std::span<const Message> history) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& m : history) {
    mix(to_string(m.role));
    mix(std::string_view("\0", 1));
    mix(m.content);
    mix(std::string_view("\x1e", 1));
  }
  return fmt::format("{:016x}", h);
}

// ---- scripted kernels ----

namespace {

enum class Turn { initial, positive, strategy };

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

const Message* last_user(std::span<const Message> history) {
  for (auto it = history.rbegin(); it != history.rend(); ++it)
    if (it->role == Role::user) return &*it;
  return nullptr;
}

Turn classify(std::span<const Message> history) {
  const Message* u = last_user(history);
  if (!u) throw KernelError("history has no user message");
  const auto& c = u->content;
  if (c == render_positive_prompt()) return Turn::positive;
  if (c == render_revise_prompt() || c == render_baseline_prompt()) return Turn::strategy;
  if (c == render_initial_prompt(std::nullopt)) return Turn::initial;
  if (starts_with(c, "Your previous reply could not be used")) {
    if (c.find("Options selected for increase") != std::string::npos) return Turn::positive;
    if (c.find("Updated strategy") != std::string::npos) return Turn::strategy;
    if (c.find("Initial strategy") != std::string::npos) return Turn::initial;
  }
  throw KernelError("scripted kernel cannot classify the request");
}

const Message* latest_feedback(std::span<const Message> history) {
  for (auto it = history.rbegin(); it != history.rend(); ++it)
    if (it->role == Role::user && starts_with(it->content, "Today,")) return &*it;
  return nullptr;
}

int option_count_from_system(std::span<const Message> history) {
  if (history.empty() || history.front().role != Role::system)
    throw KernelError("history does not start with a system message");
  static const std::regex routes(R"((\d+) available routes)");
  std::smatch m;
  const auto& s = history.front().content;
  if (std::regex_search(s, m, routes)) return std::stoi(m[1]);
  if (s.find("one of the following three options") != std::string::npos) return 3;
  throw KernelError("cannot infer the option count from the system prompt");
}

std::size_t argmin(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] < v[best]) best = k;
  return best;
}

std::vector<double> required_costs(std::span<const Message> history) {
  const Message* fb = latest_feedback(history);
  if (!fb) throw KernelError("no feedback prompt in history");
  auto costs = costs_from_feedback(fb->content);
  if (costs.empty()) throw KernelError("feedback prompt lists no costs");
  return costs;
}

std::string strategy_reply(const MixedStrategy& p, std::string_view label) {
  return fmt::format("<result> {}: {}. </result>", label, format_strategy(p));
}

std::string set_reply(const OptionSet& s) {
  if (s.empty()) return "Nothing stands out today.\n<result> Options selected for increase: None. </result>";
  std::vector<int> shown;
  for (int k : s) shown.push_back(k + 1);
  return fmt::format("<result> Options selected for increase: [{}]. </result>",
                     fmt::join(shown, ", "));
}

}  // namespace

std::vector<double> costs_from_feedback(std::string_view feedback) {
  const std::string text(feedback);
  static const std::regex classic(R"(realized as follows: \[([^\]]*)\])");
  static const std::regex tolling(R"(Route (\d+) (?:has a travel time of|takes) ([0-9.]+) minutes)");
  static const std::regex minutes(R"((including )?([0-9]+(?:\.[0-9]+)?)(?:-minute| minutes?\b))");
  std::smatch m;
  if (std::regex_search(text, m, classic)) {
    std::vector<double> out;
    std::string body = m[1];
    std::size_t start = 0;
    while (start <= body.size()) {
      auto c = body.find(',', start);
      out.push_back(std::stod(body.substr(start, c - start)));
      if (c == std::string::npos) break;
      start = c + 1;
    }
    return out;
  }
  if (text.find("- Option 1") != std::string::npos) {
    std::vector<double> out;
    std::size_t pos = text.find("- Option 1");
    while (pos != std::string::npos) {
      auto next = text.find("\n- Option", pos + 1);
      const std::string para = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      double sum = 0.0;
      for (auto it = std::sregex_iterator(para.begin(), para.end(), minutes); it != std::sregex_iterator(); ++it)
        if (!(*it)[1].matched) sum += std::stod((*it)[2]);
      out.push_back(sum);
      pos = next == std::string::npos ? next : next + 1;
    }
    return out;
  }
  std::vector<double> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), tolling); it != std::sregex_iterator(); ++it) {
    const auto k = static_cast<std::size_t>(std::stoi((*it)[1]));
    if (out.size() < k) out.resize(k, 0.0);
    out[k - 1] = std::stod((*it)[2]);
  }
  return out;
}

std::string ScriptedMinCostKernel::complete(std::span<const Message> history, const CallContext&) {
  switch (classify(history)) {
    case Turn::initial:
      return strategy_reply(MixedStrategy::uniform(option_count_from_system(history)),
                            "Initial strategy");
    case Turn::positive: {
      const auto costs = required_costs(history);
      return set_reply({static_cast<int>(argmin(costs))});
    }
    case Turn::strategy: {
      const auto costs = required_costs(history);
      return strategy_reply(MixedStrategy::pure(costs.size(), argmin(costs)), "Updated strategy");
    }
  }
  throw KernelError("unreachable");
}

ScriptedNoisyKernel::ScriptedNoisyKernel(std::uint64_t seed, double none_prob, double extra_prob)
    : seed_(seed), none_prob_(none_prob), extra_prob_(extra_prob) {
  if (!(none_prob >= 0.0 && none_prob <= 1.0 && extra_prob >= 0.0 && extra_prob <= 1.0))
    throw ConfigError("noisy kernel probabilities must lie in [0,1]");
}

std::string ScriptedNoisyKernel::describe() const {
  return fmt::format("scripted_noisy(seed={}, none={}, extra={})", seed_, none_prob_, extra_prob_);
}

std::string ScriptedNoisyKernel::complete(std::span<const Message> history, const CallContext&) {
  const std::uint64_t h = std::stoull(request_hash(history), nullptr, 16);
  std::mt19937_64 rng(seed_ ^ (h * 0x9e3779b97f4a7c15ULL));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (classify(history)) {
    case Turn::initial:
      return strategy_reply(MixedStrategy::uniform(option_count_from_system(history)),
                            "Initial strategy");
    case Turn::positive: {
      const auto costs = required_costs(history);
      const int n = static_cast<int>(costs.size());
      if (u(rng) < none_prob_) return set_reply({});
      OptionSet s{static_cast<int>(argmin(costs))};
      if (n > 2 && u(rng) < extra_prob_) {
        std::uniform_int_distribution<int> pick(0, n - 1);
        s.insert(pick(rng));
      }
      return set_reply(s);
    }
    case Turn::strategy: {
      const auto costs = required_costs(history);
      std::vector<double> p(costs.size());
      double z = 0.0;
      for (auto& v : p) z += (v = u(rng));
      for (auto& v : p) v = 0.3 * v / z;
      p[argmin(costs)] += 0.7;
      return strategy_reply(MixedStrategy(p), "Updated strategy");
    }
  }
  throw KernelError("unreachable");
}

QueueKernel::QueueKernel(std::vector<std::string> replies)
    : replies_(replies.begin(), replies.end()) {}

std::string QueueKernel::complete(std::span<const Message>, const CallContext&) {
  std::lock_guard lock(mutex_);
  ++calls_;
  if (replies_.empty()) throw KernelError("queue kernel exhausted");
  auto r = std::move(replies_.front());
  replies_.pop_front();
  return r;
}

std::size_t QueueKernel::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

// ---- transcripts ----

namespace {

json record_to_json(const TranscriptRecord& r) {
  json msgs = json::array();
  for (const auto& m : r.request)
    msgs.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  return json{{"run_id", r.run_id},   {"class_id", r.class_id},
              {"day", r.day},         {"request_hash", r.request_hash},
              {"request", msgs},      {"reply", r.reply},
              {"latency_ms", r.latency_ms}};
}

TranscriptRecord record_from_json(const json& j) {
  TranscriptRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.class_id = j.at("class_id").get<int>();
  r.day = j.at("day").get<int>();
  r.request_hash = j.at("request_hash").get<std::string>();
  for (const auto& m : j.at("request"))
    r.request.push_back(Message{parse_role(m.at("role").get<std::string>()),
                                m.at("content").get<std::string>()});
  r.reply = j.at("reply").get<std::string>();
  r.latency_ms = j.value("latency_ms", 0.0);
  return r;
}

}  // namespace

TranscriptStore::TranscriptStore(const std::filesystem::path& jsonl_path)
    : out_(std::make_unique<std::ofstream>(jsonl_path, std::ios::binary | std::ios::trunc)) {
  if (!*out_) throw KernelError("cannot open transcript file " + jsonl_path.string());
}

void TranscriptStore::append(TranscriptRecord record) {
  std::lock_guard lock(mutex_);
  if (out_) {
    *out_ << to_json_line(record) << '\n';
    out_->flush();
  }
  records_.push_back(std::move(record));
}

std::vector<TranscriptRecord> TranscriptStore::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::string TranscriptStore::to_json_line(const TranscriptRecord& record) {
  return record_to_json(record).dump();
}

std::vector<TranscriptRecord> TranscriptStore::parse(std::string_view jsonl) {
  std::vector<TranscriptRecord> out;
  std::size_t start = 0;
  int lineno = 0;
  while (start < jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    ++lineno;
    auto line = jsonl.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("bad transcript record: {}", e.what()), lineno);
    }
  }
  return out;
}

std::vector<TranscriptRecord> TranscriptStore::load(const std::filesystem::path& jsonl_path) {
  std::ifstream in(jsonl_path, std::ios::binary);
  if (!in) throw ReplayError("cannot open transcript " + jsonl_path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

RecordingKernel::RecordingKernel(std::shared_ptr<Kernel> inner,
                                 std::shared_ptr<TranscriptStore> store)
    : inner_(std::move(inner)), store_(std::move(store)) {
  if (!inner_ || !store_) throw KernelError("recording kernel needs an inner kernel and a store");
}

std::string RecordingKernel::complete(std::span<const Message> history, const CallContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string reply = inner_->complete(history, ctx);
  const auto t1 = std::chrono::steady_clock::now();
  TranscriptRecord r;
  r.run_id = ctx.run_id;
  r.class_id = ctx.class_id;
  r.day = ctx.day;
  r.request_hash = request_hash(history);
  r.request.assign(history.begin(), history.end());
  r.reply = reply;
  r.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  store_->append(std::move(r));
  return reply;
}

std::string RecordingKernel::describe() const { return "record(" + inner_->describe() + ")"; }

ReplayKernel::ReplayKernel(const std::vector<TranscriptRecord>& records) {
  for (const auto& r : records) queues_[Key{r.run_id, r.class_id, r.day}].push_back(r);
}

std::string ReplayKernel::complete(std::span<const Message> history, const CallContext& ctx) {
  std::lock_guard lock(mutex_);
  auto it = queues_.find(Key{ctx.run_id, ctx.class_id, ctx.day});
  if (it == queues_.end() || it->second.empty())
    throw ReplayError(fmt::format("transcript has no reply for run '{}', class {}, day {}",
                                  ctx.run_id, ctx.class_id, ctx.day));
  auto rec = std::move(it->second.front());
  it->second.pop_front();
  const auto h = request_hash(history);
  if (h != rec.request_hash)
    throw ReplayError(fmt::format("request differs from transcript (run '{}', class {}, day {})",
                                  ctx.run_id, ctx.class_id, ctx.day));
  return rec.reply;
}

}  // namespace d2d
