#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "d2d/errors.hpp"
#include "d2d/kernel.hpp"
#include "json.hpp"

namespace d2d {

using nlohmann::json;

LiveKernel::LiveKernel(KernelConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& ep = config_.endpoint;
  auto scheme = ep.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint must include a scheme: " + ep);
  auto slash = ep.find('/', scheme + 3);
  base_url_ = ep.substr(0, slash);
  path_prefix_ = slash == std::string::npos ? "" : ep.substr(slash);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string LiveKernel::describe() const {
  return fmt::format("live(endpoint={}, model={}, temperature={})", config_.endpoint, config_.model,
                     config_.temperature);
}

int LiveKernel::attempts() const {
  std::lock_guard lock(mutex_);
  return attempts_;
}

std::string LiveKernel::complete(std::span<const Message> history, const CallContext& ctx) {
  if (history.empty() || history.front().role != Role::system)
    throw KernelError("history must begin with a system message");

  json messages = json::array();
  for (const auto& m : history) {
    const char* role = m.role == Role::agent ? "assistant" : m.role == Role::system ? "system" : "user";
    messages.push_back({{"role", role}, {"content", m.content}});
  }
  const json body{{"model", config_.model},
                  {"temperature", config_.temperature},
                  {"messages", std::move(messages)}};
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const auto secs = static_cast<time_t>(config_.timeout_seconds);
  const auto usecs = static_cast<time_t>((config_.timeout_seconds - secs) * 1e6);
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0 && config_.backoff_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms << std::min(attempt - 1, 10)));
    {
      std::lock_guard lock(mutex_);
      ++attempts_;
    }
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    auto res = cli.Post(path_prefix_ + "/chat/completions", headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      spdlog::warn("run {} class {} day {}: {} (attempt {})", ctx.run_id, ctx.class_id, ctx.day,
                   last_error, attempt + 1);
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = fmt::format("HTTP {}", res->status);
      spdlog::warn("run {} class {} day {}: {} (attempt {})", ctx.run_id, ctx.class_id, ctx.day,
                   last_error, attempt + 1);
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw KernelError(fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 500)));
    std::string content;
    try {
      const auto j = json::parse(res->body);
      const auto& c = j.at("choices").at(0).at("message").at("content");
      if (c.is_string()) content = c.get<std::string>();
    } catch (const json::exception& e) {
      throw KernelError(std::string("malformed completion: ") + e.what());
    }
    if (content.empty()) throw KernelError("empty completion");
    return content;
  }
  throw KernelError(fmt::format("giving up after {} attempts: {}", config_.max_retries + 1,
                                last_error));
}

}  // namespace d2d
