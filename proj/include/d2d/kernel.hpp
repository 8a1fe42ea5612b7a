#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "d2d/dialog.hpp"

namespace d2d {

// Who is asking. day = -1 marks initialization turns.
struct CallContext {
  std::string run_id;
  int class_id = 0;
  int day = -1;
};

class Kernel {
 public:
  virtual ~Kernel() = default;
  // Next agent message given the history. Must be safe to call concurrently.
  virtual std::string complete(std::span<const Message> history, const CallContext& ctx) = 0;
  virtual std::string describe() const = 0;
};

struct KernelConfig {
  std::string endpoint = "https://api.deepseek.com";
  std::string model = "deepseek-chat";
  double temperature = 1.0;
  double timeout_seconds = 120.0;
  int max_retries = 3;
  int backoff_ms = 1000;  // doubled after each failed attempt
  std::string api_key_env = "D2D_API_KEY";

  void validate() const;
};

// Chat-completions client. Sends {model, temperature, messages} and returns
// choices[0].message.content.
class LiveKernel : public Kernel {
 public:
  explicit LiveKernel(KernelConfig config);
  std::string complete(std::span<const Message> history, const CallContext& ctx) override;
  std::string describe() const override;

  // Number of HTTP attempts made so far (all calls).
  int attempts() const;

 private:
  KernelConfig config_;
  std::string base_url_;
  std::string path_prefix_;
  mutable std::mutex mutex_;
  int attempts_ = 0;
};

// Feedback costs recovered from a rendered feedback prompt, one per option.
// Classic: listed times. Tolling: times only. Multimodal: one-way minutes of
// each option paragraph, skipping figures introduced by "including".
std::vector<double> costs_from_feedback(std::string_view feedback);

// Best-response oracle: reinforces the cheapest option of the latest feedback
// (ties to the lowest index), initializes uniformly, and answers strategy
// requests with the pure strategy on that option.
class ScriptedMinCostKernel : public Kernel {
 public:
  std::string complete(std::span<const Message> history, const CallContext& ctx) override;
  std::string describe() const override { return "scripted_min_cost"; }
};

// Seeded perturbation of the min-cost oracle. Replies are a pure function of
// (seed, history): sometimes None, sometimes an extra random option, never
// the full set.
class ScriptedNoisyKernel : public Kernel {
 public:
  explicit ScriptedNoisyKernel(std::uint64_t seed, double none_prob = 0.1,
                               double extra_prob = 0.3);
  std::string complete(std::span<const Message> history, const CallContext& ctx) override;
  std::string describe() const override;

 private:
  std::uint64_t seed_;
  double none_prob_;
  double extra_prob_;
};

// Returns canned replies in order; throws KernelError when exhausted.
class QueueKernel : public Kernel {
 public:
  explicit QueueKernel(std::vector<std::string> replies);
  std::string complete(std::span<const Message> history, const CallContext& ctx) override;
  std::string describe() const override { return "queue"; }
  std::size_t calls() const;

 private:
  mutable std::mutex mutex_;
  std::deque<std::string> replies_;
  std::size_t calls_ = 0;
};

// 16 hex digits of FNV-1a over roles and contents.
std::string request_hash(std::span<const Message> history);

struct TranscriptRecord {
  std::string run_id;
  int class_id = 0;
  int day = -1;
  std::string request_hash;
  std::vector<Message> request;
  std::string reply;
  double latency_ms = 0.0;
};

// Append-only, thread-safe. When a path is set each record is also written
// to it as one JSON line as soon as it arrives.
class TranscriptStore {
 public:
  TranscriptStore() = default;
  explicit TranscriptStore(const std::filesystem::path& jsonl_path);

  void append(TranscriptRecord record);
  std::vector<TranscriptRecord> records() const;

  static std::vector<TranscriptRecord> load(const std::filesystem::path& jsonl_path);
  static std::vector<TranscriptRecord> parse(std::string_view jsonl);
  static std::string to_json_line(const TranscriptRecord& record);

 private:
  mutable std::mutex mutex_;
  std::vector<TranscriptRecord> records_;
  std::unique_ptr<std::ofstream> out_;
};

class RecordingKernel : public Kernel {
 public:
  RecordingKernel(std::shared_ptr<Kernel> inner, std::shared_ptr<TranscriptStore> store);
  std::string complete(std::span<const Message> history, const CallContext& ctx) override;
  std::string describe() const override;

 private:
  std::shared_ptr<Kernel> inner_;
  std::shared_ptr<TranscriptStore> store_;
};

// Serves recorded replies per (run, class, day) in record order and checks
// each request against the recorded hash.
class ReplayKernel : public Kernel {
 public:
  explicit ReplayKernel(const std::vector<TranscriptRecord>& records);
  std::string complete(std::span<const Message> history, const CallContext& ctx) override;
  std::string describe() const override { return "replay"; }

 private:
  using Key = std::tuple<std::string, int, int>;
  std::mutex mutex_;
  std::map<Key, std::deque<TranscriptRecord>> queues_;
};

}  // namespace d2d
