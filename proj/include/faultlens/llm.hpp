#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "faultlens/http.hpp"
#include "faultlens/prompt.hpp"
#include "faultlens/spectra.hpp"

namespace faultlens {

enum class CompletionMode { kLive, kRecord, kReplay };

std::string_view to_string(CompletionMode mode);
std::optional<CompletionMode> parse_mode(std::string_view name);

inline constexpr const char* kUrlEnvVar = "FAULTLENS_LLM_URL";
inline constexpr const char* kKeyEnvVar = "FAULTLENS_LLM_KEY";
inline constexpr const char* kDefaultEndpoint = "https://api.openai.com/v1/chat/completions";

struct CompletionRequest {
  std::string model_name;
  std::string prompt;
  double temperature = 0.0;
  // Bookkeeping tags; not part of the cassette key.
  std::string program_id;
  std::string variant;

  bool operator==(const CompletionRequest&) const = default;
};

struct CompletionResponse {
  std::string text;
  int prompt_tokens = 0;
  int completion_tokens = 0;

  bool operator==(const CompletionResponse&) const = default;
};

struct Exchange {
  CompletionRequest request;
  CompletionResponse response;
  std::string timestamp;  // UTC, ISO 8601
  std::string cassette_key;
  int attempts = 0;  // network attempts made; 0 when replayed

  bool operator==(const Exchange&) const = default;
};

/// SHA-256 hex digest of the compact JSON document
/// {"model":<model>,"prompt":<prompt>,"temperature":"<temperature, 4 decimals>"}
/// with keys in that (sorted) order.
std::string cassette_key(std::string_view model_name, std::string_view prompt, double temperature);

/// One JSON file per exchange, named <cassette_key>.json.
class CassetteStore {
 public:
  explicit CassetteStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::optional<Exchange> find(const std::string& key) const;
  void save(const Exchange& exchange);
  std::filesystem::path path_for(const std::string& key) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex write_mutex_;
};

struct GatewayConfig {
  CompletionMode mode = CompletionMode::kReplay;
  std::string endpoint_url = kDefaultEndpoint;
  std::string api_key;
  std::string model_name = "gpt-3.5-turbo";
  double temperature = 0.0;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  int token_limit = 4096;        // prompt + completion
  int completion_reserve = 1024; // tokens kept free for the answer
  int max_in_flight = 4;
  std::chrono::milliseconds min_request_interval{0};

  /// Fills endpoint_url and api_key from FAULTLENS_LLM_URL / FAULTLENS_LLM_KEY.
  static GatewayConfig from_environment(CompletionMode mode);
};

struct GatewayStats {
  int completions = 0;
  int network_attempts = 0;
  int retries = 0;
  int replays = 0;
  int last_attempts = 0;
};

/// Sends prompts to a chat-completion endpoint, or replays them from a
/// cassette store. Safe to call complete() from several threads.
class LlmGateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  /// Throws Error(kAuthError) when Live/Record has no credential and
  /// Error(kInvalidArgument) when Record/Replay has no store.
  LlmGateway(GatewayConfig config, std::shared_ptr<HttpTransport> transport,
             std::shared_ptr<CassetteStore> store, Sleeper sleeper = {});

  Exchange complete(const PromptBundle& bundle);
  Exchange complete(const CompletionRequest& request, int approx_prompt_tokens);

  GatewayStats stats() const;
  const GatewayConfig& config() const { return config_; }

 private:
  CompletionResponse send_with_retry(const CompletionRequest& request, int& attempts);
  CompletionResponse send_once(const CompletionRequest& request);
  void pace();

  GatewayConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  std::shared_ptr<CassetteStore> store_;
  Sleeper sleeper_;
  std::counting_semaphore<64> in_flight_;
  mutable std::mutex mutex_;
  GatewayStats stats_;
  std::chrono::steady_clock::time_point last_start_{};
};

nlohmann::json to_json(const Exchange& exchange);
Exchange exchange_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Answer parsing

struct AnswerEntry {
  LineIndex line = 0;
  std::string explanation;

  bool operator==(const AnswerEntry&) const = default;
};

struct ParsedAnswer {
  std::string program_id;
  std::string variant;
  std::vector<AnswerEntry> ranked_lines;  // i-th entry has rank i + 1
  std::string raw_text;
  int dropped_out_of_range = 0;
  int dropped_duplicates = 0;
  bool unparseable = false;  // no "Line <n>:" marker found at all

  bool operator==(const ParsedAnswer&) const = default;
};

/// Extracts every "Line <n>: ..." entry in order. A marker may be preceded by
/// a list bullet ("-", "*", "1.", "1)") and wrapped in markdown bold. The
/// explanation runs until the next marker. Out-of-range lines and repeated
/// lines are dropped and counted.
ParsedAnswer parse_answer(const Exchange& exchange, const SubjectProgram& program);

nlohmann::json to_json(const ParsedAnswer& answer);
ParsedAnswer parsed_answer_from_json(const nlohmann::json& j);

}  // namespace faultlens
