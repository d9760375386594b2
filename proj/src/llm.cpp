#include "faultlens/llm.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <ctime>
#include <regex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "faultlens/error.hpp"

namespace faultlens {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(CompletionMode mode) {
  switch (mode) {
    case CompletionMode::kLive: return "live";
    case CompletionMode::kRecord: return "record";
    case CompletionMode::kReplay: return "replay";
  }
  return "unknown";
}

std::optional<CompletionMode> parse_mode(std::string_view name) {
  for (auto mode : {CompletionMode::kLive, CompletionMode::kRecord, CompletionMode::kReplay}) {
    if (to_string(mode) == name) return mode;
  }
  return std::nullopt;
}

namespace {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

std::optional<std::string> find_header(const std::map<std::string, std::string>& headers,
                                       std::string_view name) {
  for (const auto& [key, value] : headers) {
    if (key.size() == name.size() &&
        std::equal(key.begin(), key.end(), name.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) ==
                 std::tolower(static_cast<unsigned char>(b));
        })) {
      return value;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string cassette_key(std::string_view model_name, std::string_view prompt, double temperature) {
  const json material = {{"model", model_name},
                         {"prompt", prompt},
                         {"temperature", fmt::format("{:.4f}", temperature)}};
  return sha256_hex(material.dump());
}

// ---------------------------------------------------------------------------
// Cassettes

fs::path CassetteStore::path_for(const std::string& key) const { return dir_ / (key + ".json"); }

std::optional<Exchange> CassetteStore::find(const std::string& key) const {
  const fs::path path = path_for(key);
  if (!fs::exists(path)) return std::nullopt;
  return exchange_from_json(read_json_file(path));
}

void CassetteStore::save(const Exchange& exchange) {
  std::lock_guard<std::mutex> lock(write_mutex_);
  json j = to_json(exchange);
  j.erase("attempts");
  write_json_file(path_for(exchange.cassette_key), j);
}

json to_json(const Exchange& exchange) {
  return {{"request",
           {{"model", exchange.request.model_name},
            {"prompt", exchange.request.prompt},
            {"temperature", exchange.request.temperature},
            {"program_id", exchange.request.program_id},
            {"variant", exchange.request.variant}}},
          {"response",
           {{"text", exchange.response.text},
            {"prompt_tokens", exchange.response.prompt_tokens},
            {"completion_tokens", exchange.response.completion_tokens}}},
          {"timestamp", exchange.timestamp},
          {"cassette_key", exchange.cassette_key},
          {"attempts", exchange.attempts}};
}

Exchange exchange_from_json(const json& j) {
  try {
    Exchange e;
    const auto& req = j.at("request");
    e.request.model_name = req.at("model").get<std::string>();
    e.request.prompt = req.at("prompt").get<std::string>();
    e.request.temperature = req.at("temperature").get<double>();
    e.request.program_id = req.value("program_id", "");
    e.request.variant = req.value("variant", "");
    const auto& resp = j.at("response");
    e.response.text = resp.at("text").get<std::string>();
    e.response.prompt_tokens = resp.value("prompt_tokens", 0);
    e.response.completion_tokens = resp.value("completion_tokens", 0);
    e.timestamp = j.value("timestamp", "");
    e.cassette_key = j.at("cassette_key").get<std::string>();
    e.attempts = j.value("attempts", 0);
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::kSchemaViolation, std::string("exchange: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Gateway

GatewayConfig GatewayConfig::from_environment(CompletionMode mode) {
  GatewayConfig config;
  config.mode = mode;
  if (const char* url = std::getenv(kUrlEnvVar); url && *url) config.endpoint_url = url;
  if (const char* key = std::getenv(kKeyEnvVar); key) config.api_key = key;
  return config;
}

LlmGateway::LlmGateway(GatewayConfig config, std::shared_ptr<HttpTransport> transport,
                       std::shared_ptr<CassetteStore> store, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      store_(std::move(store)),
      sleeper_(std::move(sleeper)),
      in_flight_(std::clamp(config_.max_in_flight, 1, 64)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  const bool networked = config_.mode != CompletionMode::kReplay;
  if (networked && config_.api_key.empty()) {
    throw Error(ErrorKind::kAuthError, std::string(kKeyEnvVar) + " is not set");
  }
  if (networked && !transport_) {
    throw Error(ErrorKind::kInvalidArgument, "live completion needs an HTTP transport");
  }
  if (config_.mode != CompletionMode::kLive && !store_) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("{} mode needs a cassette directory", to_string(config_.mode)));
  }
}

GatewayStats LlmGateway::stats() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return stats_;
}

Exchange LlmGateway::complete(const PromptBundle& bundle) {
  CompletionRequest request{config_.model_name, bundle.text, config_.temperature, bundle.program_id,
                            std::string(slug(bundle.variant))};
  return complete(request, bundle.approx_tokens);
}

Exchange LlmGateway::complete(const CompletionRequest& request, int approx_prompt_tokens) {
  if (approx_prompt_tokens + config_.completion_reserve > config_.token_limit) {
    throw Error(ErrorKind::kTokenBudgetExceeded,
                fmt::format("{} prompt ~{} tokens + {} reserved exceeds limit {}",
                            request.program_id, approx_prompt_tokens, config_.completion_reserve,
                            config_.token_limit));
  }
  const std::string key = cassette_key(request.model_name, request.prompt, request.temperature);

  if (config_.mode == CompletionMode::kReplay) {
    auto stored = store_->find(key);
    if (!stored) throw Error(ErrorKind::kCassetteMiss, key);
    Exchange exchange{request, stored->response, stored->timestamp, key, 0};
    std::lock_guard<std::mutex> lock(mutex_);
    ++stats_.completions;
    ++stats_.replays;
    stats_.last_attempts = 0;
    return exchange;
  }

  int attempts = 0;
  in_flight_.acquire();
  CompletionResponse response;
  try {
    response = send_with_retry(request, attempts);
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();

  Exchange exchange{request, std::move(response), utc_timestamp(), key, attempts};
  if (config_.mode == CompletionMode::kRecord) store_->save(exchange);
  std::lock_guard<std::mutex> lock(mutex_);
  ++stats_.completions;
  return exchange;
}

CompletionResponse LlmGateway::send_with_retry(const CompletionRequest& request, int& attempts) {
  const int max_attempts = std::max(1, config_.max_attempts);
  auto backoff = config_.initial_backoff;
  for (;;) {
    ++attempts;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      ++stats_.network_attempts;
      stats_.last_attempts = attempts;
    }
    try {
      return send_once(request);
    } catch (const Error& e) {
      if (!e.retryable() || attempts >= max_attempts) throw;
      auto delay = backoff;
      if (const auto* limited = dynamic_cast<const RateLimitedError*>(&e)) {
        const auto suggested = std::chrono::milliseconds(
            static_cast<long long>(limited->retry_after_seconds() * 1000.0));
        delay = std::max(delay, suggested);
      }
      {
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.retries;
      }
      sleeper_(delay);
      backoff *= 2;
    }
  }
}

void LlmGateway::pace() {
  if (config_.min_request_interval.count() <= 0) return;
  std::chrono::milliseconds wait{0};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    const auto next = last_start_ + config_.min_request_interval;
    if (next > now) wait = std::chrono::duration_cast<std::chrono::milliseconds>(next - now);
    last_start_ = std::max(now, next);
  }
  if (wait.count() > 0) sleeper_(wait);
}

CompletionResponse LlmGateway::send_once(const CompletionRequest& request) {
  pace();
  const json body = {{"model", request.model_name},
                     {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
                     {"temperature", request.temperature}};
  HttpRequest http{config_.endpoint_url,
                   {{"Authorization", "Bearer " + config_.api_key},
                    {"Content-Type", "application/json"}},
                   body.dump()};
  const HttpResponse reply = transport_->post(http);

  if (reply.status == 401 || reply.status == 403) {
    throw Error(ErrorKind::kAuthError, fmt::format("endpoint returned {}", reply.status));
  }
  if (reply.status == 429) {
    double retry_after = 0.0;
    if (auto header = find_header(reply.headers, "Retry-After")) {
      retry_after = std::strtod(header->c_str(), nullptr);
    }
    throw RateLimitedError("endpoint returned 429", retry_after);
  }
  if (reply.status == 408 || reply.status >= 500) {
    throw Error(ErrorKind::kNetworkError, fmt::format("endpoint returned {}", reply.status));
  }
  if (reply.status < 200 || reply.status >= 300) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("endpoint rejected request ({}): {}", reply.status, reply.body));
  }

  try {
    const json j = json::parse(reply.body);
    CompletionResponse response;
    response.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage")) {
      response.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      response.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    return response;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("completion response: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Answer parsing

namespace {

const std::regex& marker_pattern() {
  static const std::regex pattern(
      R"(^\s*(?:[-*]\s*|\d+[.)]\s*)?(?:\*\*)?line\s+(\d+)\s*(?:\*\*)?\s*:\s*(?:\*\*)?\s*)",
      std::regex::icase | std::regex::ECMAScript);
  return pattern;
}

std::string trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return std::string(s.substr(begin, end - begin));
}

}  // namespace

ParsedAnswer parse_answer(const Exchange& exchange, const SubjectProgram& program) {
  ParsedAnswer answer;
  answer.program_id = program.id;
  answer.variant = exchange.request.variant;
  answer.raw_text = exchange.response.text;

  struct Pending {
    long long line;
    std::string text;
  };
  std::vector<Pending> found;
  std::istringstream in(exchange.response.text);
  std::string row;
  while (std::getline(in, row)) {
    std::smatch match;
    if (std::regex_search(row, match, marker_pattern())) {
      long long line = 0;
      try {
        line = std::stoll(match[1].str());
      } catch (const std::out_of_range&) {
        line = -1;
      }
      found.push_back({line, match.suffix().str()});
    } else if (!found.empty()) {
      found.back().text += "\n" + row;
    }
  }

  answer.unparseable = found.empty();
  std::set<LineIndex> seen;
  for (const auto& entry : found) {
    if (entry.line < 1 || entry.line > program.line_count()) {
      ++answer.dropped_out_of_range;
      continue;
    }
    const auto line = static_cast<LineIndex>(entry.line);
    if (!seen.insert(line).second) {
      ++answer.dropped_duplicates;
      continue;
    }
    answer.ranked_lines.push_back({line, trim(entry.text)});
  }
  return answer;
}

json to_json(const ParsedAnswer& answer) {
  json entries = json::array();
  for (std::size_t i = 0; i < answer.ranked_lines.size(); ++i) {
    entries.push_back({{"rank", i + 1},
                       {"line", answer.ranked_lines[i].line},
                       {"explanation", answer.ranked_lines[i].explanation}});
  }
  return {{"program_id", answer.program_id},
          {"variant", answer.variant},
          {"ranked_lines", std::move(entries)},
          {"raw_text", answer.raw_text},
          {"diagnostics",
           {{"dropped_out_of_range", answer.dropped_out_of_range},
            {"dropped_duplicates", answer.dropped_duplicates},
            {"unparseable", answer.unparseable}}}};
}

ParsedAnswer parsed_answer_from_json(const json& j) {
  try {
    ParsedAnswer a;
    a.program_id = j.at("program_id").get<std::string>();
    a.variant = j.at("variant").get<std::string>();
    for (const auto& e : j.at("ranked_lines")) {
      a.ranked_lines.push_back({e.at("line").get<LineIndex>(), e.at("explanation").get<std::string>()});
    }
    a.raw_text = j.at("raw_text").get<std::string>();
    const auto& d = j.at("diagnostics");
    a.dropped_out_of_range = d.at("dropped_out_of_range").get<int>();
    a.dropped_duplicates = d.at("dropped_duplicates").get<int>();
    a.unparseable = d.at("unparseable").get<bool>();
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("parsed answer: ") + e.what());
  }
}

}  // namespace faultlens
