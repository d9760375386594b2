#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "faultlens/http.hpp"
#include "faultlens/llm.hpp"
#include "faultlens/prompt.hpp"

namespace faultlens::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kSchemaError = 2,   // bad arguments, malformed or inconsistent inputs
  kMissingInput = 3,  // empty corpus, missing spectra or upstream artifacts
  kCassetteMiss = 4,
  kAuthError = 5,
  kNetworkError = 6,
  kTokenBudget = 7,
};

/// Settings shared by the stage commands.
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  std::vector<std::string> techniques;
  std::vector<PromptVariant> variants;
  CompletionMode mode = CompletionMode::kReplay;
  std::optional<std::filesystem::path> cassette_dir;
  int top_n = 5;
  double alpha = 0.01;
  int jobs = 4;

  /// Throws Error(kInvalidArgument) when Replay lacks a cassette dir or alpha
  /// is outside (0, 1).
  void validate() const;
};

/// Process-level dependencies, injectable for tests.
struct Environment {
  std::function<std::shared_ptr<HttpTransport>()> make_transport;
  std::function<std::optional<std::string>(const std::string&)> getenv;
  LlmGateway::Sleeper sleeper;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  /// Real network, real environment variables, std::cout / std::cerr.
  static Environment system();
};

/// Entry point of the `faultlens` binary. Returns the process exit code.
int run(const std::vector<std::string>& args, const Environment& env);

}  // namespace faultlens::cli
