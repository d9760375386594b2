#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace faultlens {

/// Source line index. Lines are 1-indexed everywhere.
using LineIndex = int;

struct TestCase {
  std::string id;
  std::string input_repr;     // canonical text of the call
  std::string expected_repr;  // canonical text of the expected value

  bool operator==(const TestCase&) const = default;
};

enum class Verdict { kPass, kFail };

struct ExecutionError {
  std::string kind;  // e.g. "IndexError", "Timeout"
  LineIndex line = 0;

  bool operator==(const ExecutionError&) const = default;
};

struct TestResult {
  std::string test_id;
  Verdict verdict = Verdict::kPass;
  std::optional<std::string> actual_repr;  // present iff execution completed
  std::optional<ExecutionError> error;     // present iff execution aborted
  std::set<LineIndex> covered_lines;

  bool failed() const { return verdict == Verdict::kFail; }
  bool operator==(const TestResult&) const = default;
};

struct SubjectProgram {
  std::string id;
  std::vector<std::string> source_lines;
  std::string code_description;
  std::vector<TestCase> test_cases;

  int line_count() const { return static_cast<int>(source_lines.size()); }
  bool valid_line(LineIndex line) const { return line >= 1 && line <= line_count(); }
  const TestCase* find_test(const std::string& test_id) const;

  bool operator==(const SubjectProgram&) const = default;
};

struct ProgramSpectrum {
  std::string program_id;
  std::vector<TestResult> results;
  std::set<LineIndex> executable_lines;

  int failing_count() const;
  int passing_count() const;

  bool operator==(const ProgramSpectrum&) const = default;
};

struct GroundTruth {
  std::string program_id;
  std::set<LineIndex> faulty_lines;
  std::map<LineIndex, std::set<LineIndex>> omission_alternates;
  std::map<LineIndex, std::vector<std::string>> reference_explanations;

  /// Faulty lines plus every omission alternate.
  std::set<LineIndex> acceptable_lines() const;

  bool operator==(const GroundTruth&) const = default;
};

/// The (n_f, n_p, n_f(l), n_p(l)) tuple every suspiciousness formula consumes.
struct SpectrumCounts {
  int n_f = 0;
  int n_p = 0;
  int n_f_l = 0;
  int n_p_l = 0;

  bool valid() const {
    return n_f >= 1 && n_p >= 0 && n_f_l >= 0 && n_f_l <= n_f && n_p_l >= 0 && n_p_l <= n_p;
  }
  bool operator==(const SpectrumCounts&) const = default;
};

struct CorpusEntry {
  SubjectProgram program;
  std::optional<ProgramSpectrum> spectrum;
  std::optional<GroundTruth> truth;

  bool operator==(const CorpusEntry&) const = default;
};

using Corpus = std::vector<CorpusEntry>;

// Validation. Each throws Error(kSchemaViolation) for structural problems and
// Error(kDanglingReference) when a line or test id points outside the program.
void validate(const SubjectProgram& program);
void validate(const ProgramSpectrum& spectrum, const SubjectProgram& program);
void validate(const GroundTruth& truth, const SubjectProgram& program);

/// Tallies verdicts over all results and, for `line`, over the results that
/// cover it. Throws Error(kUnknownLine) if `line` is not executable.
SpectrumCounts counts_for_line(const ProgramSpectrum& spectrum, LineIndex line);

/// Loads and cross-validates a corpus manifest. Entries come back sorted by
/// program id. Relative paths resolve against the manifest's directory.
Corpus load_corpus(const std::filesystem::path& manifest_path);

/// Writes `corpus` as a manifest plus per-program files under `dir` and
/// returns the manifest path. Loading it back yields an equal corpus.
std::filesystem::path write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Looks up an entry by program id; nullptr if absent.
const CorpusEntry* find_entry(const Corpus& corpus, const std::string& program_id);

// File-format conversions (schemas are documented in README.md).
nlohmann::json to_json(const ProgramSpectrum& spectrum);
ProgramSpectrum spectrum_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

// Small file helpers shared by the stage commands.
std::string read_text_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace faultlens
