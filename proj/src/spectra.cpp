#include "faultlens/spectra.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "faultlens/error.hpp"

namespace faultlens {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMissingFile: return "MissingFile";
    case ErrorKind::kSchemaViolation: return "SchemaViolation";
    case ErrorKind::kDanglingReference: return "DanglingReference";
    case ErrorKind::kUnknownLine: return "UnknownLine";
    case ErrorKind::kEmptySpectrum: return "EmptySpectrum";
    case ErrorKind::kMissingBlockInput: return "MissingBlockInput";
    case ErrorKind::kNetworkError: return "NetworkError";
    case ErrorKind::kAuthError: return "AuthError";
    case ErrorKind::kRateLimited: return "RateLimited";
    case ErrorKind::kCassetteMiss: return "CassetteMiss";
    case ErrorKind::kTokenBudgetExceeded: return "TokenBudgetExceeded";
    case ErrorKind::kNoHitLines: return "NoHitLines";
    case ErrorKind::kDegenerateInput: return "DegenerateInput";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kZeroVariance: return "ZeroVariance";
    case ErrorKind::kNoFailingTests: return "NoFailingTests";
    case ErrorKind::kIncompleteCoverage: return "IncompleteCoverage";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

const TestCase* SubjectProgram::find_test(const std::string& test_id) const {
  auto it = std::find_if(test_cases.begin(), test_cases.end(),
                         [&](const TestCase& t) { return t.id == test_id; });
  return it == test_cases.end() ? nullptr : &*it;
}

int ProgramSpectrum::failing_count() const {
  return static_cast<int>(
      std::count_if(results.begin(), results.end(), [](const TestResult& r) { return r.failed(); }));
}

int ProgramSpectrum::passing_count() const {
  return static_cast<int>(results.size()) - failing_count();
}

std::set<LineIndex> GroundTruth::acceptable_lines() const {
  std::set<LineIndex> lines = faulty_lines;
  for (const auto& [faulty, alternates] : omission_alternates) {
    lines.insert(alternates.begin(), alternates.end());
  }
  return lines;
}

namespace {

[[noreturn]] void schema_error(const std::string& detail) {
  throw Error(ErrorKind::kSchemaViolation, detail);
}

[[noreturn]] void dangling(const std::string& program_id, const std::string& detail) {
  throw Error(ErrorKind::kDanglingReference, program_id + ": " + detail);
}

void require_line(const SubjectProgram& program, LineIndex line, const char* what) {
  if (!program.valid_line(line)) {
    dangling(program.id, std::string(what) + " line " + std::to_string(line) +
                             " outside 1.." + std::to_string(program.line_count()));
  }
}

LineIndex parse_line_key(const std::string& key) {
  LineIndex value = 0;
  auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), value);
  if (ec != std::errc() || ptr != key.data() + key.size()) {
    schema_error("line key '" + key + "' is not an integer");
  }
  return value;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  std::istringstream in(text);
  while (std::getline(in, current)) {
    if (!current.empty() && current.back() == '\r') current.pop_back();
    lines.push_back(current);
  }
  return lines;
}

std::string trim_right(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

fs::path resolve(const fs::path& base, const std::string& rel) {
  fs::path p(rel);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

void validate(const SubjectProgram& program) {
  if (program.id.empty()) schema_error("program id is empty");
  if (program.source_lines.empty()) schema_error(program.id + ": source has no lines");
  std::set<std::string> seen;
  for (const auto& test : program.test_cases) {
    if (test.id.empty()) schema_error(program.id + ": test with empty id");
    if (!seen.insert(test.id).second) schema_error(program.id + ": duplicate test id " + test.id);
    if (test.input_repr.empty() || test.expected_repr.empty()) {
      schema_error(program.id + ": test " + test.id + " has empty input or expected value");
    }
  }
}

void validate(const ProgramSpectrum& spectrum, const SubjectProgram& program) {
  if (spectrum.program_id != program.id) {
    dangling(program.id, "spectrum belongs to '" + spectrum.program_id + "'");
  }
  for (LineIndex line : spectrum.executable_lines) require_line(program, line, "executable");
  if (spectrum.failing_count() == 0) schema_error(program.id + ": spectrum has no failing test");
  std::set<std::string> seen;
  for (const auto& result : spectrum.results) {
    if (!program.find_test(result.test_id)) dangling(program.id, "unknown test id " + result.test_id);
    if (!seen.insert(result.test_id).second) {
      schema_error(program.id + ": duplicate result for test " + result.test_id);
    }
    const bool has_actual = result.actual_repr.has_value();
    const bool has_error = result.error.has_value();
    if (result.failed() && has_actual == has_error) {
      schema_error(program.id + ": failing test " + result.test_id +
                   " must carry exactly one of actual/error");
    }
    if (!result.failed() && (!has_actual || has_error)) {
      schema_error(program.id + ": passing test " + result.test_id +
                   " must carry actual and no error");
    }
    if (has_error) require_line(program, result.error->line, "error");
    for (LineIndex line : result.covered_lines) {
      require_line(program, line, "covered");
      if (!spectrum.executable_lines.contains(line)) {
        schema_error(program.id + ": test " + result.test_id + " covers non-executable line " +
                     std::to_string(line));
      }
    }
  }
}

void validate(const GroundTruth& truth, const SubjectProgram& program) {
  if (truth.program_id != program.id) {
    dangling(program.id, "ground truth belongs to '" + truth.program_id + "'");
  }
  if (truth.faulty_lines.empty()) schema_error(program.id + ": no faulty lines");
  for (LineIndex line : truth.faulty_lines) require_line(program, line, "faulty");
  for (const auto& [line, alternates] : truth.omission_alternates) {
    if (!truth.faulty_lines.contains(line)) {
      dangling(program.id, "omission alternate keyed by non-faulty line " + std::to_string(line));
    }
    for (LineIndex alt : alternates) require_line(program, alt, "alternate");
  }
  for (const auto& [line, texts] : truth.reference_explanations) {
    if (!truth.faulty_lines.contains(line)) {
      dangling(program.id, "explanation keyed by non-faulty line " + std::to_string(line));
    }
    if (texts.empty()) schema_error(program.id + ": empty explanation list for line " +
                                    std::to_string(line));
  }
}

SpectrumCounts counts_for_line(const ProgramSpectrum& spectrum, LineIndex line) {
  if (!spectrum.executable_lines.contains(line)) {
    throw Error(ErrorKind::kUnknownLine,
                spectrum.program_id + ": line " + std::to_string(line) + " is not executable");
  }
  SpectrumCounts c;
  for (const auto& result : spectrum.results) {
    const bool covers = result.covered_lines.contains(line);
    if (result.failed()) {
      ++c.n_f;
      if (covers) ++c.n_f_l;
    } else {
      ++c.n_p;
      if (covers) ++c.n_p_l;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// JSON schemas

json to_json(const ProgramSpectrum& spectrum) {
  json results = json::array();
  for (const auto& r : spectrum.results) {
    json jr = {{"test_id", r.test_id},
               {"verdict", r.failed() ? "fail" : "pass"},
               {"covered_lines", r.covered_lines}};
    if (r.actual_repr) jr["actual"] = *r.actual_repr;
    if (r.error) jr["error"] = {{"kind", r.error->kind}, {"line", r.error->line}};
    results.push_back(std::move(jr));
  }
  return {{"program_id", spectrum.program_id},
          {"executable_lines", spectrum.executable_lines},
          {"results", std::move(results)}};
}

ProgramSpectrum spectrum_from_json(const json& j) {
  try {
    ProgramSpectrum s;
    s.program_id = j.at("program_id").get<std::string>();
    s.executable_lines = j.at("executable_lines").get<std::set<LineIndex>>();
    for (const auto& jr : j.at("results")) {
      TestResult r;
      r.test_id = jr.at("test_id").get<std::string>();
      const auto verdict = jr.at("verdict").get<std::string>();
      if (verdict == "pass") {
        r.verdict = Verdict::kPass;
      } else if (verdict == "fail") {
        r.verdict = Verdict::kFail;
      } else {
        schema_error("verdict must be \"pass\" or \"fail\", got \"" + verdict + "\"");
      }
      if (jr.contains("actual") && !jr.at("actual").is_null()) {
        r.actual_repr = jr.at("actual").get<std::string>();
      }
      if (jr.contains("error") && !jr.at("error").is_null()) {
        const auto& je = jr.at("error");
        r.error = ExecutionError{je.at("kind").get<std::string>(), je.at("line").get<LineIndex>()};
      }
      r.covered_lines = jr.at("covered_lines").get<std::set<LineIndex>>();
      s.results.push_back(std::move(r));
    }
    return s;
  } catch (const json::exception& e) {
    schema_error(std::string("spectrum: ") + e.what());
  }
}

json to_json(const GroundTruth& truth) {
  json alternates = json::object();
  for (const auto& [line, alts] : truth.omission_alternates) alternates[std::to_string(line)] = alts;
  json explanations = json::object();
  for (const auto& [line, texts] : truth.reference_explanations) {
    explanations[std::to_string(line)] = texts;
  }
  return {{"program_id", truth.program_id},
          {"faulty_lines", truth.faulty_lines},
          {"omission_alternates", std::move(alternates)},
          {"explanations", std::move(explanations)}};
}

GroundTruth ground_truth_from_json(const json& j) {
  try {
    GroundTruth t;
    t.program_id = j.at("program_id").get<std::string>();
    t.faulty_lines = j.at("faulty_lines").get<std::set<LineIndex>>();
    if (j.contains("omission_alternates")) {
      for (const auto& [key, value] : j.at("omission_alternates").items()) {
        t.omission_alternates[parse_line_key(key)] = value.get<std::set<LineIndex>>();
      }
    }
    if (j.contains("explanations")) {
      for (const auto& [key, value] : j.at("explanations").items()) {
        t.reference_explanations[parse_line_key(key)] = value.get<std::vector<std::string>>();
      }
    }
    return t;
  } catch (const json::exception& e) {
    schema_error(std::string("ground truth: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Files

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingFile, path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    schema_error(path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kMissingFile, "cannot write " + path.string());
  out << text;
}

void write_json_file(const fs::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

const CorpusEntry* find_entry(const Corpus& corpus, const std::string& program_id) {
  auto it = std::lower_bound(
      corpus.begin(), corpus.end(), program_id,
      [](const CorpusEntry& e, const std::string& id) { return e.program.id < id; });
  return (it != corpus.end() && it->program.id == program_id) ? &*it : nullptr;
}

Corpus load_corpus(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) throw Error(ErrorKind::kMissingFile, manifest_path.string());
  const json manifest = read_json_file(manifest_path);
  const fs::path base = manifest_path.parent_path();

  Corpus corpus;
  std::set<std::string> ids;
  try {
    for (const auto& jp : manifest.at("programs")) {
      CorpusEntry entry;
      SubjectProgram& program = entry.program;
      program.id = jp.at("id").get<std::string>();
      if (!ids.insert(program.id).second) schema_error("duplicate program id " + program.id);

      program.source_lines =
          split_lines(read_text_file(resolve(base, jp.at("source_path").get<std::string>())));
      program.code_description =
          trim_right(read_text_file(resolve(base, jp.at("description_path").get<std::string>())));
      for (const auto& jt : jp.at("tests")) {
        program.test_cases.push_back({jt.at("id").get<std::string>(),
                                      jt.at("input").get<std::string>(),
                                      jt.at("expected").get<std::string>()});
      }
      validate(program);

      if (jp.contains("spectrum_path") && !jp.at("spectrum_path").is_null()) {
        entry.spectrum = spectrum_from_json(
            read_json_file(resolve(base, jp.at("spectrum_path").get<std::string>())));
        validate(*entry.spectrum, program);
      }
      if (jp.contains("ground_truth_path") && !jp.at("ground_truth_path").is_null()) {
        entry.truth = ground_truth_from_json(
            read_json_file(resolve(base, jp.at("ground_truth_path").get<std::string>())));
        validate(*entry.truth, program);
      }
      corpus.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    schema_error(manifest_path.string() + ": " + e.what());
  }

  std::sort(corpus.begin(), corpus.end(),
            [](const CorpusEntry& a, const CorpusEntry& b) { return a.program.id < b.program.id; });
  return corpus;
}

fs::path write_corpus(const Corpus& corpus, const fs::path& dir) {
  json programs = json::array();
  for (const auto& entry : corpus) {
    const auto& program = entry.program;
    const std::string stem = "programs/" + program.id;
    std::string source;
    for (const auto& line : program.source_lines) source += line + "\n";
    write_text_file(dir / (stem + ".py"), source);
    write_text_file(dir / (stem + ".description.txt"), program.code_description + "\n");

    json tests = json::array();
    for (const auto& t : program.test_cases) {
      tests.push_back({{"id", t.id}, {"input", t.input_repr}, {"expected", t.expected_repr}});
    }
    json jp = {{"id", program.id},
               {"source_path", stem + ".py"},
               {"description_path", stem + ".description.txt"},
               {"tests", std::move(tests)}};
    if (entry.spectrum) {
      write_json_file(dir / (stem + ".spectrum.json"), to_json(*entry.spectrum));
      jp["spectrum_path"] = stem + ".spectrum.json";
    }
    if (entry.truth) {
      write_json_file(dir / (stem + ".truth.json"), to_json(*entry.truth));
      jp["ground_truth_path"] = stem + ".truth.json";
    }
    programs.push_back(std::move(jp));
  }
  const fs::path manifest = dir / "manifest.json";
  write_json_file(manifest, json{{"programs", std::move(programs)}});
  return manifest;
}

}  // namespace faultlens
