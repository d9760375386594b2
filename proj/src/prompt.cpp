#include "faultlens/prompt.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "faultlens/error.hpp"

namespace faultlens {

using nlohmann::json;

std::string_view slug(PromptVariant variant) {
  switch (variant) {
    case PromptVariant::kBaseline: return "baseline";
    case PromptVariant::kCoT: return "cot";
    case PromptVariant::kTestRes: return "testres";
    case PromptVariant::kSusScore: return "susscore";
    case PromptVariant::kCodeDesc: return "codedesc";
    case PromptVariant::kSusScoreTestRes: return "susscore+testres";
    case PromptVariant::kTestResCodeDesc: return "testres+codedesc";
    case PromptVariant::kSusScoreCodeDesc: return "susscore+codedesc";
    case PromptVariant::kFuseFL: return "fusefl";
  }
  return "unknown";
}

std::string_view display_name(PromptVariant variant) {
  switch (variant) {
    case PromptVariant::kBaseline: return "Baseline";
    case PromptVariant::kCoT: return "CoT";
    case PromptVariant::kTestRes: return "TestRes";
    case PromptVariant::kSusScore: return "SusScore";
    case PromptVariant::kCodeDesc: return "CodeDesc";
    case PromptVariant::kSusScoreTestRes: return "SusScore+TestRes";
    case PromptVariant::kTestResCodeDesc: return "TestRes+CodeDesc";
    case PromptVariant::kSusScoreCodeDesc: return "SusScore+CodeDesc";
    case PromptVariant::kFuseFL: return "FuseFL";
  }
  return "Unknown";
}

std::optional<PromptVariant> parse_variant(std::string_view name) {
  std::string lowered(name);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (PromptVariant v : kAllVariants) {
    if (slug(v) == lowered) return v;
  }
  return std::nullopt;
}

BlockInclusion blocks_for(PromptVariant variant) {
  switch (variant) {
    case PromptVariant::kBaseline:
    case PromptVariant::kCoT: return {};
    case PromptVariant::kTestRes: return {.tests = true};
    case PromptVariant::kSusScore: return {.sbfl = true};
    case PromptVariant::kCodeDesc: return {.description = true};
    case PromptVariant::kSusScoreTestRes: return {.sbfl = true, .tests = true};
    case PromptVariant::kTestResCodeDesc: return {.tests = true, .description = true};
    case PromptVariant::kSusScoreCodeDesc: return {.sbfl = true, .description = true};
    case PromptVariant::kFuseFL: return {.sbfl = true, .tests = true, .description = true};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Templates

TemplateSet TemplateSet::defaults() {
  TemplateSet t;
  t.prompt =
      "The following Python code contains one or more faults. Your task is to localize the "
      "faulty lines of code.\n"
      "\n"
      "{description}{sbfl_block}{test_block}"
      "Code (each line is prefixed with its line number):\n"
      "{code}\n"
      "\n"
      "{instruction}";
  // Paraphrase of the prior-work localization prompt: no extra context and no
  // request for step-by-step reasoning.
  t.baseline =
      "{code}\n"
      "\n"
      "The code above contains a bug. Identify the lines that are most likely to be faulty.\n"
      "{instruction}";
  t.step_by_step_instruction =
      "Provide step-by-step reasoning on why each location is considered potentially faulty. "
      "Answer with a ranked list of the most likely faulty lines, in descending order of "
      "suspicion. Write each entry on its own line in the form:\n"
      "Line <n>: <step-by-step reasoning>";
  t.baseline_instruction =
      "List the suspicious lines in descending order of suspicion. Write each entry on its own "
      "line in the form:\n"
      "Line <n>: <reason>";
  t.description_request =
      "Provide a short code description of the following code:\n"
      "{code}\n"
      "The provided code is expected to pass these test cases:\n"
      "{test_cases}";
  return t;
}

namespace {

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

void load_if_present(const std::filesystem::path& file, std::string& field) {
  if (std::filesystem::exists(file)) field = strip_trailing_newlines(read_text_file(file));
}

}  // namespace

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet t = defaults();
  load_if_present(dir / "prompt.txt", t.prompt);
  load_if_present(dir / "baseline.txt", t.baseline);
  load_if_present(dir / "instruction_cot.txt", t.step_by_step_instruction);
  load_if_present(dir / "instruction_baseline.txt", t.baseline_instruction);
  load_if_present(dir / "description_request.txt", t.description_request);
  return t;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string name(tmpl.substr(i + 1, close - i - 1));
        if (auto it = values.find(name); it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Blocks

std::string numbered_listing(const SubjectProgram& program) {
  std::string out;
  for (int i = 0; i < program.line_count(); ++i) {
    if (i > 0) out += '\n';
    out += fmt::format("{}: {}", i + 1, program.source_lines[static_cast<std::size_t>(i)]);
  }
  return out;
}

namespace {

std::string render_sbfl_block(const SuspiciousnessRanking& ranking, const PromptOptions& options) {
  const auto top = top_suspicious(ranking, options.top_n);
  std::string out = fmt::format(
      "Suspiciousness scores from spectrum-based fault localization ({}), the {} most "
      "suspicious lines in descending order:\n",
      options.sbfl_technique_name, top.size());
  for (const auto& [line, value] : top) out += fmt::format("Line {} (score {:.4f})\n", line, value);
  return out + "\n";
}

std::string render_test_block(const SubjectProgram& program, const std::vector<TestResult>& results) {
  std::string out = "Failing test results:\n";
  for (const auto& result : results) {
    if (!result.failed()) continue;
    const TestCase* test = program.find_test(result.test_id);
    if (!test) {
      throw Error(ErrorKind::kDanglingReference, program.id + ": unknown test id " + result.test_id);
    }
    out += fmt::format("- Test {}\n  Input: {}\n  Expected output: {}\n", test->id, test->input_repr,
                       test->expected_repr);
    if (result.error) {
      out += fmt::format("  Error: {} raised at line {}\n", result.error->kind, result.error->line);
    } else if (result.actual_repr) {
      out += fmt::format("  Actual output: {}\n", *result.actual_repr);
    }
  }
  return out + "\n";
}

std::string render_description_block(const SubjectProgram& program) {
  return "Code description:\n" + program.code_description + "\n\n";
}

[[noreturn]] void missing_input(PromptVariant variant, const char* block) {
  throw Error(ErrorKind::kMissingBlockInput,
              fmt::format("variant {} needs input for block '{}'", display_name(variant), block));
}

}  // namespace

PromptBundle build_prompt(const SubjectProgram& program, PromptVariant variant,
                          const SuspiciousnessRanking* ranking,
                          const std::vector<TestResult>* results, const TemplateSet& templates,
                          const PromptOptions& options) {
  const BlockInclusion inclusion = blocks_for(variant);
  PromptBundle bundle;
  bundle.program_id = program.id;
  bundle.variant = variant;

  if (inclusion.sbfl) {
    if (!ranking) missing_input(variant, kSbflBlock);
    bundle.blocks[kSbflBlock] = render_sbfl_block(*ranking, options);
  }
  if (inclusion.tests) {
    if (!results) missing_input(variant, kTestBlock);
    bundle.blocks[kTestBlock] = render_test_block(program, *results);
  }
  if (inclusion.description) bundle.blocks[kDescriptionBlock] = render_description_block(program);

  auto block_or_empty = [&](const char* name) {
    auto it = bundle.blocks.find(name);
    return it == bundle.blocks.end() ? std::string() : it->second;
  };
  const std::map<std::string, std::string> values = {
      {"code", numbered_listing(program)},
      {"sbfl_block", block_or_empty(kSbflBlock)},
      {"test_block", block_or_empty(kTestBlock)},
      {"description", block_or_empty(kDescriptionBlock)},
      {"instruction", uses_step_by_step(variant) ? templates.step_by_step_instruction
                                                 : templates.baseline_instruction},
  };
  bundle.text = render_template(
      variant == PromptVariant::kBaseline ? templates.baseline : templates.prompt, values);
  bundle.approx_tokens = std::max(1, estimate_tokens(bundle.text));
  return bundle;
}

std::string build_description_prompt(const SubjectProgram& program, const TemplateSet& templates) {
  if (program.test_cases.empty()) {
    throw Error(ErrorKind::kInvalidArgument, program.id + ": no test cases to describe");
  }
  std::string code;
  for (const auto& line : program.source_lines) code += line + "\n";
  std::string tests;
  for (std::size_t i = 0; i < program.test_cases.size(); ++i) {
    const auto& t = program.test_cases[i];
    if (i > 0) tests += '\n';
    tests += fmt::format("assert {} == {}", t.input_repr, t.expected_repr);
  }
  return render_template(templates.description_request, {{"code", code}, {"test_cases", tests}});
}

int estimate_tokens(std::string_view text) {
  int tokens = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool word_char = std::isalnum(c) || c == '_' || c >= 0x80;
    if (word_char) {
      if (!in_word) ++tokens;
      in_word = true;
    } else {
      in_word = false;
      if (!std::isspace(c)) ++tokens;
    }
  }
  return tokens;
}

json to_json(const PromptBundle& bundle) {
  return {{"program_id", bundle.program_id},
          {"variant", slug(bundle.variant)},
          {"text", bundle.text},
          {"blocks", bundle.blocks},
          {"approx_tokens", bundle.approx_tokens}};
}

PromptBundle prompt_bundle_from_json(const json& j) {
  try {
    PromptBundle b;
    b.program_id = j.at("program_id").get<std::string>();
    const auto name = j.at("variant").get<std::string>();
    const auto variant = parse_variant(name);
    if (!variant) throw Error(ErrorKind::kSchemaViolation, "unknown prompt variant " + name);
    b.variant = *variant;
    b.text = j.at("text").get<std::string>();
    b.blocks = j.at("blocks").get<std::map<std::string, std::string>>();
    b.approx_tokens = j.at("approx_tokens").get<int>();
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("prompt bundle: ") + e.what());
  }
}

}  // namespace faultlens
