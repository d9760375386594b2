#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "faultlens/sbfl.hpp"
#include "faultlens/spectra.hpp"

namespace faultlens {

enum class PromptVariant {
  kBaseline,
  kCoT,
  kTestRes,
  kSusScore,
  kCodeDesc,
  kSusScoreTestRes,
  kTestResCodeDesc,
  kSusScoreCodeDesc,
  kFuseFL,
};

inline constexpr std::array<PromptVariant, 9> kAllVariants = {
    PromptVariant::kBaseline,         PromptVariant::kCoT,
    PromptVariant::kTestRes,          PromptVariant::kSusScore,
    PromptVariant::kCodeDesc,         PromptVariant::kSusScoreTestRes,
    PromptVariant::kTestResCodeDesc,  PromptVariant::kSusScoreCodeDesc,
    PromptVariant::kFuseFL};

/// File-safe identifier ("susscore+testres").
std::string_view slug(PromptVariant variant);
/// Table heading ("SusScore+TestRes").
std::string_view display_name(PromptVariant variant);
/// Accepts either the slug or the display name, case-insensitively.
std::optional<PromptVariant> parse_variant(std::string_view name);

// Block names used as keys of PromptBundle::blocks.
inline constexpr const char* kSbflBlock = "sbfl";
inline constexpr const char* kTestBlock = "tests";
inline constexpr const char* kDescriptionBlock = "description";

struct BlockInclusion {
  bool sbfl = false;
  bool tests = false;
  bool description = false;

  bool operator==(const BlockInclusion&) const = default;
};

BlockInclusion blocks_for(PromptVariant variant);

/// Whether the variant closes with the step-by-step reasoning instruction.
inline bool uses_step_by_step(PromptVariant variant) { return variant != PromptVariant::kBaseline; }

/// Prompt wording. Placeholders are {code}, {sbfl_block}, {test_block},
/// {description} and {instruction}; the description request uses {code} and
/// {test_cases}. Defaults are compiled in and mirrored by templates/*.txt.
struct TemplateSet {
  std::string prompt;                // every non-Baseline variant
  std::string baseline;              // Baseline variant
  std::string step_by_step_instruction;
  std::string baseline_instruction;
  std::string description_request;

  static TemplateSet defaults();
  /// Reads prompt.txt, baseline.txt, instruction_cot.txt,
  /// instruction_baseline.txt and description_request.txt from `dir`; files
  /// that are absent keep their default. Trailing newlines are dropped.
  static TemplateSet load(const std::filesystem::path& dir);

  bool operator==(const TemplateSet&) const = default;
};

struct PromptOptions {
  int top_n = 5;  // lines listed in the suspiciousness block
  std::string sbfl_technique_name = "Ochiai";
};

struct PromptBundle {
  std::string program_id;
  PromptVariant variant = PromptVariant::kFuseFL;
  std::string text;
  std::map<std::string, std::string> blocks;
  int approx_tokens = 1;

  bool operator==(const PromptBundle&) const = default;
};

/// Renders one prompt variant. `ranking` is required when the variant carries
/// the suspiciousness block, `results` when it carries the test block;
/// otherwise Error(kMissingBlockInput) is thrown.
PromptBundle build_prompt(const SubjectProgram& program, PromptVariant variant,
                          const SuspiciousnessRanking* ranking,
                          const std::vector<TestResult>* results,
                          const TemplateSet& templates = TemplateSet::defaults(),
                          const PromptOptions& options = {});

/// The request asking a model to describe the program from its code and tests.
/// Throws Error(kInvalidArgument) when the program has no test cases.
std::string build_description_prompt(const SubjectProgram& program,
                                     const TemplateSet& templates = TemplateSet::defaults());

/// "1: first line\n2: second line" ...
std::string numbered_listing(const SubjectProgram& program);

/// Approximate token count: every maximal run of word characters (ASCII
/// letters, digits, '_' and any non-ASCII byte) counts as one token, every
/// other non-whitespace character counts as one token, whitespace counts as
/// nothing. Never decreases when text is appended.
int estimate_tokens(std::string_view text);

/// Replaces {name} for names present in `values`; unknown placeholders are
/// copied through. Substituted text is never rescanned.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

nlohmann::json to_json(const PromptBundle& bundle);
PromptBundle prompt_bundle_from_json(const nlohmann::json& j);

}  // namespace faultlens
