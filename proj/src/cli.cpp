#include "faultlens/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "faultlens/error.hpp"
#include "faultlens/eval.hpp"
#include "faultlens/ml_localizer.hpp"
#include "faultlens/parallel.hpp"
#include "faultlens/sbfl.hpp"
#include "faultlens/scoring.hpp"
#include "faultlens/spectra.hpp"

namespace faultlens::cli {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  if (mode == CompletionMode::kReplay && !cassette_dir) {
    throw Error(ErrorKind::kInvalidArgument, "replay mode requires --cassettes");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("alpha {} is outside (0, 1)", alpha));
  }
  if (top_n < 1) throw Error(ErrorKind::kInvalidArgument, "--top must be positive");
}

Environment Environment::system() {
  Environment env;
  env.make_transport = [] { return make_http_transport(); };
  env.getenv = [](const std::string& name) -> std::optional<std::string> {
    if (const char* value = std::getenv(name.c_str())) return std::string(value);
    return std::nullopt;
  };
  env.out = &std::cout;
  env.err = &std::cerr;
  return env;
}

namespace {

// Stage artifact layout under --out.
fs::path rankings_dir(const RunConfig& c, std::string_view label) {
  return c.out_dir / "rankings" / std::string(label);
}
fs::path prompts_dir(const RunConfig& c, PromptVariant v) {
  return c.out_dir / "prompts" / std::string(slug(v));
}
fs::path exchanges_dir(const RunConfig& c, PromptVariant v) {
  return c.out_dir / "exchanges" / std::string(slug(v));
}
fs::path answers_dir(const RunConfig& c, PromptVariant v) {
  return c.out_dir / "answers" / std::string(slug(v));
}

std::vector<std::string> all_technique_labels() {
  std::vector<std::string> labels;
  for (Technique t : kAllTechniques) labels.emplace_back(label(t));
  labels.emplace_back(kMlTechniqueLabel);
  return labels;
}

std::vector<std::string> resolve_techniques(const std::vector<std::string>& names) {
  const auto known = all_technique_labels();
  if (names.empty() || std::find(names.begin(), names.end(), "all") != names.end()) return known;
  std::vector<std::string> out;
  for (const auto& name : names) {
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("unknown technique '{}' (expected one of: {}, all)", name,
                              fmt::join(known, ", ")));
    }
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  // Canonical column order regardless of how they were given.
  std::vector<std::string> ordered;
  for (const auto& k : known) {
    if (std::find(out.begin(), out.end(), k) != out.end()) ordered.push_back(k);
  }
  return ordered;
}

std::vector<PromptVariant> resolve_variants(const std::vector<std::string>& names) {
  if (names.empty() || std::find(names.begin(), names.end(), "all") != names.end()) {
    return {kAllVariants.begin(), kAllVariants.end()};
  }
  std::set<PromptVariant> chosen;
  for (const auto& name : names) {
    auto v = parse_variant(name);
    if (!v) throw Error(ErrorKind::kInvalidArgument, "unknown prompt variant '" + name + "'");
    chosen.insert(*v);
  }
  std::vector<PromptVariant> out;
  for (PromptVariant v : kAllVariants) {
    if (chosen.contains(v)) out.push_back(v);
  }
  return out;
}

Corpus load_nonempty(const RunConfig& config) {
  if (config.manifest.empty()) throw Error(ErrorKind::kInvalidArgument, "--manifest is required");
  Corpus corpus = load_corpus(config.manifest);
  if (corpus.empty()) throw Error(ErrorKind::kEmptySpectrum, "corpus has no programs");
  return corpus;
}

void require_out(const RunConfig& config) {
  if (config.out_dir.empty()) throw Error(ErrorKind::kInvalidArgument, "--out is required");
}

const ProgramSpectrum& require_spectrum(const CorpusEntry& entry) {
  if (!entry.spectrum) {
    throw Error(ErrorKind::kEmptySpectrum, entry.program.id + " has no spectrum");
  }
  return *entry.spectrum;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kSchemaViolation:
    case ErrorKind::kDanglingReference:
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kUnknownLine:
    case ErrorKind::kMissingBlockInput:
    case ErrorKind::kLengthMismatch:
      return kSchemaError;
    case ErrorKind::kMissingFile:
    case ErrorKind::kEmptySpectrum:
    case ErrorKind::kIncompleteCoverage:
    case ErrorKind::kNoFailingTests:
      return kMissingInput;
    case ErrorKind::kCassetteMiss: return kCassetteMiss;
    case ErrorKind::kAuthError: return kAuthError;
    case ErrorKind::kNetworkError:
    case ErrorKind::kRateLimited:
      return kNetworkError;
    case ErrorKind::kTokenBudgetExceeded: return kTokenBudget;
    default: return kFailure;
  }
}

// ---------------------------------------------------------------------------
// Commands

int cmd_ingest(const RunConfig& config, const Environment& env) {
  const Corpus corpus = load_corpus(config.manifest);
  auto& out = *env.out;
  out << fmt::format("{} programs\n", corpus.size());
  for (const auto& entry : corpus) {
    std::string category = "-";
    if (entry.spectrum) category = std::string(to_string(categorize_error(*entry.spectrum)));
    out << fmt::format("  {:<20} lines={:<3} tests={:<2} spectrum={} truth={} category={}\n",
                       entry.program.id, entry.program.line_count(),
                       entry.program.test_cases.size(), entry.spectrum ? "yes" : "no",
                       entry.truth ? "yes" : "no", category);
  }
  if (!config.out_dir.empty()) {
    const fs::path manifest = write_corpus(corpus, config.out_dir / "corpus");
    out << fmt::format("normalized corpus written to {}\n", manifest.string());
  }
  return kOk;
}

int cmd_localize(const RunConfig& config, const Environment& env) {
  require_out(config);
  const Corpus corpus = load_nonempty(config);
  for (const auto& entry : corpus) require_spectrum(entry);

  struct Job {
    const CorpusEntry* entry;
    std::string technique;
  };
  std::vector<Job> jobs;
  for (const auto& technique : config.techniques) {
    for (const auto& entry : corpus) jobs.push_back({&entry, technique});
  }
  parallel_for(jobs.size(), config.jobs, [&](std::size_t i) {
    const auto& job = jobs[i];
    const ProgramSpectrum& spectrum = *job.entry->spectrum;
    const SuspiciousnessRanking ranking = job.technique == kMlTechniqueLabel
                                              ? localize_ml(spectrum)
                                              : rank(spectrum, *parse_technique(job.technique));
    write_json_file(rankings_dir(config, job.technique) / (job.entry->program.id + ".json"),
                    to_json(ranking));
  });
  *env.out << fmt::format("wrote {} ranking files under {}\n", jobs.size(),
                          (config.out_dir / "rankings").string());
  return kOk;
}

struct PromptSettings {
  std::string sbfl_technique = "ochiai";
  std::optional<fs::path> templates;
  bool description_requests = false;
};

int cmd_prompt(const RunConfig& config, PromptSettings settings, const Environment& env) {
  require_out(config);
  const Corpus corpus = load_nonempty(config);
  if (const auto technique = parse_technique(settings.sbfl_technique)) {
    settings.sbfl_technique = std::string(label(*technique));
  } else if (settings.sbfl_technique != kMlTechniqueLabel) {
    throw Error(ErrorKind::kInvalidArgument,
                "unknown --sbfl-technique '" + settings.sbfl_technique + "'");
  }
  const TemplateSet templates =
      settings.templates ? TemplateSet::load(*settings.templates) : TemplateSet::defaults();
  PromptOptions options;
  options.top_n = config.top_n;
  options.sbfl_technique_name = display_label(settings.sbfl_technique);

  struct Job {
    const CorpusEntry* entry;
    PromptVariant variant;
  };
  std::vector<Job> jobs;
  for (PromptVariant v : config.variants) {
    for (const auto& entry : corpus) jobs.push_back({&entry, v});
  }
  parallel_for(jobs.size(), config.jobs, [&](std::size_t i) {
    const auto& [entry, variant] = jobs[i];
    const BlockInclusion blocks = blocks_for(variant);
    std::optional<SuspiciousnessRanking> ranking;
    if (blocks.sbfl) {
      const fs::path file =
          rankings_dir(config, settings.sbfl_technique) / (entry->program.id + ".json");
      if (!fs::exists(file)) {
        throw Error(ErrorKind::kMissingFile, file.string() + " (run `localize` first)");
      }
      ranking = ranking_from_json(read_json_file(file));
    }
    const std::vector<TestResult>* results = nullptr;
    if (blocks.tests) results = &require_spectrum(*entry).results;
    const PromptBundle bundle = build_prompt(entry->program, variant,
                                             ranking ? &*ranking : nullptr, results, templates,
                                             options);
    write_json_file(prompts_dir(config, variant) / (entry->program.id + ".json"), to_json(bundle));
  });

  if (settings.description_requests) {
    for (const auto& entry : corpus) {
      write_text_file(config.out_dir / "description_requests" / (entry.program.id + ".txt"),
                      build_description_prompt(entry.program, templates) + "\n");
    }
  }
  *env.out << fmt::format("wrote {} prompt bundles under {}\n", jobs.size(),
                          (config.out_dir / "prompts").string());
  return kOk;
}

struct ModelSettings {
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
};

int cmd_run(const RunConfig& config, const ModelSettings& model, const Environment& env) {
  require_out(config);
  const Corpus corpus = load_nonempty(config);

  GatewayConfig gateway_config;
  gateway_config.mode = config.mode;
  gateway_config.model_name = model.model;
  gateway_config.temperature = model.temperature;
  gateway_config.max_in_flight = config.jobs;
  if (auto url = env.getenv(kUrlEnvVar); url && !url->empty()) gateway_config.endpoint_url = *url;
  if (auto key = env.getenv(kKeyEnvVar)) gateway_config.api_key = *key;

  std::shared_ptr<CassetteStore> store;
  if (config.cassette_dir) store = std::make_shared<CassetteStore>(*config.cassette_dir);
  LlmGateway gateway(gateway_config, env.make_transport ? env.make_transport() : nullptr, store,
                     env.sleeper);

  struct Job {
    const CorpusEntry* entry;
    PromptVariant variant;
    fs::path bundle_file;
  };
  std::vector<Job> jobs;
  for (PromptVariant v : config.variants) {
    const fs::path dir = prompts_dir(config, v);
    if (!fs::exists(dir)) continue;
    for (const auto& entry : corpus) {
      const fs::path file = dir / (entry.program.id + ".json");
      if (!fs::exists(file)) {
        throw Error(ErrorKind::kMissingFile, file.string() + " (run `prompt` first)");
      }
      jobs.push_back({&entry, v, file});
    }
  }
  if (jobs.empty()) throw Error(ErrorKind::kMissingFile, "no prompt bundles (run `prompt` first)");

  std::vector<ParsedAnswer> answers(jobs.size());
  parallel_for(jobs.size(), config.jobs, [&](std::size_t i) {
    const auto& job = jobs[i];
    const PromptBundle bundle = prompt_bundle_from_json(read_json_file(job.bundle_file));
    const Exchange exchange = gateway.complete(bundle);
    answers[i] = parse_answer(exchange, job.entry->program);
    const std::string name = job.entry->program.id + ".json";
    write_json_file(exchanges_dir(config, job.variant) / name, to_json(exchange));
    write_json_file(answers_dir(config, job.variant) / name, to_json(answers[i]));
  });

  int unparseable = 0;
  int dropped = 0;
  for (const auto& a : answers) {
    unparseable += a.unparseable ? 1 : 0;
    dropped += a.dropped_out_of_range + a.dropped_duplicates;
  }
  const GatewayStats stats = gateway.stats();
  *env.out << fmt::format(
      "{} completions ({} mode): {} replayed, {} network attempts, {} retries; "
      "{} unparseable answers, {} dropped entries\n",
      stats.completions, to_string(config.mode), stats.replays, stats.network_attempts,
      stats.retries, unparseable, dropped);
  return kOk;
}

struct EvalSettings {
  std::string scorer = "lexical";
  std::string scorer_url;
};

std::vector<fs::path> json_files_in(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (item.is_regular_file() && item.path().extension() == ".json") files.push_back(item.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

int cmd_eval(const RunConfig& config, const EvalSettings& settings, const Environment& env) {
  require_out(config);
  const Corpus corpus = load_nonempty(config);

  std::vector<LabeledAssignments> assignments;
  for (const auto& technique : all_technique_labels()) {
    const fs::path dir = rankings_dir(config, technique);
    if (!fs::exists(dir)) continue;
    LabeledAssignments labeled{technique, {}};
    for (const auto& file : json_files_in(dir)) {
      labeled.assignments.push_back(RankAssignment::from_ranking(ranking_from_json(read_json_file(file))));
    }
    assignments.push_back(std::move(labeled));
  }
  std::vector<LabeledAnswers> answers;
  for (PromptVariant v : kAllVariants) {
    const fs::path dir = answers_dir(config, v);
    if (!fs::exists(dir)) continue;
    LabeledAnswers labeled{std::string(slug(v)), {}};
    LabeledAssignments ranks{std::string(slug(v)), {}};
    for (const auto& file : json_files_in(dir)) {
      labeled.answers.push_back(parsed_answer_from_json(read_json_file(file)));
      ranks.assignments.push_back(RankAssignment::from_answer(labeled.answers.back(), ranks.label));
    }
    assignments.push_back(std::move(ranks));
    answers.push_back(std::move(labeled));
  }
  if (assignments.empty()) {
    throw Error(ErrorKind::kMissingFile, "no rankings or answers under " + config.out_dir.string());
  }

  std::unique_ptr<ExplanationScorer> scorer;
  if (settings.scorer == "lexical") {
    scorer = std::make_unique<LexicalScorer>();
  } else if (settings.scorer == "remote") {
    if (settings.scorer_url.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "--scorer remote needs --scorer-url");
    }
    scorer = std::make_unique<RemoteScorer>(settings.scorer_url, env.make_transport());
  } else {
    throw Error(ErrorKind::kInvalidArgument, "unknown scorer '" + settings.scorer + "'");
  }

  const LocalizationReport report = build_report(corpus, assignments, answers, *scorer, config.alpha);
  const std::string text = render_text(report);
  write_json_file(config.out_dir / "report.json", to_json(report));
  write_text_file(config.out_dir / "report.txt", text);
  *env.out << text;
  return kOk;
}

int cmd_report(const RunConfig& config, const Environment& env) {
  require_out(config);
  const fs::path file = config.out_dir / "report.json";
  if (!fs::exists(file)) throw Error(ErrorKind::kMissingFile, file.string() + " (run `eval` first)");
  *env.out << render_text(report_from_json(read_json_file(file)));
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, const Environment& env) {
  CLI::App app{"faultlens: spectrum-based and LLM-assisted fault localization pipeline",
               "faultlens"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string manifest;
  std::string out_dir;
  std::string mode_name = "replay";
  std::string cassettes;
  int jobs = 4;
  app.add_option("--manifest", manifest, "Corpus manifest (JSON)");
  app.add_option("--out", out_dir, "Directory for stage artifacts");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--mode", mode_name, "Model access: live, record or replay")
      ->check(CLI::IsMember({"live", "record", "replay"}));
  app.add_option("--cassettes", cassettes, "Cassette directory for record/replay");

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and summarize it");
  auto* localize = app.add_subcommand("localize", "Rank lines with SBFL and the decision tree");
  std::vector<std::string> techniques;
  localize->add_option("--technique", techniques,
                       "tarantula, ochiai, op2, barinel, dstar, xai4fl-style or all")
      ->delimiter(',');

  auto* prompt = app.add_subcommand("prompt", "Render prompt variants");
  std::vector<std::string> variant_names;
  PromptSettings prompt_settings;
  std::string templates_dir;
  int top_n = 5;
  prompt->add_option("--variant", variant_names, "Prompt variant(s) or all")->delimiter(',');
  prompt->add_option("--sbfl-technique", prompt_settings.sbfl_technique,
                     "Ranking used for the suspiciousness block");
  prompt->add_option("--top", top_n, "Lines in the suspiciousness block")->check(CLI::PositiveNumber);
  prompt->add_option("--templates", templates_dir, "Directory with template overrides");
  prompt->add_flag("--description-requests", prompt_settings.description_requests,
                   "Also write code-description requests");

  auto* run_cmd = app.add_subcommand("run", "Query or replay the model for rendered prompts");
  ModelSettings model;
  run_cmd->add_option("--variant", variant_names, "Prompt variant(s) or all")->delimiter(',');
  run_cmd->add_option("--model", model.model, "Model name");
  run_cmd->add_option("--temperature", model.temperature, "Sampling temperature");

  auto* eval = app.add_subcommand("eval", "Evaluate rankings and answers, write the report");
  EvalSettings eval_settings;
  double alpha = 0.01;
  eval->add_option("--alpha", alpha, "Significance level");
  eval->add_option("--scorer", eval_settings.scorer, "Explanation scorer: lexical or remote");
  eval->add_option("--scorer-url", eval_settings.scorer_url, "Endpoint of the remote scorer");

  auto* report = app.add_subcommand("report", "Print the tables of an existing report");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, *env.out, *env.err);
    return code == 0 ? kOk : kSchemaError;
  }

  try {
    RunConfig config;
    config.manifest = manifest;
    config.out_dir = out_dir;
    config.mode = *parse_mode(mode_name);
    if (!cassettes.empty()) config.cassette_dir = cassettes;
    config.jobs = jobs;
    config.top_n = top_n;
    config.alpha = alpha;

    if (ingest->parsed()) {
      if (config.manifest.empty()) throw Error(ErrorKind::kInvalidArgument, "--manifest is required");
      return cmd_ingest(config, env);
    }
    if (localize->parsed()) {
      config.techniques = resolve_techniques(techniques);
      return cmd_localize(config, env);
    }
    if (prompt->parsed()) {
      config.variants = resolve_variants(variant_names);
      if (!templates_dir.empty()) prompt_settings.templates = fs::path(templates_dir);
      return cmd_prompt(config, prompt_settings, env);
    }
    if (run_cmd->parsed()) {
      config.variants = resolve_variants(variant_names);
      config.validate();
      return cmd_run(config, model, env);
    }
    if (eval->parsed()) {
      if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
        throw Error(ErrorKind::kInvalidArgument, fmt::format("alpha {} is outside (0, 1)", alpha));
      }
      return cmd_eval(config, eval_settings, env);
    }
    if (report->parsed()) return cmd_report(config, env);
  } catch (const Error& e) {
    *env.err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    *env.err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace faultlens::cli
