// pcr: partial code repair from the command line.
//
// Exit codes: 0 compilable (or command succeeded), 1 code left unresolved,
// 2 configuration, toolchain or replay-miss errors. Artifacts go to stdout,
// logs to stderr.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <iostream>
#include <iterator>
#include <map>

#include <unistd.h>

#include "cli_config.hpp"
#include "pcr/eval.hpp"
#include "pcr/subprocess.hpp"
#include "pcr/text.hpp"

namespace fs = std::filesystem;
using namespace pcr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnresolved = 1;
constexpr int kExitError = 2;

// A failure that ends the command with exit code 2.
class CommandError : public Error {
 public:
  using Error::Error;
};

// Raw global flag values; `opts` tells which ones were given.
struct Flags {
  std::string config_path;
  std::map<std::string, CLI::Option*> opts;
  std::vector<std::string> stores, classpath;
  std::string backend, model, lang, trace, workspace, java, javac, compiler, python, example_order, representation,
      data_dir, cache_path;
  int max_rounds = 1;
  int jobs = 1;

  bool given(const char* name) const { return opts.at(name)->count() > 0; }
  cli::ConfigLayer layer() const;
};

cli::ConfigLayer Flags::layer() const {
  cli::ConfigLayer l;
  if (given("backend")) l.backend = backend;
  if (given("store")) l.stores = stores;
  if (given("cache")) l.cache = true;
  if (given("cache-path")) l.cache_path = cache_path;
  if (given("model")) l.model = model;
  if (given("lang")) l.lang = lang;
  if (given("trace")) l.trace = trace;
  if (given("verbose")) l.verbose = true;
  if (given("workspace")) l.workspace = workspace;
  if (given("classpath")) l.classpath = classpath;
  if (given("java")) l.java = java;
  if (given("javac")) l.javac = javac;
  if (given("compiler")) l.compiler = compiler;
  if (given("python")) l.python = python;
  if (given("max-rounds")) l.max_repair_rounds = max_rounds;
  if (given("no-task-description")) l.task_description = false;
  if (given("example-order")) l.example_order = example_order;
  if (given("representation")) l.representation = representation;
  if (given("jobs")) l.jobs = jobs;
  if (given("data-dir")) l.data_dir = data_dir;
  return l;
}

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  }
  return text::read_file(path);
}

Language input_language(const cli::CliConfig& config, const std::string& path) {
  if (config.lang) return *config.lang;
  if (auto lang = language_from_path(path)) return *lang;
  throw CommandError("cannot tell the language of '" + (path.empty() ? std::string("stdin") : path) +
                     "'; pass --lang java or --lang python");
}

std::string variant_label(ChainVariant v) {
  switch (v) {
    case ChainVariant::Chain: return "PCR-Chain";
    case ChainVariant::Direct: return "PCR-D";
    case ChainVariant::CoT: return "PCR-CoT";
    case ChainVariant::ChainNoEME: return "PCR-Chain w/o EME";
  }
  return "";
}

class Session {
 public:
  explicit Session(cli::CliConfig config, std::string default_store) : config_(std::move(config)) {
    if (!config_.stores_given && config_.backend.mode == BackendMode::Replay) {
      config_.backend.store_paths = {(fs::path(config_.data_dir) / "data" / "replay" / default_store).string()};
    }
    if (config_.backend.mode != BackendMode::Replay && config_.backend.live.api_key.empty()) {
      throw CommandError(std::string(to_string(config_.backend.mode)) + " backend needs an API key in PCR_API_KEY");
    }
    if (config_.backend.mode == BackendMode::Record && config_.backend.store_paths.empty()) {
      throw CommandError("record mode needs --store <output file>");
    }
    if (config_.verbose) std::cerr << cli::to_json(config_).dump(2) << "\n";
  }

  const cli::CliConfig& config() const { return config_; }

  Judge& judge() {
    if (!judge_) judge_ = make_compiler_judge(config_.judge);
    return *judge_;
  }

  Chain& chain() {
    if (!chain_) {
      auto units = std::make_shared<UnitLibrary>(
          UnitLibrary::load_dir((fs::path(config_.data_dir) / "data" / "units").string()));
      judge();
      chain_ = std::make_unique<Chain>(make_backend(config_.backend), judge_, units);
    }
    return *chain_;
  }

 private:
  cli::CliConfig config_;
  std::shared_ptr<Judge> judge_;
  std::unique_ptr<Chain> chain_;
};

int report_backend_error(const ChainResult& result) {
  if (result.missing_hash) {
    std::cerr << "pcr: replay miss: no recorded response for prompt hash " << *result.missing_hash << "\n";
  } else {
    std::cerr << "pcr: " << result.error << "\n";
  }
  return kExitError;
}

// ---------------------------------------------------------------------------
// fix

int cmd_fix(Session& s, const std::string& input) {
  const auto& config = s.config();
  auto lang = input_language(config, input);
  auto source = read_input(input);
  if (text::trim(source).empty()) throw CommandError("input '" + (input.empty() ? "stdin" : input) + "' is empty");
  std::string id = input.empty() || input == "-" ? "stdin" : fs::path(input).stem().string();
  CodeSnippet snippet(id, lang, source, input.empty() ? std::nullopt : std::optional<std::string>(input));

  // Code that already compiles is returned as is, without model calls.
  auto before = s.judge().judge(snippet);
  ChainResult result;
  if (before.diagnostics.empty()) {
    result.final_code = source;
    result.status = ChainStatus::Compilable;
    result.final_report = before;
    result.trace.snippet_id = id;
    StepRecord step;
    step.unit_name = "error-judgement";
    step.input_payload = source;
    step.output_payload = "no diagnostics";
    step.duration_ms = before.elapsed_ms;
    result.trace.steps.push_back(step);
  } else {
    result = s.chain().run_chain(snippet, config.chain);
  }
  if (config.trace_dir) {
    auto path = write_trace(result, config.chain.variant, *config.trace_dir);
    spdlog::info("trace written to {}", path);
  }
  if (result.status == ChainStatus::BackendError) return report_backend_error(result);
  std::cout << result.final_code << std::flush;
  spdlog::info("{}: {}", id, to_string(result.status));
  return result.status == ChainStatus::Compilable ? kExitOk : kExitUnresolved;
}

// ---------------------------------------------------------------------------
// unit

InputFields parse_fields(const std::vector<std::string>& specs) {
  InputFields fields;
  for (const auto& spec : specs) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw CommandError("--field expects name=value or name=@file, got '" + spec + "'");
    auto name = spec.substr(0, eq);
    auto value = spec.substr(eq + 1);
    if (!value.empty() && value[0] == '@') value = text::read_file(value.substr(1));
    fields[name] = value;
  }
  return fields;
}

int cmd_unit(Session& s, const std::string& unit_name, const std::string& input,
             const std::vector<std::string>& field_specs) {
  const auto& config = s.config();
  auto unit = parse_unit_name(unit_name);
  auto fields = parse_fields(field_specs);
  if (!fields.count("code")) {
    if (input.empty() && field_specs.empty() && isatty(0)) throw CommandError("unit needs code: a file, stdin or --field code=...");
    fields["code"] = read_input(input);
  }

  // The enhance and fix units take compiler output; judge the code when the
  // caller did not supply it.
  auto needs = unit == UnitName::ErrorMessageEnhance ? "error_message" : unit == UnitName::CodeFix ? "explanation" : "";
  if (*needs && !fields.count(needs)) {
    auto lang = input_language(config, input.empty() ? std::string() : input);
    auto report = s.judge().judge(CodeSnippet("unit-input", lang, fields["code"]));
    if (report.diagnostics.empty()) {
      spdlog::info("code compiles; no {} call made", unit_name);
      if (unit == UnitName::CodeFix) std::cout << fields["code"] << std::flush;
      return kExitOk;
    }
    fields[needs] = format_error_message(report.diagnostics);
  }

  UnitCall call;
  try {
    call = s.chain().call_unit(unit, fields, config.chain);
  } catch (const ReplayMiss& e) {
    std::cerr << "pcr: " << e.what() << "\n";
    return kExitError;
  } catch (const RenderError& e) {
    throw CommandError(e.what());
  }
  const auto& response = call.response.text;
  switch (unit) {
    case UnitName::SimplenameExtraction:
      for (const auto& n : parse_simple_names(response)) std::cout << n << "\n";
      break;
    case UnitName::SimplenameToFqn: {
      std::vector<std::string> requested;
      for (const auto& line : text::split_lines(fields["simple_names"])) {
        if (!text::trim(line).empty()) requested.push_back(text::trim_copy(line));
      }
      auto parsed = parse_fqn_mappings(response, requested);
      for (const auto& m : parsed.mappings) std::cout << m.simple_name << " -> " << m.fqn << (m.suspect ? "  (suspect)" : "") << "\n";
      for (const auto& miss : parsed.misses) spdlog::warn("no mapping for {}", miss);
      break;
    }
    case UnitName::ErrorMessageEnhance:
      std::cout << text::trim_copy(response) << "\n";
      break;
    case UnitName::CodeFix:
      try {
        std::cout << parse_fixed_code(response) << "\n";
      } catch (const ResponseParseError& e) {
        std::cerr << "pcr: " << e.what() << "\n";
        return kExitUnresolved;
      }
      break;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalFlags {
  std::string dataset_path;
  std::string variant;
  bool ablation = false;
  bool sweep = false;
  std::string outcomes_path;
  std::string label;
  std::string out_dir;
  bool reference = false;
};

Dataset load_eval_dataset(const cli::CliConfig& config, const std::string& path) {
  auto ds = load_dataset(path);
  if (ds.records.empty()) throw CommandError(path + ": dataset is empty");
  if (config.lang) {
    ds = filter_language(ds, *config.lang);
    if (ds.records.empty()) throw CommandError(path + ": no " + std::string(to_string(*config.lang)) + " records");
  }
  return ds;
}

void write_report(const std::string& dir, const std::string& name, const nlohmann::json& doc) {
  auto path = (fs::path(dir) / (name + ".json")).string();
  text::write_file_atomic(path, doc.dump(2) + "\n");
  spdlog::info("report written to {}", path);
}

std::string report_dir(const cli::CliConfig& config, const EvalFlags& f) {
  return f.out_dir.empty() ? (fs::path(config.workspace) / "reports").string() : f.out_dir;
}

// Single-language datasets come back whole.
std::vector<Dataset> split_by_language(const Dataset& ds) {
  auto first = ds.records.front().language;
  bool mixed = std::any_of(ds.records.begin(), ds.records.end(), [&](const auto& r) { return r.language != first; });
  if (!mixed) return {ds};
  return {filter_language(ds, Language::JavaLike), filter_language(ds, Language::PythonLike)};
}

std::string language_title(Language lang) { return lang == Language::JavaLike ? "Java-like" : "Python-like"; }

std::vector<MetricsRow> with_reference(std::vector<MetricsRow> rows, bool reference, const Dataset& ds) {
  if (!reference) return rows;
  for (auto& r : reference_rows(ds.records.front().language)) rows.push_back(r);
  return rows;
}

int cmd_eval(Session* s, const cli::CliConfig& config, const EvalFlags& f) {
  if (!f.outcomes_path.empty()) {
    auto outcomes = load_outcomes(f.outcomes_path);
    if (outcomes.empty()) throw CommandError(f.outcomes_path + ": no outcomes");
    auto label = f.label.empty() ? fs::path(f.outcomes_path).stem().string() : f.label;
    auto report = report_from_outcomes(label, "recorded", std::move(outcomes));
    report.self_audit();
    std::cout << render_metrics_table("", {metrics_row(label, report)});
    if (!f.out_dir.empty()) write_report(f.out_dir, label, to_json(report));
    return kExitOk;
  }

  auto full = load_eval_dataset(config, f.dataset_path);
  EvalOptions opts;
  opts.jobs = config.jobs;
  opts.trace_root = config.trace_dir;
  auto dir = report_dir(config, f);
  auto chain_config = config.chain;
  if (!f.variant.empty()) chain_config.variant = parse_variant(f.variant);

  int backend_errors = 0;
  auto count_errors = [&](const EvalReport& r) {
    for (const auto& o : r.outcomes) backend_errors += o.status == to_string(ChainStatus::BackendError);
  };

  // The metrics are per language; a mixed dataset gets one table each.
  auto parts = split_by_language(full);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& ds = parts[i];
    if (i > 0) std::cout << "\n";
    if (parts.size() > 1) std::cout << language_title(ds.records.front().language) << "\n";
    if (f.sweep) {
      auto grid = SensitivityGrid::standard();
      grid.base = chain_config.style;
      auto report = run_sensitivity(ds, s->chain(), chain_config, grid, opts);
      count_errors(report.base);
      for (const auto& r : report.variant_reports) count_errors(r);
      std::cout << render_sensitivity_table(report);
      write_report(dir, ds.id + "-sensitivity", to_json(report));
    } else if (f.ablation) {
      auto reports = run_ablation(ds, s->chain(), chain_config, opts);
      std::vector<MetricsRow> rows;
      nlohmann::json doc = nlohmann::json::array();
      for (const auto& r : reports) {
        count_errors(r);
        rows.push_back(metrics_row(variant_label(parse_variant(r.variant)), r));
        doc.push_back(to_json(r));
      }
      std::cout << render_metrics_table("", with_reference(rows, f.reference, ds));
      write_report(dir, ds.id + "-ablation", doc);
    } else {
      auto report = evaluate(ds, s->chain(), chain_config, opts);
      count_errors(report);
      std::cout << render_metrics_table(
          "", with_reference({metrics_row(variant_label(chain_config.variant), report)}, f.reference, ds));
      write_report(dir, ds.id + "-" + report.variant, to_json(report));
    }
  }
  if (backend_errors > 0) spdlog::warn("{} record run(s) ended in backend errors (see the report)", backend_errors);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// replay-verify

int cmd_replay_verify(Session& s, const EvalFlags& f) {
  const auto& config = s.config();
  auto ds = load_eval_dataset(config, f.dataset_path);
  std::vector<ChainConfig> runs;
  auto base = config.chain;
  if (!f.variant.empty()) base.variant = parse_variant(f.variant);
  if (f.ablation) {
    for (auto v : kAllVariants) {
      auto c = base;
      c.variant = v;
      runs.push_back(c);
    }
  } else if (f.sweep) {
    auto grid = SensitivityGrid::standard();
    grid.base = base.style;
    runs.push_back(base);
    for (const auto& v : grid.variants) {
      auto c = base;
      c.style = v.style;
      runs.push_back(c);
    }
  } else {
    runs.push_back(base);
  }

  int misses = 0, total = 0;
  for (const auto& c : runs) {
    for (const auto& rec : ds.records) {
      ++total;
      auto result = s.chain().run_chain(CodeSnippet(rec.id, rec.language, rec.code), c);
      if (result.status != ChainStatus::BackendError) continue;
      ++misses;
      std::cout << rec.id << "\t" << to_string(c.variant) << "\t" << describe(c.style) << "\t"
                << (result.missing_hash ? *result.missing_hash : result.error) << "\n";
    }
  }
  std::cerr << total << " runs, " << misses << " replay misses\n";
  return misses == 0 ? kExitOk : kExitError;
}

void add_flags(CLI::App& app, Flags& f) {
  auto& o = f.opts;
  app.add_option("--config", f.config_path, "YAML config file")->check(CLI::ExistingFile);
  o["backend"] = app.add_option("--backend", f.backend, "live, record or replay");
  o["store"] = app.add_option("--store", f.stores, "replay store file (repeatable)");
  o["cache"] = app.add_flag("--cache", "cache responses by prompt hash");
  o["cache-path"] = app.add_option("--cache-path", f.cache_path, "persist the cache to this file");
  o["model"] = app.add_option("--model", f.model, "model name");
  o["lang"] = app.add_option("--lang", f.lang, "java or python");
  o["trace"] = app.add_option("--trace", f.trace, "directory for per-snippet trace files");
  o["verbose"] = app.add_flag("-v,--verbose", "debug logging and the resolved config on stderr");
  o["workspace"] = app.add_option("--workspace", f.workspace, "scratch directory");
  o["classpath"] = app.add_option("--classpath", f.classpath, "jar or jar directory (repeatable)");
  o["java"] = app.add_option("--java", f.java, "java launcher");
  o["javac"] = app.add_option("--javac", f.javac, "javac launcher");
  o["compiler"] = app.add_option("--compiler", f.compiler, "janino or javac");
  o["python"] = app.add_option("--python", f.python, "python interpreter");
  o["max-rounds"] = app.add_option("--max-rounds", f.max_rounds, "syntax repair rounds");
  o["no-task-description"] = app.add_flag("--no-task-description", "omit unit task descriptions");
  o["example-order"] = app.add_option("--example-order", f.example_order, "fixed, similar-first or dissimilar-first");
  o["representation"] = app.add_option("--representation", f.representation, "natural-language or semi-structured");
  o["jobs"] = app.add_option("-j,--jobs", f.jobs, "evaluation workers (default: CPU count)");
  o["data-dir"] = app.add_option("--data-dir", f.data_dir, "directory holding data/, share/ and third_party/");
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("pcr");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Partial code repair with an AI chain"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags flags;
  add_flags(app, flags);

  std::string variant;
  auto* fix = app.add_subcommand("fix", "repair one snippet and print the final code");
  std::string fix_input;
  fix->add_option("input", fix_input, "source file, or - for stdin");
  fix->add_option("--variant", variant, "chain, direct, cot or chain-no-eme");

  auto* unit = app.add_subcommand("unit", "run one AI unit and print its parsed output");
  std::string unit_name, unit_input;
  std::vector<std::string> unit_fields;
  unit->add_option("unit", unit_name, "simplename-extraction, simplename-to-fqn, error-message-enhance or code-fix")
      ->required();
  unit->add_option("input", unit_input, "file for the code field");
  unit->add_option("--field", unit_fields, "name=value or name=@file (repeatable)");

  EvalFlags ef;
  auto add_eval_opts = [&](CLI::App* cmd, bool outcomes) {
    cmd->add_option("dataset", ef.dataset_path, "JSONL dataset");
    cmd->add_option("--variant", ef.variant, "chain, direct, cot or chain-no-eme");
    auto* ab = cmd->add_flag("--ablation", ef.ablation, "all four variants");
    auto* sw = cmd->add_flag("--sweep", ef.sweep, "prompt sensitivity grid");
    ab->excludes(sw);
    if (outcomes) {
      cmd->add_option("--outcomes", ef.outcomes_path, "report from recorded per-record outcomes (JSONL)");
      cmd->add_option("--label", ef.label, "row label for --outcomes");
      cmd->add_flag("--reference", ef.reference, "append the published comparison rows");
    }
    cmd->add_option("--out", ef.out_dir, "directory for report JSON (default <workspace>/reports)");
  };
  auto* eval = app.add_subcommand("eval", "evaluate a dataset and print a metrics table");
  add_eval_opts(eval, true);
  auto* record = app.add_subcommand("record", "run a dataset against the live model and record responses");
  add_eval_opts(record, false);
  auto* verify = app.add_subcommand("replay-verify", "check that replay stores cover a dataset");
  add_eval_opts(verify, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    auto fl = flags.layer();
    if (!variant.empty()) fl.variant = variant;

    std::vector<cli::ConfigLayer> layers;
    if (!flags.config_path.empty()) layers.push_back(cli::load_config_file(flags.config_path));
    layers.push_back(cli::layer_from_env(cli::process_env()));
    layers.push_back(fl);
    auto config = cli::resolve(layers);
    if (config.verbose) spdlog::set_level(spdlog::level::debug);

    if (fix->parsed()) {
      Session s(config, "desk-oracle.json");
      return cmd_fix(s, fix_input);
    }
    if (unit->parsed()) {
      Session s(config, "desk-oracle.json");
      return cmd_unit(s, unit_name, unit_input, unit_fields);
    }
    if ((eval->parsed() || record->parsed() || verify->parsed()) && ef.dataset_path.empty() &&
        ef.outcomes_path.empty()) {
      throw CommandError("a dataset path is required");
    }
    std::string default_store = ef.ablation ? "desk-ablation.json" : ef.sweep ? "desk-sensitivity.json" : "desk-oracle.json";
    if (eval->parsed()) {
      if (!ef.outcomes_path.empty()) return cmd_eval(nullptr, config, ef);
      Session s(config, default_store);
      return cmd_eval(&s, config, ef);
    }
    if (record->parsed()) {
      config.backend.mode = BackendMode::Record;
      Session s(config, default_store);
      return cmd_eval(&s, config, ef);
    }
    if (verify->parsed()) {
      config.backend.mode = BackendMode::Replay;
      Session s(config, default_store);
      return cmd_replay_verify(s, ef);
    }
  } catch (const ReplayMiss& e) {
    std::cerr << "pcr: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "pcr: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
