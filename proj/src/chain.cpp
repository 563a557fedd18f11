#include "pcr/chain.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <filesystem>

#include "pcr/supplement.hpp"
#include "pcr/text.hpp"

namespace pcr {

using json = nlohmann::json;

std::string_view to_string(ChainVariant v) {
  switch (v) {
    case ChainVariant::Chain: return "chain";
    case ChainVariant::Direct: return "direct";
    case ChainVariant::CoT: return "cot";
    case ChainVariant::ChainNoEME: return "chain-no-eme";
  }
  return "chain";
}

ChainVariant parse_variant(std::string_view s) {
  auto lower = text::to_lower(s);
  for (auto v : kAllVariants) {
    if (to_string(v) == lower) return v;
  }
  throw ValidationError("unknown variant '" + std::string(s) + "' (expected chain, direct, cot or chain-no-eme)");
}

void ChainConfig::validate() const {
  if (max_repair_rounds < 1) throw ValidationError("max_repair_rounds must be at least 1");
  if (params.temperature < 0) throw ValidationError("temperature must be non-negative");
  if (params.max_output_tokens < 1) throw ValidationError("max_output_tokens must be positive");
  if (params.model_name.empty()) throw ValidationError("model name must not be empty");
}

std::size_t ChainTrace::ai_steps() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.kind == StepKind::AI;
  return n;
}

std::string_view to_string(ChainStatus s) {
  switch (s) {
    case ChainStatus::Compilable: return "compilable";
    case ChainStatus::NonFqnRemaining: return "non-fqn-remaining";
    case ChainStatus::SyntaxRemaining: return "syntax-remaining";
    case ChainStatus::BothRemaining: return "both-remaining";
    case ChainStatus::OtherRemaining: return "other-remaining";
    case ChainStatus::BackendError: return "backend-error";
  }
  return "backend-error";
}

ChainStatus status_from(const JudgeReport& report) {
  if (report.diagnostics.empty()) return ChainStatus::Compilable;
  auto st = resolution_status(report);
  if (!st.non_fqn_free && !st.syntax_free) return ChainStatus::BothRemaining;
  if (!st.non_fqn_free) return ChainStatus::NonFqnRemaining;
  if (!st.syntax_free) return ChainStatus::SyntaxRemaining;
  return ChainStatus::OtherRemaining;
}

std::string format_error_message(const std::vector<Diagnostic>& diagnostics) {
  std::string out;
  for (const auto& d : diagnostics) {
    if (d.line) out += "Line " + std::to_string(*d.line) + ": ";
    out += d.raw_message + "\n";
  }
  return out;
}

namespace {

json diagnostic_json(const Diagnostic& d) {
  json j = {{"message", d.raw_message}, {"category", to_string(d.category)}};
  j["line"] = d.line ? json(*d.line) : json(nullptr);
  j["column"] = d.column ? json(*d.column) : json(nullptr);
  if (d.recovered) j["recovered"] = true;
  return j;
}

// Judge output as recorded in the trace.
std::string describe_report(const JudgeReport& r) {
  if (r.diagnostics.empty()) return "no diagnostics";
  std::string out;
  for (const auto& d : r.diagnostics) {
    out += (d.line ? std::to_string(*d.line) : std::string("?")) + ": [" + std::string(to_string(d.category)) + "] " +
           d.raw_message + "\n";
  }
  return out;
}

double ms_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
}

void push_step(ChainTrace& trace, StepRecord step) {
  step.index = static_cast<int>(trace.steps.size());
  trace.steps.push_back(std::move(step));
}

void push_ai_step(ChainTrace& trace, std::string unit, const UnitCall& call, std::optional<std::string> note = {}) {
  StepRecord s;
  s.unit_name = std::move(unit);
  s.kind = StepKind::AI;
  s.input_payload = call.prompt.text;
  s.output_payload = call.response.text;
  s.duration_ms = call.duration_ms;
  s.backend_call_id = call.response.call_id;
  s.prompt_hash = call.prompt.content_hash;
  s.note = std::move(note);
  push_step(trace, std::move(s));
}

std::string join_names(const std::vector<std::string>& names) { return text::join(names, "\n"); }

std::string describe_mappings(const std::vector<FqnMapping>& mappings) {
  std::string out;
  for (const auto& m : mappings) out += m.simple_name + " -> " + m.fqn + (m.suspect ? " (suspect)" : "") + "\n";
  return out;
}

}  // namespace

json to_json(const ChainResult& result, ChainVariant variant) {
  json steps = json::array();
  for (const auto& s : result.trace.steps) {
    json j = {{"index", s.index},
              {"unit_name", s.unit_name},
              {"kind", s.kind == StepKind::AI ? "ai" : "non-ai"},
              {"input_payload", s.input_payload},
              {"output_payload", s.output_payload},
              {"duration_ms", s.duration_ms}};
    j["backend_call_id"] = s.backend_call_id ? json(*s.backend_call_id) : json(nullptr);
    if (s.prompt_hash) j["prompt_hash"] = *s.prompt_hash;
    if (s.note) j["note"] = *s.note;
    steps.push_back(std::move(j));
  }
  json doc = {{"snippet_id", result.trace.snippet_id},
              {"variant", to_string(variant)},
              {"status", to_string(result.status)},
              {"final_code", result.final_code},
              {"steps", std::move(steps)}};
  if (result.final_report) {
    json diags = json::array();
    for (const auto& d : result.final_report->diagnostics) diags.push_back(diagnostic_json(d));
    doc["final_judgement"] = {{"wrap_level", to_string(result.final_report->wrap_level_used)},
                              {"compiler", result.final_report->compiler},
                              {"compiler_exit", result.final_report->compiler_exit},
                              {"diagnostics", std::move(diags)}};
  }
  if (!result.error.empty()) doc["error"] = result.error;
  return doc;
}

std::string write_trace(const ChainResult& result, ChainVariant variant, const std::string& run_dir) {
  auto path = (std::filesystem::path(run_dir) / (result.trace.snippet_id + ".trace.json")).string();
  text::write_file_atomic(path, to_json(result, variant).dump(2) + "\n");
  return path;
}

Chain::Chain(std::shared_ptr<Backend> backend, std::shared_ptr<Judge> judge, std::shared_ptr<const UnitLibrary> units)
    : backend_(std::move(backend)), judge_(std::move(judge)), units_(std::move(units)) {
  if (!backend_ || !judge_ || !units_) throw ValidationError("chain needs a backend, a judge and unit templates");
}

UnitCall Chain::call_unit(UnitName unit, const InputFields& fields, const ChainConfig& config) const {
  UnitCall call;
  call.prompt = render_prompt(units_->get(unit), fields, config.style);
  auto start = std::chrono::steady_clock::now();
  call.response = backend_->complete(CompletionRequest{call.prompt, config.params});
  call.duration_ms = ms_since(start);
  return call;
}

JudgeReport Chain::judge_step(const std::string& code, const CodeSnippet& like, ChainTrace& trace) const {
  auto start = std::chrono::steady_clock::now();
  auto report = judge_->judge(like.with_source(code));
  StepRecord s;
  s.unit_name = "error-judgement";
  s.kind = StepKind::NonAI;
  s.input_payload = code;
  s.output_payload = describe_report(report);
  s.duration_ms = ms_since(start);
  push_step(trace, std::move(s));
  return report;
}

CodeSnippet Chain::run_fqn_inference(const CodeSnippet& snippet, const ChainConfig& config,
                                     ChainTrace* trace) const {
  if (snippet.language() != Language::JavaLike) return snippet;
  ChainTrace scratch;
  ChainTrace& t = trace ? *trace : scratch;

  auto extraction = call_unit(UnitName::SimplenameExtraction, {{"code", snippet.source()}}, config);
  auto names = parse_simple_names(extraction.response.text);
  push_ai_step(t, std::string(to_string(UnitName::SimplenameExtraction)), extraction);
  if (names.empty()) return snippet;

  auto mapping = call_unit(UnitName::SimplenameToFqn, {{"code", snippet.source()}, {"simple_names", join_names(names)}},
                           config);
  auto parsed = parse_fqn_mappings(mapping.response.text, names);
  std::optional<std::string> note;
  if (!parsed.misses.empty()) note = "unmapped: " + text::join(parsed.misses, ", ");
  push_ai_step(t, std::string(to_string(UnitName::SimplenameToFqn)), mapping, note);

  auto start = std::chrono::steady_clock::now();
  auto supplemented = supplement_fqns_detailed(snippet.source(), parsed.mappings);
  StepRecord s;
  s.unit_name = "fqn-supplement";
  s.kind = StepKind::NonAI;
  s.input_payload = describe_mappings(parsed.mappings);
  s.output_payload = supplemented.code;
  s.duration_ms = ms_since(start);
  if (!supplemented.skipped.empty()) s.note = "skipped: " + text::join(supplemented.skipped, "; ");
  push_step(t, std::move(s));
  return snippet.with_source(supplemented.code);
}

void Chain::syntax_fix_into(const CodeSnippet& snippet, const ChainConfig& config, ChainResult& result) const {
  std::string code = snippet.source();
  result.final_code = code;
  for (int round = 0;; ++round) {
    auto report = judge_step(code, snippet, result.trace);
    result.final_code = code;
    result.final_report = report;
    result.status = status_from(report);
    if (report.diagnostics.empty() || round >= config.max_repair_rounds) return;

    auto error_message = format_error_message(report.diagnostics);
    std::string explanation = error_message;
    if (config.variant != ChainVariant::ChainNoEME) {
      auto eme = call_unit(UnitName::ErrorMessageEnhance, {{"code", code}, {"error_message", error_message}}, config);
      explanation = text::trim_copy(eme.response.text);
      if (explanation.empty()) {
        push_ai_step(result.trace, std::string(to_string(UnitName::ErrorMessageEnhance)), eme,
                     "empty explanation; round aborted");
        continue;
      }
      push_ai_step(result.trace, std::string(to_string(UnitName::ErrorMessageEnhance)), eme);
    }

    auto fix = call_unit(UnitName::CodeFix, {{"code", code}, {"explanation", explanation}}, config);
    try {
      auto fixed = parse_fixed_code(fix.response.text);
      push_ai_step(result.trace, std::string(to_string(UnitName::CodeFix)), fix);
      // Keep the snippet's trailing-newline convention.
      if (text::ends_with(code, "\n") && !text::ends_with(fixed, "\n")) fixed += "\n";
      code = std::move(fixed);
    } catch (const ResponseParseError& e) {
      push_ai_step(result.trace, std::string(to_string(UnitName::CodeFix)), fix,
                   std::string("unparseable response; round aborted: ") + e.what());
    }
  }
}

void Chain::single_prompt_into(const CodeSnippet& snippet, const ChainConfig& config, ChainResult& result) const {
  std::string code = snippet.source();
  UnitCall call;
  call.prompt = config.variant == ChainVariant::Direct ? render_direct_prompt(code) : render_cot_prompt(code);
  auto start = std::chrono::steady_clock::now();
  call.response = backend_->complete(CompletionRequest{call.prompt, config.params});
  call.duration_ms = ms_since(start);
  try {
    auto fixed = parse_fixed_code(call.response.text);
    push_ai_step(result.trace, call.prompt.unit_name, call);
    if (text::ends_with(code, "\n") && !text::ends_with(fixed, "\n")) fixed += "\n";
    code = std::move(fixed);
  } catch (const ResponseParseError& e) {
    push_ai_step(result.trace, call.prompt.unit_name, call, std::string("unparseable response: ") + e.what());
  }
  auto report = judge_step(code, snippet, result.trace);
  result.final_code = code;
  result.final_report = report;
  result.status = status_from(report);
}

ChainResult Chain::run_chain(const CodeSnippet& snippet, const ChainConfig& config) const {
  config.validate();
  ChainResult result;
  result.trace.snippet_id = snippet.id();
  result.final_code = snippet.source();
  try {
    if (config.variant == ChainVariant::Direct || config.variant == ChainVariant::CoT) {
      single_prompt_into(snippet, config, result);
    } else {
      auto supplemented = run_fqn_inference(snippet, config, &result.trace);
      result.final_code = supplemented.source();
      syntax_fix_into(supplemented, config, result);
    }
  } catch (const ReplayMiss& e) {
    result.status = ChainStatus::BackendError;
    result.error = e.what();
    result.missing_hash = e.hash();
    result.final_report.reset();
  } catch (const BackendError& e) {
    result.status = ChainStatus::BackendError;
    result.error = e.what();
    result.final_report.reset();
  }
  return result;
}

ChainResult Chain::run_syntax_fix(const CodeSnippet& snippet, const ChainConfig& config) const {
  config.validate();
  ChainResult result;
  result.trace.snippet_id = snippet.id();
  result.final_code = snippet.source();
  try {
    syntax_fix_into(snippet, config, result);
  } catch (const ReplayMiss& e) {
    result.status = ChainStatus::BackendError;
    result.error = e.what();
    result.missing_hash = e.hash();
    result.final_report.reset();
  } catch (const BackendError& e) {
    result.status = ChainStatus::BackendError;
    result.error = e.what();
    result.final_report.reset();
  }
  return result;
}

}  // namespace pcr
