#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcr/backend.hpp"
#include "pcr/judge.hpp"
#include "pcr/prompt.hpp"
#include "pcr/response_parse.hpp"
#include "pcr/snippet.hpp"

namespace pcr {

enum class ChainVariant { Chain, Direct, CoT, ChainNoEME };

std::string_view to_string(ChainVariant v);
ChainVariant parse_variant(std::string_view s);
inline constexpr ChainVariant kAllVariants[] = {ChainVariant::Chain, ChainVariant::Direct, ChainVariant::CoT,
                                                ChainVariant::ChainNoEME};

struct ChainConfig {
  ChainVariant variant = ChainVariant::Chain;
  int max_repair_rounds = 1;
  PromptStyle style;
  CompletionParams params;

  void validate() const;
};

enum class StepKind { AI, NonAI };

struct StepRecord {
  int index = 0;
  std::string unit_name;
  StepKind kind = StepKind::NonAI;
  std::string input_payload;   // AI: the rendered prompt
  std::string output_payload;  // AI: the raw response
  double duration_ms = 0.0;
  std::optional<std::string> backend_call_id;
  std::optional<std::string> prompt_hash;
  std::optional<std::string> note;  // e.g. why a round was aborted
};

struct ChainTrace {
  std::string snippet_id;
  std::vector<StepRecord> steps;

  std::size_t ai_steps() const;
};

enum class ChainStatus { Compilable, NonFqnRemaining, SyntaxRemaining, BothRemaining, OtherRemaining, BackendError };

std::string_view to_string(ChainStatus s);

// Status implied by a judge report.
ChainStatus status_from(const JudgeReport& report);

struct ChainResult {
  std::string final_code;
  ChainStatus status = ChainStatus::BackendError;
  ChainTrace trace;
  std::optional<JudgeReport> final_report;
  std::string error;                       // set with status BackendError
  std::optional<std::string> missing_hash;  // set on a replay miss
};

nlohmann::json to_json(const ChainResult& result, ChainVariant variant);

// Writes <run_dir>/<snippet id>.trace.json atomically; returns the path.
std::string write_trace(const ChainResult& result, ChainVariant variant, const std::string& run_dir);

// Compiler messages as handed to the enhance and fix units, one per line.
std::string format_error_message(const std::vector<Diagnostic>& diagnostics);

struct UnitCall {
  RenderedPrompt prompt;
  CompletionResponse response;
  double duration_ms = 0.0;
};

class Chain {
 public:
  Chain(std::shared_ptr<Backend> backend, std::shared_ptr<Judge> judge, std::shared_ptr<const UnitLibrary> units);

  ChainResult run_chain(const CodeSnippet& snippet, const ChainConfig& config) const;

  // Simplename Extraction, Simplename to FQN and FQN Supplement. Java-like
  // only; Python-like snippets pass through. Backend failures propagate.
  CodeSnippet run_fqn_inference(const CodeSnippet& snippet, const ChainConfig& config,
                                ChainTrace* trace = nullptr) const;

  // Judge, enhance and fix, for at most max_repair_rounds rounds.
  ChainResult run_syntax_fix(const CodeSnippet& snippet, const ChainConfig& config) const;

  // Renders and sends one unit prompt.
  UnitCall call_unit(UnitName unit, const InputFields& fields, const ChainConfig& config) const;

  const UnitLibrary& units() const { return *units_; }

 private:
  void syntax_fix_into(const CodeSnippet& snippet, const ChainConfig& config, ChainResult& result) const;
  void single_prompt_into(const CodeSnippet& snippet, const ChainConfig& config, ChainResult& result) const;
  JudgeReport judge_step(const std::string& code, const CodeSnippet& like, ChainTrace& trace) const;

  std::shared_ptr<Backend> backend_;
  std::shared_ptr<Judge> judge_;
  std::shared_ptr<const UnitLibrary> units_;
};

}  // namespace pcr
