#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcr/chain.hpp"

namespace pcr {

enum class ErrorKind { NonFqn, LastMileSyntax };

std::string_view to_string(ErrorKind k);  // non_fqn, last_mile_syntax
ErrorKind parse_error_kind(std::string_view s);

struct DatasetRecord {
  std::string id;
  Language language = Language::JavaLike;
  std::string code;
  std::optional<std::vector<FqnMapping>> expected_fqns;
  std::set<ErrorKind> error_kinds;
};

struct Dataset {
  std::string id;
  std::vector<DatasetRecord> records;
};

// JSONL, one record per line:
//   {"id": "...", "language": "java", "code": "...",
//    "expected_fqns": [{"simple_name": "...", "fqn": "..."}],
//    "error_kinds": ["non_fqn", "last_mile_syntax"]}
// Blank lines are skipped. Errors name the line and the field. The dataset id
// defaults to the file stem.
Dataset parse_dataset(std::string_view jsonl, const std::string& origin, std::string dataset_id);
Dataset load_dataset(const std::string& path);

// Records of one language, in dataset order; the id gains a "-java" or
// "-python" suffix.
Dataset filter_language(const Dataset& dataset, Language language);

struct RecordOutcome {
  std::string id;
  Language language = Language::JavaLike;
  std::set<ErrorKind> error_kinds;
  bool non_fqn_resolved = false;
  bool syntax_resolved = false;
  bool non_fqn_verifiable = true;
  std::string status;  // ChainStatus spelling, or "recorded" for ingested outcomes
  std::optional<std::string> error;
  // Expected FQNs present in the final code (import or qualified use).
  std::optional<int> gold_total;
  std::optional<int> gold_present;

  bool all_resolved() const;
};

struct EvalReport {
  std::string dataset_id;
  std::string variant;
  std::size_t dataset_size = 0;
  // Unset when no record carries a non-FQN error (rendered "-").
  std::optional<int> resolved_non_fqns;
  int resolved_syntax = 0;
  int all_resolved = 0;
  int non_fqn_unverifiable = 0;
  std::vector<RecordOutcome> outcomes;  // dataset order
  nlohmann::json config = nlohmann::json::object();

  // Recomputes the counts from `outcomes` and checks the report invariants;
  // throws Error naming the first mismatch.
  void self_audit() const;
};

// The single reduction from outcomes to metric counts.
EvalReport report_from_outcomes(std::string dataset_id, std::string variant, std::vector<RecordOutcome> outcomes);

// Recorded per-record outcomes, JSONL:
//   {"id": "...", "language": "java", "error_kinds": [...],
//    "non_fqn_resolved": true, "syntax_resolved": true}
std::vector<RecordOutcome> parse_outcomes(std::string_view jsonl, const std::string& origin);
std::vector<RecordOutcome> load_outcomes(const std::string& path);
std::string outcomes_to_jsonl(const std::vector<RecordOutcome>& outcomes);

RecordOutcome outcome_from(const DatasetRecord& record, const ChainResult& result);

struct EvalOptions {
  int jobs = 1;
  // When set, one trace per record goes to <trace_root>/<dataset>-<variant>/.
  std::optional<std::string> trace_root;
};

// Runs the chain variant over every record with a bounded worker pool.
// Per-record failures become unresolved outcomes; a missing toolchain aborts.
EvalReport evaluate(const Dataset& dataset, const Chain& chain, const ChainConfig& config,
                    const EvalOptions& options = {});

// Chain, Direct, CoT, ChainNoEME, in that order, on the same dataset and backend.
std::vector<EvalReport> run_ablation(const Dataset& dataset, const Chain& chain, const ChainConfig& config,
                                     const EvalOptions& options = {});

enum class StyleFactor { TaskDescription, ExampleOrder, Representation };

std::string_view to_string(StyleFactor f);

// Factors in which two styles differ.
std::vector<StyleFactor> differing_factors(const PromptStyle& a, const PromptStyle& b);

struct SensitivityVariant {
  std::string label;
  PromptStyle style;
};

struct SensitivityGrid {
  PromptStyle base;
  std::vector<SensitivityVariant> variants;

  // Every variant must differ from `base` in exactly one factor.
  void validate() const;
  // Base configuration plus the four single-factor deviations studied:
  // no task description, similar-first, dissimilar-first, semi-structured.
  static SensitivityGrid standard();
};

struct SensitivityRow {
  std::string label;
  std::optional<StyleFactor> factor;  // unset when the variant equals the base
  std::optional<int> delta_non_fqns;
  int delta_syntax = 0;
  int delta_all = 0;
};

SensitivityRow compute_deltas(const std::string& label, const PromptStyle& base_style, const EvalReport& base,
                              const PromptStyle& variant_style, const EvalReport& variant);

struct SensitivityReport {
  EvalReport base;
  std::vector<EvalReport> variant_reports;
  std::vector<SensitivityRow> rows;
};

SensitivityReport run_sensitivity(const Dataset& dataset, const Chain& chain, const ChainConfig& config,
                                  const SensitivityGrid& grid, const EvalOptions& options = {});

// ---------------------------------------------------------------------------
// Reports

struct MetricsRow {
  std::string label;
  std::optional<int> resolved_non_fqns;
  std::optional<int> resolved_syntax;
  std::optional<int> all_resolved;
};

MetricsRow metrics_row(const std::string& label, const EvalReport& report);

// Aligned text table; unset cells print "-".
std::string render_metrics_table(const std::string& title, const std::vector<MetricsRow>& rows);
std::string render_sensitivity_table(const SensitivityReport& report);

// Published comparison rows for the two languages (baselines included), for
// side-by-side rendering only.
std::vector<MetricsRow> reference_rows(Language language);

nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const SensitivityReport& report);

}  // namespace pcr
