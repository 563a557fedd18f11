#include "pcr/eval.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "pcr/text.hpp"

namespace pcr {

using json = nlohmann::json;

std::string_view to_string(ErrorKind k) { return k == ErrorKind::NonFqn ? "non_fqn" : "last_mile_syntax"; }

ErrorKind parse_error_kind(std::string_view s) {
  if (s == "non_fqn") return ErrorKind::NonFqn;
  if (s == "last_mile_syntax") return ErrorKind::LastMileSyntax;
  throw ValidationError("unknown error kind '" + std::string(s) + "' (expected non_fqn or last_mile_syntax)");
}

// ---------------------------------------------------------------------------
// Datasets

namespace {

[[noreturn]] void record_error(const std::string& origin, std::size_t line, const std::string& field,
                               const std::string& what) {
  std::string where = origin + ":" + std::to_string(line);
  if (!field.empty()) where += ": field '" + field + "'";
  throw ValidationError(where + ": " + what);
}

const json& required(const json& obj, const char* field, const std::string& origin, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) record_error(origin, line, field, "missing");
  return *it;
}

std::string required_text(const json& obj, const char* field, const std::string& origin, std::size_t line) {
  const auto& v = required(obj, field, origin, line);
  if (!v.is_string()) record_error(origin, line, field, "must be a string");
  return v.get<std::string>();
}

std::set<ErrorKind> parse_kinds(const json& obj, const std::string& origin, std::size_t line) {
  const auto& v = required(obj, "error_kinds", origin, line);
  if (!v.is_array()) record_error(origin, line, "error_kinds", "must be a list");
  std::set<ErrorKind> kinds;
  for (const auto& k : v) {
    if (!k.is_string()) record_error(origin, line, "error_kinds", "entries must be strings");
    try {
      kinds.insert(parse_error_kind(k.get<std::string>()));
    } catch (const ValidationError& e) {
      record_error(origin, line, "error_kinds", e.what());
    }
  }
  return kinds;
}

Language parse_lang_field(const json& obj, const std::string& origin, std::size_t line) {
  auto s = required_text(obj, "language", origin, line);
  try {
    return parse_language(s);
  } catch (const ValidationError& e) {
    record_error(origin, line, "language", e.what());
  }
}

template <typename F>
void for_each_json_line(std::string_view jsonl, const std::string& origin, F&& f) {
  auto lines = text::split_lines(jsonl);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    json obj;
    try {
      obj = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      record_error(origin, i + 1, "", std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) record_error(origin, i + 1, "", "record must be a JSON object");
    f(obj, i + 1);
  }
}

}  // namespace

Dataset parse_dataset(std::string_view jsonl, const std::string& origin, std::string dataset_id) {
  Dataset ds;
  ds.id = std::move(dataset_id);
  std::unordered_set<std::string> ids;
  for_each_json_line(jsonl, origin, [&](const json& obj, std::size_t line) {
    for (const auto& [key, _] : obj.items()) {
      if (key != "id" && key != "language" && key != "code" && key != "expected_fqns" && key != "error_kinds" &&
          key != "origin") {
        record_error(origin, line, key, "unknown field");
      }
    }
    DatasetRecord r;
    r.id = required_text(obj, "id", origin, line);
    if (r.id.empty()) record_error(origin, line, "id", "must not be empty");
    r.language = parse_lang_field(obj, origin, line);
    r.code = required_text(obj, "code", origin, line);
    if (text::trim(r.code).empty()) record_error(origin, line, "code", "must not be blank");
    r.error_kinds = parse_kinds(obj, origin, line);
    if (r.error_kinds.empty()) record_error(origin, line, "error_kinds", "must not be empty");
    if (auto it = obj.find("expected_fqns"); it != obj.end() && !it->is_null()) {
      if (r.language != Language::JavaLike) {
        record_error(origin, line, "expected_fqns", "only allowed for Java-like records");
      }
      if (!it->is_array()) record_error(origin, line, "expected_fqns", "must be a list");
      std::vector<FqnMapping> mappings;
      for (const auto& m : *it) {
        if (!m.is_object() || !m.contains("simple_name") || !m.contains("fqn") || !m["simple_name"].is_string() ||
            !m["fqn"].is_string()) {
          record_error(origin, line, "expected_fqns", "entries need string 'simple_name' and 'fqn'");
        }
        mappings.push_back(make_mapping(m["simple_name"].get<std::string>(), m["fqn"].get<std::string>()));
      }
      r.expected_fqns = std::move(mappings);
    }
    if (!ids.insert(r.id).second) record_error(origin, line, "id", "duplicate id '" + r.id + "'");
    ds.records.push_back(std::move(r));
  });
  return ds;
}

Dataset load_dataset(const std::string& path) {
  return parse_dataset(text::read_file(path), path, std::filesystem::path(path).stem().string());
}

Dataset filter_language(const Dataset& dataset, Language language) {
  Dataset out;
  out.id = dataset.id + (language == Language::JavaLike ? "-java" : "-python");
  for (const auto& r : dataset.records) {
    if (r.language == language) out.records.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Outcomes and reports

bool RecordOutcome::all_resolved() const {
  if (error_kinds.count(ErrorKind::NonFqn) && !non_fqn_resolved) return false;
  if (error_kinds.count(ErrorKind::LastMileSyntax) && !syntax_resolved) return false;
  return true;
}

EvalReport report_from_outcomes(std::string dataset_id, std::string variant, std::vector<RecordOutcome> outcomes) {
  EvalReport r;
  r.dataset_id = std::move(dataset_id);
  r.variant = std::move(variant);
  r.dataset_size = outcomes.size();
  bool any_non_fqn = false;
  int non_fqn = 0;
  for (const auto& o : outcomes) {
    any_non_fqn = any_non_fqn || o.error_kinds.count(ErrorKind::NonFqn);
    non_fqn += o.non_fqn_resolved;
    r.resolved_syntax += o.syntax_resolved;
    r.all_resolved += o.all_resolved();
    r.non_fqn_unverifiable += !o.non_fqn_verifiable;
  }
  if (any_non_fqn) r.resolved_non_fqns = non_fqn;
  r.outcomes = std::move(outcomes);
  return r;
}

void EvalReport::self_audit() const {
  auto again = report_from_outcomes(dataset_id, variant, outcomes);
  auto fail = [&](const std::string& what) {
    throw Error("report " + dataset_id + "/" + variant + " failed self-audit: " + what);
  };
  if (again.resolved_non_fqns != resolved_non_fqns) fail("resolved_non_fqns does not match the outcomes");
  if (again.resolved_syntax != resolved_syntax) fail("resolved_syntax does not match the outcomes");
  if (again.all_resolved != all_resolved) fail("all_resolved does not match the outcomes");
  if (dataset_size != outcomes.size()) fail("dataset size does not match the outcome count");
  auto n = static_cast<int>(dataset_size);
  if (resolved_syntax > n || all_resolved > n || resolved_non_fqns.value_or(0) > n) fail("count exceeds dataset size");
  // A record without NonFqn errors can count toward all_resolved while its final judge
  // reports a new non-FQN, so the bound allows for those records.
  int regressed = 0;
  for (const auto& o : outcomes) regressed += !o.error_kinds.count(ErrorKind::NonFqn) && !o.non_fqn_resolved;
  if (resolved_non_fqns && all_resolved > *resolved_non_fqns + regressed) fail("all_resolved exceeds resolved_non_fqns");
  if (all_resolved > resolved_syntax) fail("all_resolved exceeds resolved_syntax");
}

std::vector<RecordOutcome> parse_outcomes(std::string_view jsonl, const std::string& origin) {
  std::vector<RecordOutcome> out;
  std::unordered_set<std::string> ids;
  for_each_json_line(jsonl, origin, [&](const json& obj, std::size_t line) {
    RecordOutcome o;
    o.id = required_text(obj, "id", origin, line);
    o.language = parse_lang_field(obj, origin, line);
    o.error_kinds = parse_kinds(obj, origin, line);
    for (const char* field : {"non_fqn_resolved", "syntax_resolved"}) {
      const auto& v = required(obj, field, origin, line);
      if (!v.is_boolean()) record_error(origin, line, field, "must be true or false");
    }
    o.non_fqn_resolved = obj["non_fqn_resolved"].get<bool>();
    o.syntax_resolved = obj["syntax_resolved"].get<bool>();
    o.status = obj.value("status", std::string("recorded"));
    if (!ids.insert(o.id).second) record_error(origin, line, "id", "duplicate id '" + o.id + "'");
    out.push_back(std::move(o));
  });
  return out;
}

std::vector<RecordOutcome> load_outcomes(const std::string& path) {
  return parse_outcomes(text::read_file(path), path);
}

namespace {

json outcome_json(const RecordOutcome& o) {
  json kinds = json::array();
  for (auto k : o.error_kinds) kinds.push_back(to_string(k));
  json j = {{"id", o.id},
            {"language", to_string(o.language)},
            {"error_kinds", kinds},
            {"non_fqn_resolved", o.non_fqn_resolved},
            {"syntax_resolved", o.syntax_resolved},
            {"all_resolved", o.all_resolved()},
            {"status", o.status}};
  if (!o.non_fqn_verifiable) j["non_fqn_verifiable"] = false;
  if (o.error) j["error"] = *o.error;
  if (o.gold_total) j["gold_fqns"] = {{"total", *o.gold_total}, {"present", o.gold_present.value_or(0)}};
  return j;
}

bool mentions_fqn(const std::string& code, const std::string& fqn) {
  auto ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; };
  std::size_t pos = 0;
  while ((pos = code.find(fqn, pos)) != std::string::npos) {
    bool left = pos == 0 || (!ident(code[pos - 1]) && code[pos - 1] != '.');
    bool right = pos + fqn.size() >= code.size() || !ident(code[pos + fqn.size()]);
    if (left && right) return true;
    ++pos;
  }
  return false;
}

}  // namespace

std::string outcomes_to_jsonl(const std::vector<RecordOutcome>& outcomes) {
  std::string out;
  for (const auto& o : outcomes) out += outcome_json(o).dump() + "\n";
  return out;
}

RecordOutcome outcome_from(const DatasetRecord& record, const ChainResult& result) {
  RecordOutcome o;
  o.id = record.id;
  o.language = record.language;
  o.error_kinds = record.error_kinds;
  o.status = std::string(to_string(result.status));
  if (result.final_report) {
    auto st = resolution_status(*result.final_report);
    o.non_fqn_resolved = st.non_fqn_free;
    o.syntax_resolved = st.syntax_free;
    o.non_fqn_verifiable = st.non_fqn_verifiable;
  }
  if (!result.error.empty()) o.error = result.error;
  if (record.expected_fqns) {
    o.gold_total = static_cast<int>(record.expected_fqns->size());
    int present = 0;
    for (const auto& m : *record.expected_fqns) present += mentions_fqn(result.final_code, m.fqn);
    o.gold_present = present;
  }
  return o;
}

namespace {

nlohmann::json config_snapshot(const ChainConfig& config) {
  return {{"variant", to_string(config.variant)},
          {"max_repair_rounds", config.max_repair_rounds},
          {"prompt_style",
           {{"include_task_description", config.style.include_task_description},
            {"example_order", to_string(config.style.example_order)},
            {"representation", to_string(config.style.representation)}}},
          {"model_name", config.params.model_name},
          {"temperature", config.params.temperature},
          {"max_output_tokens", config.params.max_output_tokens}};
}

}  // namespace

EvalReport evaluate(const Dataset& dataset, const Chain& chain, const ChainConfig& config,
                    const EvalOptions& options) {
  config.validate();
  if (dataset.records.empty()) throw ValidationError("dataset '" + dataset.id + "' is empty");
  std::vector<RecordOutcome> outcomes(dataset.records.size());
  std::optional<std::string> run_dir;
  if (options.trace_root) {
    run_dir = (std::filesystem::path(*options.trace_root) /
               (dataset.id + "-" + std::string(to_string(config.variant))))
                  .string();
  }

  std::atomic<std::size_t> next{0};
  std::mutex fatal_mu;
  std::exception_ptr fatal;
  auto worker = [&] {
    while (true) {
      auto i = next.fetch_add(1);
      if (i >= dataset.records.size()) return;
      {
        std::lock_guard lock(fatal_mu);
        if (fatal) return;
      }
      const auto& rec = dataset.records[i];
      try {
        auto result = chain.run_chain(CodeSnippet(rec.id, rec.language, rec.code), config);
        outcomes[i] = outcome_from(rec, result);
        if (run_dir) write_trace(result, config.variant, *run_dir);
        if (result.status == ChainStatus::BackendError) spdlog::warn("{}: {}", rec.id, result.error);
      } catch (const ToolchainMissing&) {
        std::lock_guard lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        return;
      } catch (const std::exception& e) {
        spdlog::warn("{}: {}", rec.id, e.what());
        RecordOutcome o;
        o.id = rec.id;
        o.language = rec.language;
        o.error_kinds = rec.error_kinds;
        o.status = "failed";
        o.error = e.what();
        outcomes[i] = std::move(o);
      }
    }
  };

  int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(dataset.records.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  auto report = report_from_outcomes(dataset.id, std::string(to_string(config.variant)), std::move(outcomes));
  report.config = config_snapshot(config);
  report.self_audit();
  return report;
}

std::vector<EvalReport> run_ablation(const Dataset& dataset, const Chain& chain, const ChainConfig& config,
                                     const EvalOptions& options) {
  std::vector<EvalReport> out;
  for (auto v : kAllVariants) {
    auto c = config;
    c.variant = v;
    out.push_back(evaluate(dataset, chain, c, options));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sensitivity

std::string_view to_string(StyleFactor f) {
  switch (f) {
    case StyleFactor::TaskDescription: return "Task Description";
    case StyleFactor::ExampleOrder: return "Order of Demonstration Examples";
    case StyleFactor::Representation: return "Prompt Representation";
  }
  return "";
}

std::vector<StyleFactor> differing_factors(const PromptStyle& a, const PromptStyle& b) {
  std::vector<StyleFactor> out;
  if (a.include_task_description != b.include_task_description) out.push_back(StyleFactor::TaskDescription);
  if (a.example_order != b.example_order) out.push_back(StyleFactor::ExampleOrder);
  if (a.representation != b.representation) out.push_back(StyleFactor::Representation);
  return out;
}

void SensitivityGrid::validate() const {
  for (const auto& v : variants) {
    auto n = differing_factors(base, v.style).size();
    if (n != 1) {
      throw ValidationError("sensitivity variant '" + v.label + "' differs from the base in " + std::to_string(n) +
                            " factors; exactly one is required");
    }
  }
}

SensitivityGrid SensitivityGrid::standard() {
  SensitivityGrid g;
  auto no_task = g.base;
  no_task.include_task_description = false;
  auto similar = g.base;
  similar.example_order = ExampleOrder::SimilarFirst;
  auto dissimilar = g.base;
  dissimilar.example_order = ExampleOrder::DissimilarFirst;
  auto semi = g.base;
  semi.representation = Representation::SemiStructured;
  g.variants = {{"Not Provided", no_task},
                {"Similar First", similar},
                {"Dissimilar First", dissimilar},
                {"Semi-Structured", semi}};
  return g;
}

SensitivityRow compute_deltas(const std::string& label, const PromptStyle& base_style, const EvalReport& base,
                              const PromptStyle& variant_style, const EvalReport& variant) {
  SensitivityRow row;
  row.label = label;
  auto factors = differing_factors(base_style, variant_style);
  if (factors.size() > 1) {
    throw ValidationError("sensitivity variant '" + label + "' differs from the base in more than one factor");
  }
  if (!factors.empty()) row.factor = factors.front();
  if (base.resolved_non_fqns && variant.resolved_non_fqns) {
    row.delta_non_fqns = *variant.resolved_non_fqns - *base.resolved_non_fqns;
  }
  row.delta_syntax = variant.resolved_syntax - base.resolved_syntax;
  row.delta_all = variant.all_resolved - base.all_resolved;
  return row;
}

SensitivityReport run_sensitivity(const Dataset& dataset, const Chain& chain, const ChainConfig& config,
                                  const SensitivityGrid& grid, const EvalOptions& options) {
  grid.validate();
  SensitivityReport out;
  auto base_config = config;
  base_config.style = grid.base;
  out.base = evaluate(dataset, chain, base_config, options);
  for (const auto& v : grid.variants) {
    auto c = config;
    c.style = v.style;
    auto report = evaluate(dataset, chain, c, options);
    out.rows.push_back(compute_deltas(v.label, grid.base, out.base, v.style, report));
    out.variant_reports.push_back(std::move(report));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

MetricsRow metrics_row(const std::string& label, const EvalReport& report) {
  return {label, report.resolved_non_fqns, report.resolved_syntax, report.all_resolved};
}

namespace {

std::string cell(const std::optional<int>& v) { return v ? std::to_string(*v) : "-"; }

std::string signed_cell(const std::optional<int>& v) {
  if (!v) return "-";
  if (*v > 0) return "+" + std::to_string(*v);
  return std::to_string(*v);
}

std::string render_grid(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                        std::size_t left_aligned) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& r) {
    std::string out;
    for (std::size_t c = 0; c < r.size(); ++c) {
      std::string pad(width[c] - r[c].size(), ' ');
      out += c < left_aligned ? r[c] + pad : pad + r[c];
      out += c + 1 < r.size() ? "  " : "";
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  total += 2 * (width.size() - 1);
  out += std::string(total, '-') + "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

}  // namespace

std::string render_metrics_table(const std::string& title, const std::vector<MetricsRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.label, cell(r.resolved_non_fqns), cell(r.resolved_syntax), cell(r.all_resolved)});
  }
  std::string out = title.empty() ? "" : title + "\n";
  return out + render_grid({"", "Resolved Non-FQNs", "Resolved Last-Mile Syntax Errors", "All Resolved"}, cells, 1);
}

std::string render_sensitivity_table(const SensitivityReport& report) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Basic Config", "", cell(report.base.resolved_non_fqns), cell(report.base.resolved_syntax),
                   cell(report.base.all_resolved)});
  for (const auto& r : report.rows) {
    cells.push_back({r.factor ? std::string(to_string(*r.factor)) : "(none)", r.label, signed_cell(r.delta_non_fqns),
                     signed_cell(r.delta_syntax), signed_cell(r.delta_all)});
  }
  return render_grid({"Factor", "Setting", "Resolved Non-FQNs", "Resolved Last-Mile Syntax Errors", "All Resolved"},
                     cells, 2);
}

std::vector<MetricsRow> reference_rows(Language language) {
  if (language == Language::JavaLike) {
    return {{"PCR-Chain (published)", 161, 196, 161}, {"RING (published)", 0, 188, 0}, {"CURE (published)", 0, 137, 0}};
  }
  return {{"PCR-Chain (published)", std::nullopt, 198, 198},
          {"RING (published)", std::nullopt, 188, 188},
          {"BIFI (published)", std::nullopt, 174, 174}};
}

json to_json(const EvalReport& report) {
  json outcomes = json::array();
  for (const auto& o : report.outcomes) outcomes.push_back(outcome_json(o));
  json j = {{"dataset_id", report.dataset_id},
            {"variant", report.variant},
            {"dataset_size", report.dataset_size},
            {"resolved_syntax", report.resolved_syntax},
            {"all_resolved", report.all_resolved},
            {"non_fqn_unverifiable", report.non_fqn_unverifiable},
            {"config", report.config},
            {"outcomes", std::move(outcomes)}};
  j["resolved_non_fqns"] = report.resolved_non_fqns ? json(*report.resolved_non_fqns) : json(nullptr);
  int gold_total = 0, gold_present = 0;
  for (const auto& o : report.outcomes) {
    gold_total += o.gold_total.value_or(0);
    gold_present += o.gold_present.value_or(0);
  }
  if (gold_total > 0) j["gold_fqns"] = {{"total", gold_total}, {"present", gold_present}};
  return j;
}

json to_json(const SensitivityReport& report) {
  json rows = json::array();
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    json row = {{"label", r.label},
                {"factor", r.factor ? json(std::string(to_string(*r.factor))) : json(nullptr)},
                {"delta_syntax", r.delta_syntax},
                {"delta_all", r.delta_all},
                {"report", to_json(report.variant_reports[i])}};
    row["delta_non_fqns"] = r.delta_non_fqns ? json(*r.delta_non_fqns) : json(nullptr);
    rows.push_back(std::move(row));
  }
  return {{"base", to_json(report.base)}, {"rows", std::move(rows)}};
}

}  // namespace pcr
