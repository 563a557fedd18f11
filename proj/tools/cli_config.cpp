#include "cli_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <thread>

#include "pcr/text.hpp"
#include "yaml_util.hpp"

namespace pcr::cli {

namespace fs = std::filesystem;
using namespace yamlutil;

namespace {

std::string resolve_path(const std::string& base_dir, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute() || base_dir.empty()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

std::vector<std::string> string_list(const std::string& origin, const YAML::Node& node, const char* what) {
  std::vector<std::string> out;
  if (node.IsScalar()) {
    out.push_back(node.as<std::string>());
  } else if (node.IsSequence()) {
    for (const auto& n : node) out.push_back(scalar_as<std::string>(origin, n, what));
  } else {
    schema_error(origin, node, std::string(what) + " must be a string or a list of strings");
  }
  return out;
}

template <typename T>
void opt(const std::string& origin, const YAML::Node& map, const char* key, std::optional<T>& into) {
  if (auto n = map[key]) into = scalar_as<T>(origin, n, key);
}

YAML::Node section(const std::string& origin, const YAML::Node& root, const char* key) {
  auto n = root[key];
  if (n && !n.IsMap()) schema_error(origin, n, std::string("'") + key + "' must be a mapping");
  return n;
}

}  // namespace

ConfigLayer layer_from_yaml(const std::string& yaml_text, const std::string& origin) {
  auto root = load(yaml_text, origin);
  ConfigLayer l;
  if (!root || root.IsNull()) return l;
  if (!root.IsMap()) schema_error(origin, root, "config file must be a mapping");
  reject_unknown_keys(origin, root,
                      {"backend", "model", "chain", "prompt_style", "compiler", "workspace", "data_dir", "lang",
                       "trace", "jobs", "verbose"});
  auto base = fs::path(origin).parent_path().string();

  if (auto b = section(origin, root, "backend")) {
    reject_unknown_keys(origin, b, {"mode", "stores", "cache", "cache_path", "base_url", "requests_per_minute"});
    opt(origin, b, "mode", l.backend);
    if (auto s = b["stores"]) {
      auto list = string_list(origin, s, "stores");
      for (auto& p : list) p = resolve_path(base, p);
      l.stores = list;
    }
    opt(origin, b, "cache", l.cache);
    opt(origin, b, "cache_path", l.cache_path);
    if (l.cache_path) l.cache_path = resolve_path(base, *l.cache_path);
    opt(origin, b, "base_url", l.base_url);
    opt(origin, b, "requests_per_minute", l.requests_per_minute);
  }
  if (auto m = section(origin, root, "model")) {
    reject_unknown_keys(origin, m, {"name", "temperature", "max_output_tokens"});
    opt(origin, m, "name", l.model);
    opt(origin, m, "temperature", l.temperature);
    opt(origin, m, "max_output_tokens", l.max_output_tokens);
  }
  if (auto c = section(origin, root, "chain")) {
    reject_unknown_keys(origin, c, {"variant", "max_repair_rounds"});
    opt(origin, c, "variant", l.variant);
    opt(origin, c, "max_repair_rounds", l.max_repair_rounds);
  }
  if (auto p = section(origin, root, "prompt_style")) {
    reject_unknown_keys(origin, p, {"task_description", "example_order", "representation"});
    opt(origin, p, "task_description", l.task_description);
    opt(origin, p, "example_order", l.example_order);
    opt(origin, p, "representation", l.representation);
  }
  if (auto c = section(origin, root, "compiler")) {
    reject_unknown_keys(origin, c, {"java_compiler", "java", "javac", "python", "classpath", "timeout_seconds"});
    opt(origin, c, "java_compiler", l.compiler);
    opt(origin, c, "java", l.java);
    opt(origin, c, "javac", l.javac);
    opt(origin, c, "python", l.python);
    if (auto cp = c["classpath"]) {
      auto list = string_list(origin, cp, "classpath");
      for (auto& p : list) p = resolve_path(base, p);
      l.classpath = list;
    }
    opt(origin, c, "timeout_seconds", l.compiler_timeout_seconds);
  }
  opt(origin, root, "workspace", l.workspace);
  if (l.workspace) l.workspace = resolve_path(base, *l.workspace);
  opt(origin, root, "data_dir", l.data_dir);
  if (l.data_dir) l.data_dir = resolve_path(base, *l.data_dir);
  opt(origin, root, "lang", l.lang);
  opt(origin, root, "trace", l.trace);
  if (l.trace) l.trace = resolve_path(base, *l.trace);
  opt(origin, root, "jobs", l.jobs);
  opt(origin, root, "verbose", l.verbose);
  return l;
}

ConfigLayer load_config_file(const std::string& path) { return layer_from_yaml(text::read_file(path), path); }

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
}

ConfigLayer layer_from_env(const EnvLookup& env) {
  ConfigLayer l;
  l.api_key = env("PCR_API_KEY");
  l.base_url = env("PCR_BASE_URL");
  l.model = env("PCR_MODEL");
  l.backend = env("PCR_BACKEND");
  l.data_dir = env("PCR_DATA_DIR");
  l.workspace = env("PCR_WORKSPACE");
  return l;
}

std::string default_data_dir() { return PCR_SOURCE_ROOT; }

namespace {

template <typename T>
void take(std::optional<T>& into, const std::optional<T>& from) {
  if (from) into = from;
}

}  // namespace

CliConfig resolve(const std::vector<ConfigLayer>& layers) {
  ConfigLayer m;
  for (const auto& l : layers) {
    take(m.backend, l.backend);
    take(m.stores, l.stores);
    take(m.cache, l.cache);
    take(m.cache_path, l.cache_path);
    take(m.api_key, l.api_key);
    take(m.base_url, l.base_url);
    take(m.requests_per_minute, l.requests_per_minute);
    take(m.model, l.model);
    take(m.temperature, l.temperature);
    take(m.max_output_tokens, l.max_output_tokens);
    take(m.variant, l.variant);
    take(m.max_repair_rounds, l.max_repair_rounds);
    take(m.task_description, l.task_description);
    take(m.example_order, l.example_order);
    take(m.representation, l.representation);
    take(m.compiler, l.compiler);
    take(m.java, l.java);
    take(m.javac, l.javac);
    take(m.python, l.python);
    take(m.classpath, l.classpath);
    take(m.compiler_timeout_seconds, l.compiler_timeout_seconds);
    take(m.workspace, l.workspace);
    take(m.data_dir, l.data_dir);
    take(m.lang, l.lang);
    take(m.trace, l.trace);
    take(m.jobs, l.jobs);
    take(m.verbose, l.verbose);
  }

  CliConfig c;
  c.data_dir = m.data_dir.value_or(default_data_dir());
  c.judge = default_judge_options(c.data_dir);
  c.workspace = m.workspace.value_or(c.judge.workspace);
  c.judge.workspace = c.workspace;

  if (m.backend) c.backend.mode = parse_backend_mode(*m.backend);
  if (m.stores) {
    c.backend.store_paths = *m.stores;
    c.stores_given = true;
  }
  c.backend.cache = m.cache.value_or(false);
  c.backend.cache_path = m.cache_path.value_or("");
  if (m.api_key) c.backend.live.api_key = *m.api_key;
  if (m.base_url) c.backend.live.base_url = *m.base_url;
  if (m.requests_per_minute) {
    if (*m.requests_per_minute < 0) throw ValidationError("requests_per_minute must be non-negative");
    c.backend.live.requests_per_minute = *m.requests_per_minute;
  }
  if (m.model) c.chain.params.model_name = *m.model;
  c.backend.model_name = c.chain.params.model_name;
  if (m.temperature) c.chain.params.temperature = *m.temperature;
  if (m.max_output_tokens) c.chain.params.max_output_tokens = *m.max_output_tokens;

  if (m.variant) c.chain.variant = parse_variant(*m.variant);
  if (m.max_repair_rounds) c.chain.max_repair_rounds = *m.max_repair_rounds;
  if (m.task_description) c.chain.style.include_task_description = *m.task_description;
  if (m.example_order) c.chain.style.example_order = parse_example_order(*m.example_order);
  if (m.representation) c.chain.style.representation = parse_representation(*m.representation);
  c.chain.validate();

  if (m.compiler) c.judge.java_compiler = parse_java_compiler(*m.compiler);
  if (m.java) c.judge.java = *m.java;
  if (m.javac) c.judge.javac = *m.javac;
  if (m.python) c.judge.python = *m.python;
  if (m.classpath) c.judge.classpath = *m.classpath;
  if (m.compiler_timeout_seconds) {
    if (*m.compiler_timeout_seconds < 1) throw ValidationError("compiler timeout must be at least 1 second");
    c.judge.timeout = std::chrono::seconds(*m.compiler_timeout_seconds);
  }

  if (m.lang) c.lang = parse_language(*m.lang);
  c.trace_dir = m.trace;
  int cpus = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  c.jobs = m.jobs.value_or(cpus);
  if (c.jobs < 1) throw ValidationError("jobs must be at least 1");
  c.verbose = m.verbose.value_or(false);
  return c;
}

nlohmann::json to_json(const CliConfig& c) {
  using json = nlohmann::json;
  json style = {{"include_task_description", c.chain.style.include_task_description},
                {"example_order", to_string(c.chain.style.example_order)},
                {"representation", to_string(c.chain.style.representation)}};
  return {
      {"chain",
       {{"variant", to_string(c.chain.variant)},
        {"max_repair_rounds", c.chain.max_repair_rounds},
        {"prompt_style", style},
        {"model", c.chain.params.model_name},
        {"temperature", c.chain.params.temperature},
        {"max_output_tokens", c.chain.params.max_output_tokens}}},
      {"backend",
       {{"mode", to_string(c.backend.mode)},
        {"stores", c.backend.store_paths},
        {"cache", c.backend.cache},
        {"cache_path", c.backend.cache_path},
        {"base_url", c.backend.live.base_url},
        {"api_key", c.backend.live.api_key.empty() ? "(unset)" : "(set)"},
        {"requests_per_minute", c.backend.live.requests_per_minute}}},
      {"compiler",
       {{"java_compiler", to_string(c.judge.java_compiler)},
        {"java", c.judge.java},
        {"javac", c.judge.javac},
        {"python", c.judge.python},
        {"classpath", c.judge.classpath},
        {"timeout_seconds", c.judge.timeout.count()}}},
      {"data_dir", c.data_dir},
      {"workspace", c.workspace},
      {"lang", c.lang ? json(std::string(to_string(*c.lang))) : json(nullptr)},
      {"trace", c.trace_dir ? json(*c.trace_dir) : json(nullptr)},
      {"jobs", c.jobs},
  };
}

}  // namespace pcr::cli
