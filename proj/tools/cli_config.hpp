#pragma once

// Layered configuration for the pcr command: config file < environment <
// command-line flags. Each source produces a ConfigLayer of the settings it
// mentions; resolve() applies the layers in order over the defaults.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcr/backend.hpp"
#include "pcr/chain.hpp"
#include "pcr/judge.hpp"

namespace pcr::cli {

struct ConfigLayer {
  std::optional<std::string> backend;  // live, record, replay
  std::optional<std::vector<std::string>> stores;
  std::optional<bool> cache;
  std::optional<std::string> cache_path;
  std::optional<std::string> api_key;
  std::optional<std::string> base_url;
  std::optional<double> requests_per_minute;
  std::optional<std::string> model;
  std::optional<double> temperature;
  std::optional<int> max_output_tokens;

  std::optional<std::string> variant;
  std::optional<int> max_repair_rounds;
  std::optional<bool> task_description;
  std::optional<std::string> example_order;
  std::optional<std::string> representation;

  std::optional<std::string> compiler;  // janino, javac
  std::optional<std::string> java;
  std::optional<std::string> javac;
  std::optional<std::string> python;
  std::optional<std::vector<std::string>> classpath;
  std::optional<int> compiler_timeout_seconds;

  std::optional<std::string> workspace;
  std::optional<std::string> data_dir;
  std::optional<std::string> lang;
  std::optional<std::string> trace;
  std::optional<int> jobs;
  std::optional<bool> verbose;
};

// YAML config file. Keys (all optional):
//   backend: {mode, stores, cache, cache_path, base_url, requests_per_minute}
//   model: {name, temperature, max_output_tokens}
//   chain: {variant, max_repair_rounds}
//   prompt_style: {task_description, example_order, representation}
//   compiler: {java_compiler, java, javac, python, classpath, timeout_seconds}
//   workspace, data_dir, lang, trace, jobs, verbose
// Unknown keys are errors; relative paths resolve against the file's directory.
ConfigLayer layer_from_yaml(const std::string& yaml_text, const std::string& origin);
ConfigLayer load_config_file(const std::string& path);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// PCR_API_KEY, PCR_BASE_URL, PCR_MODEL, PCR_BACKEND, PCR_DATA_DIR, PCR_WORKSPACE.
ConfigLayer layer_from_env(const EnvLookup& env);

struct CliConfig {
  ChainConfig chain;
  BackendSettings backend;
  JudgeOptions judge;
  std::string data_dir;
  std::string workspace;
  std::optional<Language> lang;
  std::optional<std::string> trace_dir;
  int jobs = 1;
  bool verbose = false;
  bool stores_given = false;  // false: the command picks its default store
};

// The directory holding data/, share/ and third_party/: $PCR_DATA_DIR-style
// override, else the source tree the binary was built from.
std::string default_data_dir();

// Later layers win field by field. Throws ValidationError for bad values.
CliConfig resolve(const std::vector<ConfigLayer>& layers);

// The resolved configuration with the API key redacted.
nlohmann::json to_json(const CliConfig& config);

}  // namespace pcr::cli
