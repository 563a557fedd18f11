#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "cli_config.hpp"
#include "desk_fixtures.hpp"
#include "pcr/subprocess.hpp"
#include "pcr/text.hpp"

using namespace pcr;
namespace support = pcr::testing;
using json = nlohmann::json;

namespace {

cli::EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](const std::string& k) -> std::optional<std::string> {
    auto it = vars.find(k);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

ProcessResult pcr_run(std::vector<std::string> args, std::map<std::string, std::string> env = {},
                      const std::string& input = {}) {
  std::vector<std::string> argv = {"env", "-u", "PCR_API_KEY", "-u", "PCR_BACKEND", "-u", "PCR_MODEL"};
  for (const auto& [k, v] : env) argv.push_back(k + "=" + v);
  argv.push_back(PCR_BINARY);
  argv.insert(argv.end(), args.begin(), args.end());
  return run_process(argv, std::chrono::minutes(3), input);
}

std::string sample_path() { return support::root_path("tests/fixtures/sample.java"); }

std::string desk_code(const std::string& id) {
  for (const auto& r : support::desk_corpus().records) {
    if (r.id == id) return r.code;
  }
  throw std::runtime_error("no record " + id);
}

}  // namespace

TEST(Config, LayerPrecedenceFileEnvFlags) {
  support::TempDir dir;
  text::write_file_atomic(dir / "pcr.yaml",
                          "model: {name: from-file, temperature: 0.5}\nchain: {max_repair_rounds: 2}\njobs: 3\n");
  auto file = cli::load_config_file(dir / "pcr.yaml");
  auto env = cli::layer_from_env(env_of({{"PCR_MODEL", "from-env"}}));
  cli::ConfigLayer flags;
  flags.model = "from-flags";

  auto c = cli::resolve({file});
  EXPECT_EQ(c.chain.params.model_name, "from-file");
  EXPECT_EQ(c.chain.params.temperature, 0.5);
  EXPECT_EQ(c.chain.max_repair_rounds, 2);
  EXPECT_EQ(c.jobs, 3);
  EXPECT_EQ(cli::resolve({file, env}).chain.params.model_name, "from-env");
  auto all = cli::resolve({file, env, flags});
  EXPECT_EQ(all.chain.params.model_name, "from-flags");
  EXPECT_EQ(all.chain.max_repair_rounds, 2);  // untouched by later layers
}

TEST(Config, Defaults) {
  auto c = cli::resolve({});
  EXPECT_EQ(c.backend.mode, BackendMode::Replay);
  EXPECT_EQ(c.chain.params.temperature, 0.0);
  EXPECT_EQ(c.chain.max_repair_rounds, 1);
  EXPECT_EQ(c.chain.variant, ChainVariant::Chain);
  EXPECT_EQ(c.chain.style, PromptStyle{});
  EXPECT_EQ(c.judge.java_compiler, JavaCompiler::Janino);
  EXPECT_FALSE(c.stores_given);
  EXPECT_GE(c.jobs, 1);
}

TEST(Config, RelativePathsFollowTheFile) {
  support::TempDir dir;
  text::write_file_atomic(dir / "c.yaml", "backend: {stores: [a.json]}\ncompiler: {classpath: [libs]}\n");
  auto c = cli::resolve({cli::load_config_file(dir / "c.yaml")});
  ASSERT_EQ(c.backend.store_paths.size(), 1u);
  EXPECT_EQ(c.backend.store_paths[0], dir / "a.json");
  EXPECT_TRUE(c.stores_given);
  EXPECT_EQ(c.judge.classpath, std::vector<std::string>{dir / "libs"});
}

TEST(Config, SchemaErrors) {
  auto expect_error = [](const std::string& yaml, const std::string& fragment) {
    try {
      cli::resolve({cli::layer_from_yaml(yaml, "c.yaml")});
      ADD_FAILURE() << fragment;
    } catch (const ValidationError& e) {
      EXPECT_TRUE(text::contains(e.what(), fragment)) << e.what();
    }
  };
  expect_error("modle: {name: x}\n", "modle");
  expect_error("model: {name: x, temp: 1}\n", "temp");
  expect_error("jobs: many\n", "c.yaml:1");
  expect_error("chain: {variant: tree}\n", "tree");
  expect_error("backend: {mode: mock}\n", "mock");
  expect_error("prompt_style: {example_order: random}\n", "random");
  expect_error("model: [unclosed\n", "c.yaml");
  expect_error("- 1\n", "c.yaml");
}

TEST(Config, EnvAndRedaction) {
  auto env = cli::layer_from_env(env_of({{"PCR_API_KEY", "sk-secret"}, {"PCR_BACKEND", "live"}}));
  auto c = cli::resolve({env});
  EXPECT_EQ(c.backend.mode, BackendMode::Live);
  EXPECT_EQ(c.backend.live.api_key, "sk-secret");
  EXPECT_EQ(cli::to_json(c).dump().find("sk-secret"), std::string::npos);
}

TEST(Binary, FixPrintsOnlyTheCode) {
  auto r = pcr_run({"fix", sample_path()});
  EXPECT_EQ(r.exit_code, 0) << r.err;
  auto code = text::read_file(sample_path());
  auto expected = "import org.apache.commons.lang3.StringUtils;\n" + code;
  expected.replace(expected.find("++count,, fruit"), 15, "++count, fruit");
  EXPECT_EQ(r.out, expected);
}

TEST(Binary, FixFromStdinNeedsLanguage) {
  auto code = text::read_file(sample_path());
  EXPECT_EQ(pcr_run({"fix", "-"}, {}, code).exit_code, 2);
  auto r = pcr_run({"--lang", "java", "fix", "-"}, {}, code);
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(text::starts_with(r.out, "import org.apache.commons.lang3.StringUtils;\n"));
}

TEST(Binary, CompilableInputIsEchoed) {
  support::TempDir dir;
  text::write_file_atomic(dir / "ok.py", "x = [1, 2]\n");
  support::TempDir empty;
  text::write_file_atomic(empty / "none.json", ReplayStore{}.to_json());
  auto r = pcr_run({"--store", empty / "none.json", "fix", dir / "ok.py"});
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, "x = [1, 2]\n");
}

TEST(Binary, UnresolvedExitsOne) {
  support::TempDir dir;
  text::write_file_atomic(dir / "j06.java", desk_code("j06"));
  auto r = pcr_run({"--store", support::root_path("data/replay/desk-ablation.json"), "fix", "--variant",
                    "chain-no-eme", dir / "j06.java"});
  EXPECT_EQ(r.exit_code, 1) << r.err;
  EXPECT_FALSE(r.out.empty());
}

TEST(Binary, ReplayMissExitsTwoWithHash) {
  support::TempDir dir;
  text::write_file_atomic(dir / "none.json", ReplayStore{}.to_json());
  auto r = pcr_run({"--store", dir / "none.json", "fix", sample_path()});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_TRUE(r.out.empty());
  auto hash = render_prompt(support::shipped_units()->get(UnitName::SimplenameExtraction),
                            {{"code", text::read_file(sample_path())}}, {})
                  .content_hash;
  EXPECT_TRUE(text::contains(r.err, hash)) << r.err;
}

TEST(Binary, PrecedenceEndToEnd) {
  support::TempDir dir;
  text::write_file_atomic(dir / "pcr.yaml", "model: {name: from-file}\n");
  auto from_env = pcr_run({"--config", dir / "pcr.yaml", "-v", "replay-verify", support::root_path("data/corpus/desk.jsonl")},
                          {{"PCR_MODEL", "from-env"}});
  EXPECT_TRUE(text::contains(from_env.err, "\"from-env\"")) << from_env.err;
  auto from_flag = pcr_run({"--config", dir / "pcr.yaml", "--model", "from-flag", "-v", "replay-verify",
                            support::root_path("data/corpus/desk.jsonl")},
                           {{"PCR_MODEL", "from-env"}});
  EXPECT_TRUE(text::contains(from_flag.err, "\"from-flag\"")) << from_flag.err;
  EXPECT_FALSE(text::contains(from_flag.err, "\"from-env\""));
}

TEST(Binary, EvalFromOutcomes) {
  auto r = pcr_run({"eval", "--outcomes", support::root_path("tests/fixtures/outcomes/reference-java.jsonl"),
                    "--label", "PCR-Chain", "--out", support::TempDir().path()});
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(text::contains(r.out, "161"));
  EXPECT_TRUE(text::contains(r.out, "196"));
}

TEST(Binary, EvalDeskCorpus) {
  support::TempDir out;
  auto r = pcr_run({"-j", "4", "eval", support::root_path("data/corpus/desk.jsonl"), "--out", out.path()});
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(text::contains(r.out, "Java-like"));
  EXPECT_TRUE(text::contains(r.out, "Python-like"));
  EXPECT_FALSE(std::filesystem::is_empty(out.path()));
}

TEST(Binary, ReplayVerifyCoversTheCorpus) {
  auto r = pcr_run({"replay-verify", support::root_path("data/corpus/desk.jsonl")});
  EXPECT_EQ(r.exit_code, 0) << r.err;
  support::TempDir dir;
  text::write_file_atomic(dir / "none.json", ReplayStore{}.to_json());
  auto miss = pcr_run({"--store", dir / "none.json", "replay-verify", support::root_path("data/corpus/desk.jsonl")});
  EXPECT_EQ(miss.exit_code, 2);
}

TEST(Binary, UsageAndInputErrorsExitTwo) {
  EXPECT_EQ(pcr_run({"frobnicate"}).exit_code, 2);
  EXPECT_EQ(pcr_run({"fix", "/nonexistent/file.java"}).exit_code, 2);
  EXPECT_EQ(pcr_run({"--backend", "live", "fix", sample_path()}).exit_code, 2);
  support::TempDir dir;
  text::write_file_atomic(dir / "bad.yaml", "modle: x\n");
  auto r = pcr_run({"--config", dir / "bad.yaml", "fix", sample_path()});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_TRUE(text::contains(r.err, "bad.yaml")) << r.err;
  text::write_file_atomic(dir / "empty.jsonl", "");
  EXPECT_EQ(pcr_run({"eval", dir / "empty.jsonl"}).exit_code, 2);
}
