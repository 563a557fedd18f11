#pragma once

// Shared helpers for tests that need the shipped desk data: repository paths,
// a process-wide compiler judge, and the replay-store builder used by
// pcr_fixturegen.

#include <memory>
#include <optional>
#include <string>

#include "pcr/eval.hpp"
#include "scripted_backend.hpp"

namespace pcr::testing {

std::string source_root();
std::string root_path(const std::string& relative);

// One judge per process with memoisation, rooted in the default workspace.
std::shared_ptr<Judge> shared_judge();
std::shared_ptr<const UnitLibrary> shipped_units();
const Dataset& desk_corpus();
const GoldFile& desk_gold();

// A chain over the merged stores named relative to data/replay.
Chain replay_chain(const std::vector<std::string>& stores, std::shared_ptr<HttpTransport> transport = nullptr);

struct StoreSummary {
  std::size_t entries = 0;
  int compilable = 0;
  int runs = 0;
};

// Rebuilds desk-oracle.json, desk-ablation.json and desk-sensitivity.json in
// `out_dir` by running the chain against the scripted responder.
struct DeskStores {
  StoreSummary oracle, ablation, sensitivity;
};
DeskStores build_desk_stores(const std::string& out_dir, const GoldFile& gold, const Dataset& corpus,
                             std::shared_ptr<Judge> judge, std::shared_ptr<const UnitLibrary> units);

// Compiles `code`, wrapped at `level`, with Janino's stock command-line
// compiler and the bundled library jars. This bypasses the judge driver so it
// can serve as an independent check of the judge's verdicts. Returns nullopt on
// success, else the compiler's output.
std::optional<std::string> compile_standalone(const std::string& code, WrapLevel level);

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::string& path() const { return path_; }
  std::string operator/(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

}  // namespace pcr::testing
