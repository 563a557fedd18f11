#pragma once

#include <sys/types.h>

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "pcr/errors.hpp"

namespace pcr {

// The executable could not be started (not found, not executable).
class ToolchainMissing : public Error {
 public:
  using Error::Error;
};

class CompilerTimeout : public Error {
 public:
  using Error::Error;
};

struct ProcessResult {
  int exit_code = -1;  // 128 + signal when killed by a signal
  std::string out;
  std::string err;
};

// Runs argv[0] (PATH lookup) to completion, feeding `input` on stdin.
// Throws ToolchainMissing when exec fails and CompilerTimeout (after killing
// the child) when `timeout` elapses.
ProcessResult run_process(const std::vector<std::string>& argv, std::chrono::milliseconds timeout,
                          const std::string& input = {});

// Absolute path of `name` found on PATH, or nullopt. Names containing '/'
// are checked as given.
std::optional<std::string> find_executable(const std::string& name);

// A long-lived child speaking a line protocol over stdin/stdout. stderr goes
// to `stderr_path` (or /dev/null when empty). Not thread-safe; callers
// serialize access.
class LineChild {
 public:
  LineChild(const std::vector<std::string>& argv, const std::string& stderr_path);
  ~LineChild();
  LineChild(const LineChild&) = delete;
  LineChild& operator=(const LineChild&) = delete;

  void write_line(const std::string& line);
  // Throws CompilerTimeout when no full line arrives before `deadline`, and
  // Error when the child closed its output.
  std::string read_line(std::chrono::steady_clock::time_point deadline);
  bool alive();
  void kill();

 private:
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
};

}  // namespace pcr
