#include "pcr/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <mutex>

#include "pcr/text.hpp"

namespace pcr {

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  void close_read() {
    if (fd[0] >= 0) ::close(fd[0]);
    fd[0] = -1;
  }
  void close_write() {
    if (fd[1] >= 0) ::close(fd[1]);
    fd[1] = -1;
  }
  int release_read() {
    int r = fd[0];
    fd[0] = -1;
    return r;
  }
  int release_write() {
    int w = fd[1];
    fd[1] = -1;
    return w;
  }
};

std::vector<char*> make_argv(const std::vector<std::string>& argv) {
  std::vector<char*> out;
  for (const auto& a : argv) out.push_back(const_cast<char*>(a.c_str()));
  out.push_back(nullptr);
  return out;
}

int decode_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

// Forks and execs. `stdin_fd`, `stdout_fd`, `stderr_fd` are dup'ed onto 0-2
// in the child. Exec failure is reported back through a CLOEXEC pipe.
pid_t spawn(const std::vector<std::string>& argv, int stdin_fd, int stdout_fd, int stderr_fd) {
  if (argv.empty()) throw ToolchainMissing("empty command line");
  // A child that exits early must surface as an error, not kill us on write.
  static std::once_flag sigpipe_once;
  std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
  auto cargv = make_argv(argv);
  Pipe status;
  pid_t pid = ::fork();
  if (pid < 0) throw Error(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(stdin_fd, 0);
    ::dup2(stdout_fd, 1);
    ::dup2(stderr_fd, 2);
    ::setpgid(0, 0);
    ::execvp(cargv[0], cargv.data());
    int err = errno;
    (void)!::write(status.fd[1], &err, sizeof err);
    ::_exit(127);
  }
  status.close_write();
  int err = 0;
  ssize_t n;
  do {
    n = ::read(status.fd[0], &err, sizeof err);
  } while (n < 0 && errno == EINTR);
  if (n == sizeof err) {
    int ignored;
    ::waitpid(pid, &ignored, 0);
    throw ToolchainMissing("cannot execute '" + argv[0] + "': " + std::strerror(err));
  }
  return pid;
}

void kill_group(pid_t pid) {
  ::kill(-pid, SIGKILL);
  ::kill(pid, SIGKILL);
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, std::chrono::milliseconds timeout,
                          const std::string& input) {
  Pipe in, out, err;
  pid_t pid = spawn(argv, in.fd[0], out.fd[1], err.fd[1]);
  in.close_read();
  out.close_write();
  err.close_write();
  if (input.empty()) in.close_write();

  ProcessResult result;
  auto deadline = std::chrono::steady_clock::now() + timeout;
  std::size_t written = 0;
  char buf[8192];
  while (out.fd[0] >= 0 || err.fd[0] >= 0) {
    std::vector<pollfd> fds;
    if (out.fd[0] >= 0) fds.push_back({out.fd[0], POLLIN, 0});
    if (err.fd[0] >= 0) fds.push_back({err.fd[0], POLLIN, 0});
    if (in.fd[1] >= 0) fds.push_back({in.fd[1], POLLOUT, 0});
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      kill_group(pid);
      int ignored;
      ::waitpid(pid, &ignored, 0);
      throw CompilerTimeout("'" + argv[0] + "' did not finish within " + std::to_string(timeout.count()) + " ms");
    }
    int rc = ::poll(fds.data(), fds.size(), static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("poll: ") + std::strerror(errno));
    }
    for (const auto& p : fds) {
      if (!p.revents) continue;
      if (p.fd == in.fd[1]) {
        ssize_t n = ::write(p.fd, input.data() + written, input.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if (n < 0 && errno != EAGAIN && errno != EINTR) written = input.size();
        if (written >= input.size()) in.close_write();
        continue;
      }
      ssize_t n = ::read(p.fd, buf, sizeof buf);
      if (n > 0) {
        (p.fd == out.fd[0] ? result.out : result.err).append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
        if (p.fd == out.fd[0]) {
          out.close_read();
        } else {
          err.close_read();
        }
      }
    }
  }
  in.close_write();
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = decode_status(status);
  return result;
}

std::optional<std::string> find_executable(const std::string& name) {
  auto usable = [](const std::string& p) {
    struct stat st {};
    return ::stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(p.c_str(), X_OK) == 0;
  };
  if (name.empty()) return std::nullopt;
  if (name.find('/') != std::string::npos) {
    if (usable(name)) return name;
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  if (!path) return std::nullopt;
  std::string_view rest(path);
  while (true) {
    auto colon = rest.find(':');
    auto dir = rest.substr(0, colon);
    std::string candidate = (dir.empty() ? std::string(".") : std::string(dir)) + "/" + name;
    if (usable(candidate)) return candidate;
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  return std::nullopt;
}

LineChild::LineChild(const std::vector<std::string>& argv, const std::string& stderr_path) {
  Pipe in, out;
  int err_fd = ::open(stderr_path.empty() ? "/dev/null" : stderr_path.c_str(),
                      O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (err_fd < 0) throw IoError(stderr_path, std::strerror(errno));
  try {
    pid_ = spawn(argv, in.fd[0], out.fd[1], err_fd);
  } catch (...) {
    ::close(err_fd);
    throw;
  }
  ::close(err_fd);
  in_fd_ = in.release_write();
  out_fd_ = out.release_read();
}

LineChild::~LineChild() { kill(); }

void LineChild::write_line(const std::string& line) {
  std::string data = line + "\n";
  std::size_t done = 0;
  while (done < data.size()) {
    ssize_t n = ::write(in_fd_, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("write to child: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

std::string LineChild::read_line(std::chrono::steady_clock::time_point deadline) {
  char buf[8192];
  while (true) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw CompilerTimeout("compiler server did not answer in time");
    pollfd p{out_fd_, POLLIN, 0};
    int rc = ::poll(&p, 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("poll: ") + std::strerror(errno));
    }
    if (rc == 0) continue;
    ssize_t n = ::read(out_fd_, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("read from child: ") + std::strerror(errno));
    }
    if (n == 0) throw Error("compiler server exited unexpectedly");
    buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

bool LineChild::alive() {
  if (pid_ <= 0) return false;
  int status;
  pid_t r = ::waitpid(pid_, &status, WNOHANG);
  if (r == pid_) {
    pid_ = -1;
    return false;
  }
  return true;
}

void LineChild::kill() {
  if (in_fd_ >= 0) ::close(in_fd_);
  if (out_fd_ >= 0) ::close(out_fd_);
  in_fd_ = out_fd_ = -1;
  if (pid_ > 0) {
    kill_group(pid_);
    int status;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
  }
  pid_ = -1;
}

}  // namespace pcr
