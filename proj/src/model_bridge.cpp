#include "fxeffect/model_bridge.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

extern char** environ;

namespace fxeffect {

std::vector<std::string> split_command(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string errno_text(int err) { return std::strerror(err); }

class ChildProcess {
 public:
  explicit ChildProcess(const ExternalModelConfig& config) : config_(config) {
    if (config.command.empty()) throw Error(ErrorKind::config, "external model command is empty");
    if (config.batch_size == 0) throw Error(ErrorKind::config, "batch_size must be >= 1");
    ignore_sigpipe();

    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw Error(ErrorKind::spawn_failure, "pipe: " + errno_text(errno));
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw Error(ErrorKind::spawn_failure, "pipe: " + errno_text(errno));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, to_child[1]);
    posix_spawn_file_actions_addclose(&actions, from_child[0]);

    std::vector<char*> argv;
    for (const auto& a : config.command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    int rc = ::posix_spawnp(&pid_, argv[0], &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      pid_ = -1;
      throw Error(ErrorKind::spawn_failure,
                  "cannot spawn '" + config.command[0] + "': " + errno_text(rc));
    }
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    ::fcntl(in_fd_, F_SETFL, ::fcntl(in_fd_, F_GETFL) | O_NONBLOCK);
    ::fcntl(out_fd_, F_SETFL, ::fcntl(out_fd_, F_GETFL) | O_NONBLOCK);
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() {
    if (in_fd_ >= 0) ::close(in_fd_);
    if (out_fd_ >= 0) ::close(out_fd_);
    if (pid_ <= 0) return;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

  std::vector<double> predict(const Matrix& x) {
    std::vector<double> out;
    out.reserve(x.rows());
    for_each_batch(x, [&](std::size_t begin, std::size_t end) {
      auto lines = request('P', x, begin, end);
      for (std::size_t i = 0; i < lines.size(); ++i) {
        auto values = parse_line(lines[i], begin + i);
        if (values.size() != 1) {
          fail(ErrorKind::malformed_response,
               "expected 1 value on response line " + std::to_string(begin + i) + ", got " +
                   std::to_string(values.size()) + ": '" + lines[i] + "'");
        }
        out.push_back(values[0]);
      }
    });
    return out;
  }

  Matrix jacobian(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for_each_batch(x, [&](std::size_t begin, std::size_t end) {
      auto lines = request('J', x, begin, end);
      for (std::size_t i = 0; i < lines.size(); ++i) {
        auto values = parse_line(lines[i], begin + i);
        if (values.size() != x.cols()) {
          fail(ErrorKind::malformed_response,
               "expected " + std::to_string(x.cols()) + " values on jacobian line " +
                   std::to_string(begin + i) + ", got " + std::to_string(values.size()) +
                   ": '" + lines[i] + "'");
        }
        std::copy(values.begin(), values.end(), out.row(begin + i).begin());
      }
    });
    return out;
  }

 private:
  template <class F>
  void for_each_batch(const Matrix& x, F&& body) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (broken_) throw Error(broken_kind_, "external model unusable after earlier failure: " + broken_message_);
    for (std::size_t begin = 0; begin < x.rows(); begin += config_.batch_size) {
      body(begin, std::min(x.rows(), begin + config_.batch_size));
    }
  }

  [[noreturn]] void fail(ErrorKind kind, const std::string& message) {
    broken_ = true;
    broken_kind_ = kind;
    broken_message_ = message;
    throw Error(kind, message);
  }

  std::vector<double> parse_line(const std::string& line, std::size_t index) {
    std::vector<double> values;
    const char* p = line.c_str();
    while (true) {
      while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
      if (*p == '\0') break;
      char* end = nullptr;
      double v = std::strtod(p, &end);
      if (end == p || !(*end == '\0' || *end == ' ' || *end == '\t' || *end == '\r')) {
        fail(ErrorKind::malformed_response,
             "non-numeric response line " + std::to_string(index) + ": '" + line + "'");
      }
      values.push_back(v);
      p = end;
    }
    return values;
  }

  std::vector<std::string> request(char tag, const Matrix& x, std::size_t begin, std::size_t end) {
    const std::size_t rows = end - begin;
    std::string payload;
    payload.reserve(rows * x.cols() * 24 + 32);
    payload += tag;
    payload += ' ' + std::to_string(rows) + ' ' + std::to_string(x.cols()) + '\n';
    char buf[32];
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) {
        int n = std::snprintf(buf, sizeof buf, "%.17g", x(r, c));
        if (c > 0) payload += ' ';
        payload.append(buf, static_cast<std::size_t>(n));
      }
      payload += '\n';
    }

    std::vector<std::string> lines;
    lines.reserve(rows);
    std::size_t written = 0;
    const auto deadline = std::chrono::steady_clock::now() + config_.timeout;
    char chunk[65536];

    while (lines.size() < rows) {
      auto now = std::chrono::steady_clock::now();
      if (now >= deadline) {
        fail(ErrorKind::timeout, "external model did not answer within " +
                                     std::to_string(config_.timeout.count()) + " ms (" +
                                     std::to_string(lines.size()) + " of " +
                                     std::to_string(rows) + " lines received)");
      }
      int wait_ms = static_cast<int>(
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;

      pollfd fds[2];
      nfds_t nfds = 0;
      fds[nfds++] = {out_fd_, POLLIN, 0};
      if (written < payload.size()) fds[nfds++] = {in_fd_, POLLOUT, 0};
      int ready = ::poll(fds, nfds, wait_ms);
      if (ready < 0) {
        if (errno == EINTR) continue;
        fail(ErrorKind::oracle_failure, "poll: " + errno_text(errno));
      }
      if (ready == 0) continue;

      if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        ssize_t n = ::write(in_fd_, payload.data() + written, payload.size() - written);
        if (n > 0) {
          written += static_cast<std::size_t>(n);
        } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
          fail(ErrorKind::premature_exit,
               "external model closed its input after " + std::to_string(lines.size()) + " of " +
                   std::to_string(rows) + " rows answered");
        }
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        ssize_t n = ::read(out_fd_, chunk, sizeof chunk);
        if (n == 0) {
          fail(ErrorKind::premature_exit,
               "external model exited after sending " + std::to_string(lines.size()) + " of " +
                   std::to_string(rows) + " expected lines");
        }
        if (n < 0) {
          if (errno == EAGAIN || errno == EINTR) continue;
          fail(ErrorKind::oracle_failure, "read: " + errno_text(errno));
        }
        pending_.append(chunk, static_cast<std::size_t>(n));
        std::size_t pos;
        while ((pos = pending_.find('\n')) != std::string::npos) {
          std::string line = pending_.substr(0, pos);
          pending_.erase(0, pos + 1);
          if (lines.size() == rows) {
            fail(ErrorKind::malformed_response, "unexpected extra response line: '" + line + "'");
          }
          lines.push_back(std::move(line));
        }
      }
    }
    if (!pending_.empty()) {
      fail(ErrorKind::malformed_response, "unexpected extra response data: '" + pending_ + "'");
    }
    return lines;
  }

  ExternalModelConfig config_;
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string pending_;
  std::mutex mutex_;
  bool broken_ = false;
  ErrorKind broken_kind_ = ErrorKind::oracle_failure;
  std::string broken_message_;
};

}  // namespace

ModelOracle external_oracle(const ExternalModelConfig& config) {
  auto child = std::make_shared<ChildProcess>(config);
  ModelOracle oracle;
  oracle.predict = [child](const Matrix& x) { return child->predict(x); };
  if (config.mode == ExternalMode::predict_and_jacobian) {
    oracle.jacobian = [child](const Matrix& x) { return child->jacobian(x); };
  }
  return oracle;
}

namespace {
double step_for(Interval range, double h_rel) {
  return std::max(h_rel * range.width(), 1e-8);
}
}  // namespace

std::vector<double> fd_partial(const PredictFn& predict, const Matrix& x, std::size_t feature,
                               Interval range, double h_rel) {
  if (!(h_rel > 0.0)) throw Error(ErrorKind::invalid_argument, "h_rel must be positive");
  if (feature >= x.cols()) throw Error(ErrorKind::invalid_argument, "feature index out of range");
  const std::size_t m = x.rows();
  const double h = step_for(range, h_rel);
  Matrix shifted(2 * m, x.cols());
  for (std::size_t r = 0; r < m; ++r) {
    auto src = x.row(r);
    std::copy(src.begin(), src.end(), shifted.row(r).begin());
    std::copy(src.begin(), src.end(), shifted.row(m + r).begin());
    shifted(r, feature) += h;
    shifted(m + r, feature) -= h;
  }
  ModelOracle wrapped{predict, {}};
  std::vector<double> y = checked_predict(wrapped, shifted);
  std::vector<double> out(m);
  for (std::size_t r = 0; r < m; ++r) {
    // Use the realized step so rounding of x + h does not bias the quotient.
    double span = shifted(r, feature) - shifted(m + r, feature);
    out[r] = (y[r] - y[m + r]) / span;
  }
  return out;
}

Matrix fd_jacobian(const PredictFn& predict, const Matrix& x, std::span<const Interval> ranges,
                   double h_rel) {
  if (ranges.size() != x.cols()) {
    throw Error(ErrorKind::invalid_argument, "one range per column is required");
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    auto col = fd_partial(predict, x, j, ranges[j], h_rel);
    for (std::size_t r = 0; r < x.rows(); ++r) out(r, j) = col[r];
  }
  return out;
}

ModelOracle ensure_jacobian(ModelOracle oracle, const Dataset& dataset, double h_rel) {
  if (oracle.has_jacobian()) return oracle;
  std::vector<Interval> ranges;
  for (std::size_t j = 0; j < dataset.cols(); ++j) ranges.push_back(dataset.range(j));
  PredictFn predict = oracle.predict;
  oracle.jacobian = [predict, ranges, h_rel](const Matrix& x) {
    return fd_jacobian(predict, x, ranges, h_rel);
  };
  return oracle;
}

std::vector<double> partial_derivative(const ModelOracle& oracle, const Matrix& x,
                                       std::size_t feature, Interval range) {
  if (!oracle.has_jacobian()) return fd_partial(oracle.predict, x, feature, range);
  Matrix j = checked_jacobian(oracle, x);
  return j.column(feature);
}

}  // namespace fxeffect
