#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <mutex>
#include <regex>
#include <thread>

#include "tscp/bridge.hpp"

extern char** environ;

namespace tscp::bridge {

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string errno_text() { return std::strerror(errno); }

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::Unreachable, "write to adapter failed: " + errno_text());
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

// Buffered newline reader over a file descriptor with a poll() deadline.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}

  std::optional<std::string> read_line(std::chrono::steady_clock::time_point deadline) {
    for (;;) {
      const auto newline = buffer_.find('\n');
      if (newline != std::string::npos) {
        std::string line = buffer_.substr(0, newline);
        buffer_.erase(0, newline + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (eof_) {
        if (buffer_.empty()) return std::nullopt;
        std::string line = std::move(buffer_);
        buffer_.clear();
        return line;
      }
      const auto now = std::chrono::steady_clock::now();
      if (now >= deadline) throw Error(ErrorKind::Timeout, "no reply from adapter before deadline");
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
      pollfd pfd{fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining + 1, 1 << 30)));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorKind::Unreachable, "poll failed: " + errno_text());
      }
      if (ready == 0) continue;
      char chunk[65536];
      const ssize_t n = ::read(fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw Error(ErrorKind::Unreachable, "read from adapter failed: " + errno_text());
      }
      if (n == 0) {
        eof_ = true;
        continue;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buffer_;
  bool eof_ = false;
};

class ProcessChannel final : public LineChannel {
 public:
  explicit ProcessChannel(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0) {
      throw Error(ErrorKind::Unreachable, "pipe failed: " + errno_text());
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    const char* argv[] = {"sh", "-c", command.c_str(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr,
                                 const_cast<char* const*>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      throw Error(ErrorKind::Unreachable, "cannot spawn '" + command + "': " + std::strerror(rc));
    }
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    reader_ = std::make_unique<LineReader>(read_fd_);
  }

  ~ProcessChannel() override {
    ::close(write_fd_);
    ::close(read_fd_);
    // Closing stdin asks the adapter to exit; give it a moment before force.
    for (int i = 0; i < (abandoned_ ? 0 : 50); ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGTERM);
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

  void write_line(std::string_view line) override {
    std::string data(line);
    data.push_back('\n');
    write_all(write_fd_, data);
  }

  void abandon() override { abandoned_ = true; }

  std::optional<std::string> read_line(std::chrono::steady_clock::time_point deadline) override {
    return reader_->read_line(deadline);
  }

 private:
  pid_t pid_ = -1;
  bool abandoned_ = false;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::unique_ptr<LineReader> reader_;
};

class TcpChannel final : public LineChannel {
 public:
  TcpChannel(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* result = nullptr;
    const std::string service = std::to_string(port);
    const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result);
    if (rc != 0) {
      throw Error(ErrorKind::Unreachable, "cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    for (auto* ai = result; ai != nullptr; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        fd_ = fd;
        break;
      }
      ::close(fd);
    }
    ::freeaddrinfo(result);
    if (fd_ < 0) {
      throw Error(ErrorKind::Unreachable, "cannot connect to " + host + ":" + service);
    }
    reader_ = std::make_unique<LineReader>(fd_);
  }

  ~TcpChannel() override { ::close(fd_); }

  void write_line(std::string_view line) override {
    std::string data(line);
    data.push_back('\n');
    write_all(fd_, data);
  }

  std::optional<std::string> read_line(std::chrono::steady_clock::time_point deadline) override {
    return reader_->read_line(deadline);
  }

 private:
  int fd_ = -1;
  std::unique_ptr<LineReader> reader_;
};

}  // namespace

Endpoint Endpoint::parse(std::string_view text) {
  static const std::regex tcp_pattern(R"(^(?:tcp://)?([A-Za-z0-9._-]+|\[[0-9A-Fa-f:]+\]):([0-9]{1,5})$)");
  const std::string s(text);
  std::smatch match;
  Endpoint endpoint;
  if (std::regex_match(s, match, tcp_pattern)) {
    endpoint.kind = Kind::Tcp;
    endpoint.host = match[1].str();
    if (endpoint.host.front() == '[') endpoint.host = endpoint.host.substr(1, endpoint.host.size() - 2);
    endpoint.port = std::stoi(match[2].str());
    if (endpoint.port <= 0 || endpoint.port > 65535) {
      throw Error(ErrorKind::ConfigError, "bad port in endpoint '" + s + "'");
    }
    return endpoint;
  }
  if (s.empty()) throw Error(ErrorKind::ConfigError, "empty adapter endpoint");
  endpoint.kind = Kind::Process;
  endpoint.command = s;
  return endpoint;
}

std::string Endpoint::describe() const {
  if (kind == Kind::Tcp) return host + ":" + std::to_string(port);
  return "process '" + command + "'";
}

std::unique_ptr<LineChannel> open_channel(const Endpoint& endpoint) {
  ignore_sigpipe();
  if (endpoint.kind == Endpoint::Kind::Tcp) {
    return std::make_unique<TcpChannel>(endpoint.host, endpoint.port);
  }
  return std::make_unique<ProcessChannel>(endpoint.command);
}

}  // namespace tscp::bridge
