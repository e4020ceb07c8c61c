// Copyright 2026 The unas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Line-oriented child process (POSIX). The child runs `/bin/sh -c command`
// in its own process group with stdin and stdout bound to one end of a
// socketpair; stderr is inherited.

#ifndef UNAS_SUBPROCESS_HPP_
#define UNAS_SUBPROCESS_HPP_

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>

extern char** environ;

namespace unas {

class ChildProcess {
 public:
  using Clock = std::chrono::steady_clock;

  enum class IoStatus { kOk, kTimeout, kClosed };

  /// Throws std::runtime_error if the process cannot be started.
  explicit ChildProcess(const std::string& command) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
      throw std::runtime_error(std::string("socketpair: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    const char* argv[] = {"sh", "-c", command.c_str(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, &attr,
                                 const_cast<char* const*>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    ::close(fds[1]);
    if (rc != 0) {
      ::close(fds[0]);
      pid_ = -1;
      throw std::runtime_error(std::string("posix_spawn: ") + std::strerror(rc));
    }
    fd_ = fds[0];
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() { shutdown(std::chrono::milliseconds(500)); }

  IoStatus write_line(std::string_view line, Clock::time_point deadline) {
    std::string data(line);
    data += '\n';
    std::size_t sent = 0;
    while (sent < data.size()) {
      const auto status = wait_for(POLLOUT, deadline);
      if (status != IoStatus::kOk) return status;
      const ssize_t n =
          ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        return IoStatus::kClosed;
      }
      sent += static_cast<std::size_t>(n);
    }
    return IoStatus::kOk;
  }

  /// Reads up to the next newline (excluded from `line`).
  IoStatus read_line(std::string& line, Clock::time_point deadline) {
    for (;;) {
      const std::size_t newline = buffer_.find('\n');
      if (newline != std::string::npos) {
        line = buffer_.substr(0, newline);
        buffer_.erase(0, newline + 1);
        return IoStatus::kOk;
      }
      const auto status = wait_for(POLLIN, deadline);
      if (status != IoStatus::kOk) return status;
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        return IoStatus::kClosed;
      }
      if (n == 0) return IoStatus::kClosed;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  /// Closes the channel, waits up to `grace` for a clean exit, then kills the
  /// process group. Returns the wait status, or nullopt if already reaped.
  std::optional<int> shutdown(std::chrono::milliseconds grace) {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
    if (pid_ <= 0) return std::nullopt;
    int status = 0;
    const auto deadline = Clock::now() + grace;
    for (;;) {
      const pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r == pid_) break;
      if (r < 0 && errno != EINTR) {
        pid_ = -1;
        return std::nullopt;
      }
      if (Clock::now() >= deadline) {
        ::kill(-pid_, SIGKILL);
        while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
        }
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    pid_ = -1;
    return status;
  }

  /// Kills the process group immediately.
  std::optional<int> kill() { return shutdown(std::chrono::milliseconds(0)); }

 private:
  IoStatus wait_for(short events, Clock::time_point deadline) {
    for (;;) {
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (remaining.count() <= 0) return IoStatus::kTimeout;
      pollfd p{fd_, events, 0};
      const int timeout_ms =
          remaining.count() > 60000 ? 60000 : static_cast<int>(remaining.count());
      const int rc = ::poll(&p, 1, timeout_ms);
      if (rc < 0) {
        if (errno == EINTR) continue;
        return IoStatus::kClosed;
      }
      if (rc == 0) continue;
      if (p.revents & events) return IoStatus::kOk;
      if (p.revents & (POLLHUP | POLLERR | POLLNVAL)) return IoStatus::kClosed;
    }
  }

  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace unas

#endif  // UNAS_SUBPROCESS_HPP_
