#pragma once

#include <fcntl.h>
#include <linux/audit.h>
#include <linux/filter.h>
#include <linux/seccomp.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/ioctl.h>
#include <sys/prctl.h>
#include <sys/resource.h>
#include <sys/socket.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sdeval/error.hpp"

// Child-process supervision: process-group kill on a wall-clock deadline,
// stdout/stderr capture, optional file-size limit, and optional network
// denial. Network denial layers two mechanisms:
//   * a fresh network namespace (no interfaces besides a down loopback);
//   * a seccomp filter that routes socket(AF_INET|AF_INET6|AF_PACKET) to this
//     supervisor, which records the attempt and fails the call with EACCES.
// The namespace alone already makes connections fail; the filter is what
// lets attempts be logged.

namespace sdeval::util {

struct ProcessOptions {
  std::vector<std::string> argv;
  std::filesystem::path cwd;  // empty: inherit
  std::optional<std::chrono::milliseconds> timeout;
  std::filesystem::path stdout_path;  // empty: captured to a temporary file
  std::filesystem::path stderr_path;
  bool deny_network = false;
  std::optional<std::uint64_t> max_file_bytes;
  std::size_t tail_bytes = 4096;
};

enum class ProcessExit { kExited, kSignaled, kTimedOut };

struct ProcessResult {
  ProcessExit how = ProcessExit::kExited;
  int exit_code = -1;
  int signal = 0;
  double wall_time_s = 0.0;
  std::string stdout_tail;
  std::string stderr_tail;
  std::vector<std::string> network_attempts;
  std::vector<std::string> isolation;  // active mechanisms, e.g. {"netns", "seccomp-notify"}

  bool ok() const { return how == ProcessExit::kExited && exit_code == 0; }
};

// Grace between the deadline and the SIGKILL reaching the whole group is
// bounded by the supervisor's poll interval (20 ms) plus reaping.
inline constexpr double kKillGraceSeconds = 1.0;

namespace detail {

inline std::string read_tail(const std::filesystem::path& p, std::size_t limit) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  const std::size_t start = size > limit ? size - limit : 0;
  in.seekg(static_cast<std::streamoff>(start));
  std::string s(size - start, '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}

inline bool send_fd(int sock, int fd) {
  char dummy = fd >= 0 ? 'F' : 'N';
  iovec iov{&dummy, 1};
  msghdr msg{};
  msg.msg_iov = &iov;
  msg.msg_iovlen = 1;
  alignas(cmsghdr) char ctrl[CMSG_SPACE(sizeof(int))] = {};
  if (fd >= 0) {
    msg.msg_control = ctrl;
    msg.msg_controllen = sizeof(ctrl);
    cmsghdr* c = CMSG_FIRSTHDR(&msg);
    c->cmsg_level = SOL_SOCKET;
    c->cmsg_type = SCM_RIGHTS;
    c->cmsg_len = CMSG_LEN(sizeof(int));
    std::memcpy(CMSG_DATA(c), &fd, sizeof(int));
  }
  return sendmsg(sock, &msg, 0) == 1;
}

// Returns the received fd, -1 for an explicit "none", -2 on failure.
inline int recv_fd(int sock) {
  char dummy = 0;
  iovec iov{&dummy, 1};
  msghdr msg{};
  msg.msg_iov = &iov;
  msg.msg_iovlen = 1;
  alignas(cmsghdr) char ctrl[CMSG_SPACE(sizeof(int))] = {};
  msg.msg_control = ctrl;
  msg.msg_controllen = sizeof(ctrl);
  if (recvmsg(sock, &msg, 0) != 1) return -2;
  if (dummy != 'F') return -1;
  cmsghdr* c = CMSG_FIRSTHDR(&msg);
  if (!c || c->cmsg_type != SCM_RIGHTS) return -2;
  int fd;
  std::memcpy(&fd, CMSG_DATA(c), sizeof(int));
  return fd;
}

#if defined(__x86_64__)
inline constexpr std::uint32_t kAuditArch = AUDIT_ARCH_X86_64;
#elif defined(__aarch64__)
inline constexpr std::uint32_t kAuditArch = AUDIT_ARCH_AARCH64;
#else
inline constexpr std::uint32_t kAuditArch = 0;
#endif

// Installs the socket-family filter; returns the notification listener fd or -1.
inline int install_socket_filter() {
  if (kAuditArch == 0) return -1;
  constexpr std::uint32_t kArgLo = offsetof(seccomp_data, args);  // low word of args[0]
  sock_filter code[] = {
      BPF_STMT(BPF_LD | BPF_W | BPF_ABS, offsetof(seccomp_data, arch)),
      BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, kAuditArch, 1, 0),
      BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_ALLOW),
      BPF_STMT(BPF_LD | BPF_W | BPF_ABS, offsetof(seccomp_data, nr)),
      BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, SYS_socket, 1, 0),
      BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_ALLOW),
      BPF_STMT(BPF_LD | BPF_W | BPF_ABS, kArgLo),
      BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, AF_INET, 3, 0),
      BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, AF_INET6, 2, 0),
      BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, AF_PACKET, 1, 0),
      BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_ALLOW),
      BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_USER_NOTIF),
  };
  sock_fprog prog{static_cast<unsigned short>(sizeof(code) / sizeof(code[0])), code};
  if (prctl(PR_SET_NO_NEW_PRIVS, 1, 0, 0, 0) != 0) return -1;
  const long fd = syscall(SYS_seccomp, SECCOMP_SET_MODE_FILTER,
                          SECCOMP_FILTER_FLAG_NEW_LISTENER, &prog);
  return fd < 0 ? -1 : static_cast<int>(fd);
}

inline std::string family_name(std::uint64_t family) {
  switch (family) {
    case AF_INET: return "AF_INET";
    case AF_INET6: return "AF_INET6";
    case AF_PACKET: return "AF_PACKET";
    default: return std::to_string(family);
  }
}

// Receives one pending notification, records it and denies the call.
inline void handle_notification(int listener, std::vector<std::string>& log) {
  seccomp_notif_sizes sizes{};
  if (syscall(SYS_seccomp, SECCOMP_GET_NOTIF_SIZES, 0, &sizes) != 0) return;
  std::vector<unsigned char> req_buf(std::max<std::size_t>(sizes.seccomp_notif, sizeof(seccomp_notif)));
  std::vector<unsigned char> resp_buf(
      std::max<std::size_t>(sizes.seccomp_notif_resp, sizeof(seccomp_notif_resp)));
  auto* req = reinterpret_cast<seccomp_notif*>(req_buf.data());
  if (ioctl(listener, SECCOMP_IOCTL_NOTIF_RECV, req) != 0) return;
  log.push_back("pid " + std::to_string(req->pid) + ": socket(" +
                family_name(req->data.args[0]) + ") denied");
  auto* resp = reinterpret_cast<seccomp_notif_resp*>(resp_buf.data());
  resp->id = req->id;
  resp->val = 0;
  resp->error = -EACCES;
  resp->flags = 0;
  ioctl(listener, SECCOMP_IOCTL_NOTIF_SEND, resp);
}

inline std::filesystem::path temp_capture(const char* tag) {
  std::string templ = (std::filesystem::temp_directory_path() / "sdeval-").string() + tag + "-XXXXXX";
  const int fd = mkstemp(templ.data());
  if (fd < 0) fail(ErrorCode::kIo, "cannot create capture file");
  close(fd);
  return templ;
}

}  // namespace detail

inline ProcessResult run_process(const ProcessOptions& opt) {
  if (opt.argv.empty()) fail(ErrorCode::kInvalidArgument, "empty command");

  const bool own_stdout = opt.stdout_path.empty();
  const bool own_stderr = opt.stderr_path.empty();
  const auto out_path = own_stdout ? detail::temp_capture("out") : opt.stdout_path;
  const auto err_path = own_stderr ? detail::temp_capture("err") : opt.stderr_path;

  int err_pipe[2];  // exec failure reporting (CLOEXEC)
  if (pipe2(err_pipe, O_CLOEXEC) != 0) fail(ErrorCode::kIo, "pipe failed");
  int fd_sock[2];  // seccomp listener hand-off
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fd_sock) != 0) {
    fail(ErrorCode::kIo, "socketpair failed");
  }

  std::vector<std::string> args = opt.argv;
  std::vector<char*> cargv;
  for (auto& a : args) cargv.push_back(a.data());
  cargv.push_back(nullptr);

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = fork();
  if (pid < 0) fail(ErrorCode::kIo, "fork failed");

  if (pid == 0) {
    // Child: only async-signal-safe calls from here on.
    setpgid(0, 0);
    close(err_pipe[0]);
    close(fd_sock[0]);
    auto die = [&](int stage) {
      const int payload[2] = {stage, errno};
      [[maybe_unused]] auto n = write(err_pipe[1], payload, sizeof(payload));
      _exit(127);
    };
    const int out_fd = open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int errf = open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int null_fd = open("/dev/null", O_RDONLY);
    if (out_fd < 0 || errf < 0 || null_fd < 0) die(1);
    dup2(null_fd, 0);
    dup2(out_fd, 1);
    dup2(errf, 2);
    if (!opt.cwd.empty() && chdir(opt.cwd.c_str()) != 0) die(2);
    if (opt.max_file_bytes) {
      rlimit rl{*opt.max_file_bytes, *opt.max_file_bytes};
      setrlimit(RLIMIT_FSIZE, &rl);
    }
    int mechanisms = 0;
    if (opt.deny_network) {
      if (unshare(CLONE_NEWNET) == 0 || unshare(CLONE_NEWUSER | CLONE_NEWNET) == 0) mechanisms |= 1;
      const int listener = detail::install_socket_filter();
      if (listener >= 0) mechanisms |= 2;
      if (!detail::send_fd(fd_sock[1], listener)) die(3);
      if (listener >= 0) close(listener);
    } else {
      detail::send_fd(fd_sock[1], -1);
    }
    const int report[2] = {0, mechanisms};
    [[maybe_unused]] auto n = write(fd_sock[1], report, sizeof(report));
    close(fd_sock[1]);
    if (opt.deny_network && mechanisms == 0) {
      errno = EPERM;
      die(4);
    }
    execvp(cargv[0], cargv.data());
    die(5);
  }

  close(err_pipe[1]);
  close(fd_sock[1]);
  setpgid(pid, pid);

  ProcessResult res;
  const int listener = detail::recv_fd(fd_sock[0]);
  int report[2] = {0, 0};
  {
    std::size_t got = 0;
    while (got < sizeof(report)) {
      const ssize_t r = read(fd_sock[0], reinterpret_cast<char*>(report) + got, sizeof(report) - got);
      if (r <= 0) break;
      got += static_cast<std::size_t>(r);
    }
  }
  close(fd_sock[0]);
  if (report[1] & 1) res.isolation.push_back("netns");
  if (report[1] & 2) res.isolation.push_back("seccomp-notify");

  const auto deadline = opt.timeout ? std::optional(start + *opt.timeout) : std::nullopt;
  int status = 0;
  bool timed_out = false;
  for (;;) {
    const pid_t w = waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (deadline && std::chrono::steady_clock::now() >= *deadline) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      timed_out = true;
      break;
    }
    if (listener >= 0) {
      pollfd p{listener, POLLIN, 0};
      if (poll(&p, 1, 20) > 0) {
        if (p.revents & POLLIN) detail::handle_notification(listener, res.network_attempts);
      }
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  // Reap anything left in the group (e.g. background children).
  kill(-pid, SIGKILL);
  if (listener >= 0) close(listener);
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  int child_err[2] = {0, 0};
  const ssize_t nerr = read(err_pipe[0], child_err, sizeof(child_err));
  close(err_pipe[0]);

  res.stdout_tail = detail::read_tail(out_path, opt.tail_bytes);
  res.stderr_tail = detail::read_tail(err_path, opt.tail_bytes);
  if (own_stdout) std::filesystem::remove(out_path);
  if (own_stderr) std::filesystem::remove(err_path);

  if (nerr == static_cast<ssize_t>(sizeof(child_err))) {
    if (child_err[0] == 4) {
      fail(ErrorCode::kSandboxUnavailable,
           "network denial requested but neither network namespaces nor seccomp are available");
    }
    res.how = ProcessExit::kExited;
    res.exit_code = 127;
    res.stderr_tail += "\n[supervisor] failed to start '" + opt.argv[0] + "' (stage " +
                       std::to_string(child_err[0]) + "): " + std::strerror(child_err[1]);
    return res;
  }
  if (timed_out) {
    res.how = ProcessExit::kTimedOut;
  } else if (WIFEXITED(status)) {
    res.how = ProcessExit::kExited;
    res.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    res.how = ProcessExit::kSignaled;
    res.signal = WTERMSIG(status);
  }
  return res;
}

}  // namespace sdeval::util
