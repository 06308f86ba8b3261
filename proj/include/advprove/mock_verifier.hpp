#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "advprove/verifier.hpp"

namespace advprove::verifier {

// Deterministic stand-in verifier. Behavior is steered by markers embedded
// in the proof body, so tests can script pass/fail/timeout/fault scenarios
// per job:
//
//   [verdict:fail]    report status fail
//   [verdict:error]   report status error
//   [sleep-ms:N]      delay the response by N milliseconds
//   [drop]            close the connection without responding
//   [garbage]         respond with a non-protocol line
//
// Escape tactics (sorry/admit) force a non-pass regardless of markers, and
// the modified flag comes from header comparison against the submitted
// statement. A proof may verify and still be modified.
class MockVerifier {
 public:
  VerifyResult evaluate(const VerifyJob& job) const {
    VerifyResult r;
    r.job_id = job.job_id;
    r.used_escape_tactic = contains_escape_tactic(job.proof_body);
    r.modified = detect_modification(job.formal_statement, job.proof_body);
    if (r.used_escape_tactic) {
      r.status = core::Status::fail;
      r.diagnostics = "escape tactic closes no goal";
    } else if (job.proof_body.find("[verdict:fail]") != std::string::npos) {
      r.status = core::Status::fail;
      r.diagnostics = "proof rejected";
    } else if (job.proof_body.find("[verdict:error]") != std::string::npos) {
      r.status = core::Status::error;
      r.diagnostics = "elaboration error";
    } else {
      r.status = core::Status::pass;
      r.diagnostics = r.modified ? "verified against restated goal" : "ok";
    }
    return r;
  }

  static int sleep_ms_of(const std::string& proof_body) {
    const auto pos = proof_body.find("[sleep-ms:");
    if (pos == std::string::npos) return 0;
    const auto end = proof_body.find(']', pos);
    if (end == std::string::npos) return 0;
    try {
      return std::stoi(proof_body.substr(pos + 10, end - pos - 10));
    } catch (const std::exception&) {
      return 0;
    }
  }
};

// Line-protocol TCP server around MockVerifier. Binds 127.0.0.1 on the given
// port (0 picks a free one).
class MockVerifierServer {
 public:
  explicit MockVerifierServer(MockVerifier verifier = {})
      : verifier_(verifier) {}

  ~MockVerifierServer() { stop(); }

  int start(int port = 0) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("mock verifier: socket failed");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
      throw std::runtime_error("mock verifier: bind failed");
    if (::listen(listen_fd_, 64) != 0)
      throw std::runtime_error("mock verifier: listen failed");
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_.store(true);
    accept_thread_ = std::thread([this] { accept_loop(); });
    return port_;
  }

  int port() const { return port_; }

  std::string endpoint() const {
    return "127.0.0.1:" + std::to_string(port_);
  }

  void stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> workers;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      workers.swap(client_threads_);
      for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& t : workers)
      if (t.joinable()) t.join();
  }

 private:
  void accept_loop() {
    while (running_.load()) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) break;
      std::lock_guard<std::mutex> lock(mutex_);
      client_fds_.push_back(fd);
      client_threads_.emplace_back([this, fd] { serve(fd); });
    }
  }

  void serve(int fd) {
    std::string buffer;
    char chunk[4096];
    bool open = true;
    while (open && running_.load()) {
      const auto nl = buffer.find('\n');
      if (nl == std::string::npos) {
        const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        continue;
      }
      const std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (line.empty()) continue;
      open = handle_line(fd, line);
    }
    ::close(fd);
  }

  // Returns false when the connection should be dropped.
  bool handle_line(int fd, const std::string& line) {
    VerifyJob job;
    try {
      job = parse_request(line);
    } catch (const std::exception& e) {
      VerifyResult r;
      r.status = core::Status::error;
      r.diagnostics = std::string("bad request: ") + e.what();
      return send_line(fd, serialize_response(r));
    }
    if (job.proof_body.find("[drop]") != std::string::npos) return false;
    const int delay = MockVerifier::sleep_ms_of(job.proof_body);
    if (delay > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    if (job.proof_body.find("[garbage]") != std::string::npos)
      return send_line(fd, "!! not a protocol record !!");
    return send_line(fd, serialize_response(verifier_.evaluate(job)));
  }

  static bool send_line(int fd, const std::string& line) {
    std::string data = line;
    data += '\n';
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n =
          ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

  MockVerifier verifier_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex mutex_;
  std::vector<int> client_fds_;
  std::vector<std::thread> client_threads_;
};

}  // namespace advprove::verifier
