#pragma once

#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstring>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "advprove/core.hpp"

namespace advprove::verifier {

struct VerifyJob {
  std::string job_id;
  std::string formal_statement;
  std::string proof_body;
  double timeout_seconds = 60.0;
};

struct VerifyResult {
  std::string job_id;
  core::Status status = core::Status::error;
  bool modified = false;
  bool used_escape_tactic = false;
  std::string diagnostics;
};

// Raised when the endpoint itself is unreachable, as opposed to per-job
// failures, which always surface as VerifyResult records.
struct transport_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- wire format -----------------------------------------------------------
// One JSON record per line. nlohmann serializes keys sorted and numbers in
// shortest round-trip form, so canonical-form lines survive parse/serialize
// byte-for-byte.

inline std::string serialize_request(const VerifyJob& job) {
  nlohmann::json j;
  j["job_id"] = job.job_id;
  j["statement"] = job.formal_statement;
  j["proof"] = job.proof_body;
  j["timeout"] = job.timeout_seconds;
  return j.dump();
}

inline VerifyJob parse_request(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  VerifyJob job;
  job.job_id = j.at("job_id").get<std::string>();
  job.formal_statement = j.at("statement").get<std::string>();
  job.proof_body = j.at("proof").get<std::string>();
  job.timeout_seconds = j.at("timeout").get<double>();
  return job;
}

inline std::string serialize_response(const VerifyResult& r) {
  nlohmann::json j;
  j["job_id"] = r.job_id;
  j["status"] = core::to_string(r.status);
  j["modified"] = r.modified;
  j["escape"] = r.used_escape_tactic;
  j["diagnostics"] = r.diagnostics;
  return j.dump();
}

inline VerifyResult parse_response(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  VerifyResult r;
  r.job_id = j.at("job_id").get<std::string>();
  r.status = core::status_from_string(j.at("status").get<std::string>());
  r.modified = j.at("modified").get<bool>();
  r.used_escape_tactic = j.at("escape").get<bool>();
  r.diagnostics = j.at("diagnostics").get<std::string>();
  return r;
}

// --- statement-modification and escape detection ---------------------------

namespace detail {

inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace detail

// Collapses whitespace runs and keeps a separator only where two word
// characters would otherwise merge, so layout-only differences (including
// spacing around delimiters and operators) compare equal.
inline std::string canonicalize_header(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      if (detail::is_word_char(c) && detail::is_word_char(out.back()))
        out += ' ';
      pending_space = false;
    }
    out += c;
  }
  return out;
}

// The statement a proof claims to prove: everything from the "theorem"
// keyword to the ":=" proof marker.
inline std::optional<std::string> extract_theorem_header(
    const std::string& text) {
  const auto start = text.find("theorem");
  if (start == std::string::npos) return std::nullopt;
  auto end = text.find(":=", start);
  if (end == std::string::npos) end = text.size();
  return text.substr(start, end - start);
}

// True iff the proof restates a goal that differs from the original
// statement (after canonicalization). A proof with no recognizable header is
// conservatively treated as modified.
inline bool detect_modification(const std::string& original_statement,
                                const std::string& proof_body) {
  const auto proof_header = extract_theorem_header(proof_body);
  if (!proof_header) return true;
  const auto original_header = extract_theorem_header(original_statement);
  const std::string original_text =
      original_header ? *original_header : original_statement;
  return canonicalize_header(*proof_header) !=
         canonicalize_header(original_text);
}

// Word-boundary search for the goal-closing keywords.
inline bool contains_escape_tactic(const std::string& proof_body) {
  static const char* kKeywords[] = {"sorry", "admit"};
  auto is_word_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  for (const char* kw : kKeywords) {
    const std::size_t len = std::strlen(kw);
    std::size_t pos = proof_body.find(kw);
    while (pos != std::string::npos) {
      const bool left_ok = pos == 0 || !is_word_char(proof_body[pos - 1]);
      const bool right_ok = pos + len == proof_body.size() ||
                            !is_word_char(proof_body[pos + len]);
      if (left_ok && right_ok) return true;
      pos = proof_body.find(kw, pos + 1);
    }
  }
  return false;
}

// --- transport --------------------------------------------------------------

namespace detail {

struct Endpoint {
  std::string host;
  std::string port;
};

inline Endpoint parse_endpoint(std::string address) {
  if (address.rfind("tcp://", 0) == 0) address = address.substr(6);
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
    throw std::invalid_argument("verifier: endpoint must be host:port, got '" +
                                address + "'");
  return {address.substr(0, colon), address.substr(colon + 1)};
}

class Connection {
 public:
  Connection() = default;
  ~Connection() { close(); }
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  bool open(const Endpoint& ep) {
    close();
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(ep.host.c_str(), ep.port.c_str(), &hints, &res) != 0)
      return false;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        fd_ = fd;
        break;
      }
      ::close(fd);
    }
    ::freeaddrinfo(res);
    return fd_ >= 0;
  }

  bool connected() const { return fd_ >= 0; }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
    buffer_.clear();
  }

  bool send_line(const std::string& line) {
    std::string data = line;
    data += '\n';
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n =
          ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

  enum class RecvStatus { line, closed, timed_out };

  RecvStatus recv_line(std::string& out, double timeout_seconds) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_seconds);
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        out = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return RecvStatus::line;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) return RecvStatus::timed_out;
      pollfd pfd{fd_, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, static_cast<int>(remaining.count()) + 1);
      if (pr < 0) return RecvStatus::closed;
      if (pr == 0) return RecvStatus::timed_out;
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n <= 0) return RecvStatus::closed;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace detail

struct SubmitOptions {
  int worker_limit = 8;
  // Reconnect attempts per job before it is reported as an error.
  int retries_per_job = 2;
  std::string replay_log_path;  // empty disables replay logging
};

// Dispatches the batch over up to worker_limit concurrent connections and
// returns exactly one result per job, in job order. Per-job failures become
// error/timeout results; only an unreachable endpoint throws.
inline std::vector<VerifyResult> submit_batch(
    const std::vector<VerifyJob>& jobs, const std::string& endpoint,
    const SubmitOptions& options = {}) {
  if (jobs.empty()) throw std::invalid_argument("submit_batch: empty batch");
  {
    std::set<std::string> ids;
    for (const auto& j : jobs)
      if (!ids.insert(j.job_id).second)
        throw std::invalid_argument("submit_batch: duplicate job_id '" +
                                    j.job_id + "'");
  }
  const auto ep = detail::parse_endpoint(endpoint);
  {
    detail::Connection probe;
    if (!probe.open(ep))
      throw transport_error("submit_batch: endpoint unreachable: " + endpoint);
  }

  std::ofstream replay;
  std::mutex replay_mutex;
  if (!options.replay_log_path.empty()) {
    replay.open(options.replay_log_path, std::ios::app);
    if (!replay)
      throw std::runtime_error("submit_batch: cannot open replay log " +
                               options.replay_log_path);
  }
  auto log_exchange = [&](const std::string& request,
                          const std::string& response) {
    if (!replay.is_open()) return;
    std::lock_guard<std::mutex> lock(replay_mutex);
    replay << request << '\n' << response << '\n';
  };

  std::vector<VerifyResult> results(jobs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    detail::Connection conn;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      const VerifyJob& job = jobs[i];
      const std::string request = serialize_request(job);
      VerifyResult result;
      result.job_id = job.job_id;
      bool done = false;
      for (int attempt = 0; attempt <= options.retries_per_job && !done;
           ++attempt) {
        if (!conn.connected() && !conn.open(ep)) {
          result.status = core::Status::error;
          result.diagnostics = "connect failed";
          continue;
        }
        if (!conn.send_line(request)) {
          conn.close();
          result.status = core::Status::error;
          result.diagnostics = "send failed";
          continue;
        }
        std::string line;
        const auto rs = conn.recv_line(line, job.timeout_seconds);
        if (rs == detail::Connection::RecvStatus::timed_out) {
          // A late reply would desynchronize the stream; drop the connection.
          conn.close();
          result.status = core::Status::timeout;
          result.diagnostics = "no response within " +
                               std::to_string(job.timeout_seconds) + "s";
          done = true;
        } else if (rs == detail::Connection::RecvStatus::closed) {
          conn.close();
          result.status = core::Status::error;
          result.diagnostics = "connection closed by verifier";
        } else {
          try {
            VerifyResult parsed = parse_response(line);
            if (parsed.job_id != job.job_id) {
              conn.close();
              result.status = core::Status::error;
              result.diagnostics = "response for wrong job id '" +
                                   parsed.job_id + "'";
            } else {
              result = parsed;
              done = true;
            }
          } catch (const std::exception& e) {
            conn.close();
            result.status = core::Status::error;
            result.diagnostics = std::string("unparseable response: ") +
                                 e.what();
          }
        }
      }
      log_exchange(request, serialize_response(result));
      results[i] = result;
    }
  };

  const int nworkers =
      std::min<std::size_t>(std::max(1, options.worker_limit), jobs.size());
  std::vector<std::thread> threads;
  threads.reserve(nworkers);
  for (int w = 0; w < nworkers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return results;
}

}  // namespace advprove::verifier
