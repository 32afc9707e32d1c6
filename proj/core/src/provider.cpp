#include "conceptlens/provider.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "conceptlens/error.hpp"
#include "jsonl.hpp"

extern char** environ;

namespace conceptlens {

using detail::json;

namespace {

/// Spawns `/bin/sh -c command`, optionally wiring the child's stdin/stdout.
int spawn_shell(const std::string& command, int child_stdin, int child_stdout) {
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  if (child_stdin >= 0) posix_spawn_file_actions_adddup2(&actions, child_stdin, STDIN_FILENO);
  if (child_stdout >= 0) posix_spawn_file_actions_adddup2(&actions, child_stdout, STDOUT_FILENO);
  std::string sh = "/bin/sh";
  std::string flag = "-c";
  std::string cmd = command;
  char* argv[] = {sh.data(), flag.data(), cmd.data(), nullptr};
  pid_t pid = -1;
  const int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw Error(ErrorCode::kProviderUnavailable, "cannot start provider: " + std::string(std::strerror(rc)));
  }
  return pid;
}

struct Reply {
  std::uint64_t id;
  std::string label;
};

Reply parse_reply(const std::string& line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::exception&) {
    throw Error(ErrorCode::kProviderProtocolError, "unparsable reply: " + line);
  }
  if (!obj.is_object()) throw Error(ErrorCode::kProviderProtocolError, "reply is not an object: " + line);
  if (auto it = obj.find("error"); it != obj.end()) {
    throw Error(ErrorCode::kProviderProtocolError, "provider error: " + it->dump());
  }
  auto id = obj.find("id");
  auto label = obj.find("label");
  if (id == obj.end() || !id->is_number_unsigned() || label == obj.end() || !label->is_string()) {
    throw Error(ErrorCode::kProviderProtocolError, "malformed reply: " + line);
  }
  return Reply{id->get<std::uint64_t>(), label->get<std::string>()};
}

/// Collects replies for ids [base, base + n).
class ReplySink {
 public:
  ReplySink(std::uint64_t base, std::size_t n) : base_(base), labels_(n) {}

  /// Returns the slot index filled.
  std::size_t accept(const Reply& r) {
    if (r.id < base_ || r.id - base_ >= labels_.size()) {
      throw Error(ErrorCode::kProviderProtocolError, "reply for unknown id " + std::to_string(r.id));
    }
    auto& slot = labels_[r.id - base_];
    if (slot) throw Error(ErrorCode::kProviderProtocolError, "repeated reply for id " + std::to_string(r.id));
    slot = r.label;
    ++answered_;
    return static_cast<std::size_t>(r.id - base_);
  }

  [[nodiscard]] bool complete() const noexcept { return answered_ == labels_.size(); }
  [[nodiscard]] std::size_t missing() const noexcept { return labels_.size() - answered_; }

  std::vector<std::string> take() {
    std::vector<std::string> out;
    out.reserve(labels_.size());
    for (auto& l : labels_) out.push_back(std::move(*l));
    return out;
  }

 private:
  std::uint64_t base_;
  std::vector<std::optional<std::string>> labels_;
  std::size_t answered_ = 0;
};

}  // namespace

std::string encode_request(std::uint64_t id, const std::string& text) {
  return json{{"id", id}, {"text", text}}.dump();
}

std::string encode_response(std::uint64_t id, const std::string& label) {
  return json{{"id", id}, {"label", label}}.dump();
}

SubprocessProvider::SubprocessProvider(std::string command, SubprocessOptions options)
    : command_(std::move(command)), options_(options) {
  if (options_.batch_size == 0 || options_.max_in_flight == 0) {
    throw Error(ErrorCode::kInvalidArgument, "batch size and in-flight limit must be positive");
  }
  ::signal(SIGPIPE, SIG_IGN);
  int in[2];
  int out[2];
  if (::pipe2(in, O_CLOEXEC) != 0) throw Error(ErrorCode::kProviderUnavailable, "pipe failed");
  if (::pipe2(out, O_CLOEXEC) != 0) {
    ::close(in[0]);
    ::close(in[1]);
    throw Error(ErrorCode::kProviderUnavailable, "pipe failed");
  }
  try {
    pid_ = spawn_shell(command_, in[0], out[1]);
  } catch (...) {
    for (int fd : {in[0], in[1], out[0], out[1]}) ::close(fd);
    throw;
  }
  ::close(in[0]);
  ::close(out[1]);
  to_child_ = in[1];
  from_child_ = out[0];
  ::fcntl(to_child_, F_SETFL, ::fcntl(to_child_, F_GETFL) | O_NONBLOCK);
  ::fcntl(from_child_, F_SETFL, ::fcntl(from_child_, F_GETFL) | O_NONBLOCK);
}

SubprocessProvider::~SubprocessProvider() { shutdown(); }

void SubprocessProvider::shutdown() noexcept {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ <= 0) return;
  int status = 0;
  for (int i = 0; i < 200; ++i) {
    if (::waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(pid_, SIGKILL);
  ::waitpid(pid_, &status, 0);
  pid_ = -1;
}

void SubprocessProvider::fail_unavailable(const std::string& why) {
  broken_ = true;
  throw Error(ErrorCode::kProviderUnavailable, "provider '" + command_ + "': " + why);
}

std::vector<std::string> SubprocessProvider::predict(std::span<const std::string> texts) {
  if (broken_) throw Error(ErrorCode::kProviderUnavailable, "provider '" + command_ + "' is no longer usable");
  const std::uint64_t base = next_id_;
  next_id_ += texts.size();
  ReplySink sink(base, texts.size());
  if (texts.empty()) return {};

  const std::size_t bs = options_.batch_size;
  const std::size_t batches = (texts.size() + bs - 1) / bs;
  std::vector<std::size_t> remaining(batches);
  for (std::size_t b = 0; b < batches; ++b) remaining[b] = std::min(bs, texts.size() - b * bs);
  std::size_t next_batch = 0;
  std::size_t in_flight = 0;
  std::string pending;
  std::size_t pending_offset = 0;

  try {
    while (!sink.complete()) {
      while (pending_offset == pending.size() && next_batch < batches && in_flight < options_.max_in_flight) {
        pending.clear();
        pending_offset = 0;
        const std::size_t begin = next_batch * bs;
        const std::size_t end = std::min(texts.size(), begin + bs);
        for (std::size_t i = begin; i < end; ++i) {
          pending += encode_request(base + i, texts[i]);
          pending += '\n';
        }
        ++next_batch;
        ++in_flight;
      }

      pollfd fds[2] = {{from_child_, POLLIN, 0}, {to_child_, POLLOUT, 0}};
      const nfds_t nfds = pending_offset < pending.size() ? 2 : 1;
      const int ready = ::poll(fds, nfds, static_cast<int>(options_.timeout.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        fail_unavailable(std::string("poll: ") + std::strerror(errno));
      }
      if (ready == 0) fail_unavailable("timed out waiting for " + std::to_string(sink.missing()) + " replies");

      if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const ssize_t w = ::write(to_child_, pending.data() + pending_offset, pending.size() - pending_offset);
        if (w < 0 && errno != EAGAIN && errno != EINTR) fail_unavailable(std::string("write: ") + std::strerror(errno));
        if (w > 0) pending_offset += static_cast<std::size_t>(w);
      }

      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[65536];
        const ssize_t r = ::read(from_child_, buf, sizeof(buf));
        if (r == 0) fail_unavailable("exited with " + std::to_string(sink.missing()) + " replies outstanding");
        if (r < 0) {
          if (errno == EAGAIN || errno == EINTR) continue;
          fail_unavailable(std::string("read: ") + std::strerror(errno));
        }
        read_buffer_.append(buf, static_cast<std::size_t>(r));
        std::size_t start = 0;
        for (std::size_t nl; (nl = read_buffer_.find('\n', start)) != std::string::npos; start = nl + 1) {
          std::string line = read_buffer_.substr(start, nl - start);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (line.find_first_not_of(" \t") == std::string::npos) continue;
          const std::size_t slot = sink.accept(parse_reply(line));
          if (--remaining[slot / bs] == 0) --in_flight;
        }
        read_buffer_.erase(0, start);
      }
    }
  } catch (const Error& e) {
    broken_ = true;
    throw;
  }
  return sink.take();
}

FileExchangeProvider::FileExchangeProvider(std::filesystem::path dir, std::string command)
    : dir_(std::move(dir)), command_(std::move(command)) {}

std::vector<std::string> FileExchangeProvider::predict(std::span<const std::string> texts) {
  const auto requests = dir_ / "requests.jsonl";
  const auto responses = dir_ / "responses.jsonl";
  const std::uint64_t base = next_id_;
  next_id_ += texts.size();
  {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    std::ofstream out(requests, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kProviderUnavailable, "cannot write " + requests.string());
    for (std::size_t i = 0; i < texts.size(); ++i) out << encode_request(base + i, texts[i]) << '\n';
  }
  if (!command_.empty()) {
    std::filesystem::remove(responses);
    std::string cmd = command_;
    for (const auto& [key, value] : {std::pair{std::string("{requests}"), requests.string()},
                                     std::pair{std::string("{responses}"), responses.string()}}) {
      for (std::size_t p; (p = cmd.find(key)) != std::string::npos;) cmd.replace(p, key.size(), value);
    }
    const int pid = spawn_shell(cmd, -1, -1);
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      throw Error(ErrorCode::kProviderUnavailable, "provider command failed: " + cmd);
    }
  }
  std::ifstream in(responses, std::ios::binary);
  if (!in) throw Error(ErrorCode::kProviderUnavailable, "no responses at " + responses.string());
  ReplySink sink(base, texts.size());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    sink.accept(parse_reply(line));
  }
  if (!sink.complete()) {
    throw Error(ErrorCode::kProviderProtocolError, std::to_string(sink.missing()) + " requests left unanswered");
  }
  return sink.take();
}

std::vector<std::string> FunctionProvider::predict(std::span<const std::string> texts) {
  ++calls_;
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(fn_(t));
  return out;
}

std::string LexicalRules::classify(const std::string& text) const {
  std::istringstream ss(text);
  std::string token;
  bool first = true;
  const std::string* hit = nullptr;
  while (ss >> token) {
    if (first) {
      if (auto it = first_token.find(token); it != first_token.end()) return it->second;
      first = false;
    }
    if (hit == nullptr) {
      if (auto it = any_token.find(token); it != any_token.end()) hit = &it->second;
    }
  }
  return hit != nullptr ? *hit : fallback;
}

}  // namespace conceptlens
