#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace conceptlens {

/// Answers text -> label queries. Implementations return one label per input,
/// in input order.
class PredictionProvider {
 public:
  virtual ~PredictionProvider() = default;
  virtual std::vector<std::string> predict(std::span<const std::string> texts) = 0;
};

struct SubprocessOptions {
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 4;  ///< batches sent but not fully answered
  std::chrono::milliseconds timeout{120000};  ///< silence limit while waiting for replies
};

/// Runs `command` under /bin/sh and speaks the line protocol over its
/// stdin/stdout: requests `{"id": int, "text": string}`, replies
/// `{"id": int, "label": string}` in any order. An error reply
/// (`{"id": null, "error": ...}`), an unknown or repeated id, or an
/// unparsable line raises ProviderProtocolError. A provider that cannot be
/// started, exits, or stays silent past the timeout raises ProviderUnavailable.
///
/// SIGPIPE is ignored process-wide once a subprocess provider is created.
class SubprocessProvider final : public PredictionProvider {
 public:
  explicit SubprocessProvider(std::string command, SubprocessOptions options = {});
  ~SubprocessProvider() override;
  SubprocessProvider(const SubprocessProvider&) = delete;
  SubprocessProvider& operator=(const SubprocessProvider&) = delete;

  std::vector<std::string> predict(std::span<const std::string> texts) override;

  [[nodiscard]] std::uint64_t requests_sent() const noexcept { return next_id_; }

 private:
  void shutdown() noexcept;
  void fail_unavailable(const std::string& why);

  std::string command_;
  SubprocessOptions options_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::uint64_t next_id_ = 0;
  std::string read_buffer_;
  bool broken_ = false;
};

/// File-exchange transport: writes `requests.jsonl` into `dir`, runs
/// `command` (if non-empty) with `{requests}` and `{responses}` replaced by
/// the file paths, then reads `responses.jsonl`. With an empty command the
/// responses file must already exist, which suits offline batch scoring.
class FileExchangeProvider final : public PredictionProvider {
 public:
  FileExchangeProvider(std::filesystem::path dir, std::string command = {});

  std::vector<std::string> predict(std::span<const std::string> texts) override;

 private:
  std::filesystem::path dir_;
  std::string command_;
  std::uint64_t next_id_ = 0;
};

/// Wraps a function; handy for tests and in-process models.
class FunctionProvider final : public PredictionProvider {
 public:
  explicit FunctionProvider(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}

  std::vector<std::string> predict(std::span<const std::string> texts) override;

  [[nodiscard]] std::size_t calls() const noexcept { return calls_; }

 private:
  std::function<std::string(const std::string&)> fn_;
  std::size_t calls_ = 0;
};

/// Deterministic keyword classifier.
///  1. if the first whitespace token is a key of `first_token`, that label;
///  2. else the label of the first token (left to right) found in `any_token`;
///  3. else `fallback`.
struct LexicalRules {
  std::map<std::string, std::string> first_token;
  std::map<std::string, std::string> any_token;
  std::string fallback;

  [[nodiscard]] std::string classify(const std::string& text) const;
};

/// Encodes one request/response line of the wire protocol.
std::string encode_request(std::uint64_t id, const std::string& text);
std::string encode_response(std::uint64_t id, const std::string& label);

}  // namespace conceptlens
