// Deterministic keyword classifier speaking the prediction line protocol.
// Used by tests and for dry runs of the trigger stage.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <poll.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "conceptlens/provider.hpp"

namespace {

using json = nlohmann::json;

struct Settings {
  conceptlens::LexicalRules rules;
  bool reverse = false;
  long fail_after = -1;
  std::string error_on;
};

/// One reply line for one request line.
std::string answer(const std::string& line, const Settings& s) {
  json req;
  try {
    req = json::parse(line);
  } catch (const json::exception&) {
    return json{{"id", nullptr}, {"error", "malformed request"}}.dump();
  }
  if (!req.is_object() || !req.contains("id") || !req["id"].is_number_unsigned() || !req.contains("text") ||
      !req["text"].is_string()) {
    return json{{"id", nullptr}, {"error", "malformed request"}}.dump();
  }
  const auto text = req["text"].get<std::string>();
  if (!s.error_on.empty() && text.find(s.error_on) != std::string::npos) {
    return json{{"id", nullptr}, {"error", "refused"}}.dump();
  }
  return conceptlens::encode_response(req["id"].get<std::uint64_t>(), s.rules.classify(text));
}

bool input_pending() {
  pollfd fd{STDIN_FILENO, POLLIN, 0};
  return ::poll(&fd, 1, 0) > 0;
}

int serve_stdio(const Settings& s) {
  std::string buffer;
  std::vector<std::string> replies;
  long seen = 0;
  char chunk[65536];
  while (true) {
    const ssize_t r = ::read(STDIN_FILENO, chunk, sizeof(chunk));
    if (r <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(r));
    std::size_t start = 0;
    for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos; start = nl + 1) {
      const std::string line = buffer.substr(start, nl - start);
      if (line.empty()) continue;
      if (s.fail_after >= 0 && seen >= s.fail_after) return 1;
      ++seen;
      replies.push_back(answer(line, s));
    }
    buffer.erase(0, start);
    // Reply once the current burst of requests is drained, so --reverse
    // answers a whole batch out of order.
    if (!input_pending()) {
      if (s.reverse) std::reverse(replies.begin(), replies.end());
      for (const auto& reply : replies) std::cout << reply << '\n';
      std::cout.flush();
      replies.clear();
    }
  }
  for (const auto& reply : replies) std::cout << reply << '\n';
  std::cout.flush();
  return 0;
}

int serve_files(const Settings& s, const std::string& requests, const std::string& responses) {
  std::ifstream in(requests);
  if (!in) {
    std::cerr << "mock_provider: cannot read " << requests << '\n';
    return 1;
  }
  std::vector<std::string> replies;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) replies.push_back(answer(line, s));
  }
  if (s.reverse) std::reverse(replies.begin(), replies.end());
  std::ofstream out(responses, std::ios::trunc);
  for (const auto& reply : replies) out << reply << '\n';
  return out ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyword-rule prediction provider"};
  Settings s;
  std::vector<std::string> first;
  std::vector<std::string> any;
  std::string requests;
  std::string responses;
  app.add_option("--first", first, "WORD=LABEL when WORD is the first token");
  app.add_option("--any", any, "WORD=LABEL when WORD occurs anywhere");
  app.add_option("--default", s.rules.fallback, "Label when no rule fires")->required();
  app.add_flag("--reverse", s.reverse, "Answer each batch in reverse order");
  app.add_option("--fail-after", s.fail_after, "Exit after this many requests");
  app.add_option("--error-on", s.error_on, "Reply with an error line for texts containing this string");
  app.add_option("--requests", requests, "File-exchange mode: requests file");
  app.add_option("--responses", responses, "File-exchange mode: responses file");
  CLI11_PARSE(app, argc, argv);

  for (auto* list : {&first, &any}) {
    for (const auto& rule : *list) {
      const auto eq = rule.find('=');
      if (eq == std::string::npos || eq == 0) {
        std::cerr << "mock_provider: rule '" << rule << "' is not WORD=LABEL\n";
        return 1;
      }
      auto& target = list == &first ? s.rules.first_token : s.rules.any_token;
      target[rule.substr(0, eq)] = rule.substr(eq + 1);
    }
  }
  if (!requests.empty() || !responses.empty()) return serve_files(s, requests, responses);
  return serve_stdio(s);
}
