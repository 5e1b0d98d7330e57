#include "promptloom/editor.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <numeric>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "promptloom/error.hpp"
#include "promptloom/hashing.hpp"

namespace promptloom {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Closest: return "closest";
    case Strategy::Farthest: return "farthest";
    case Strategy::Random: return "random";
  }
  return "closest";
}

Strategy strategy_from_name(std::string_view name) {
  if (name == "closest") return Strategy::Closest;
  if (name == "farthest") return Strategy::Farthest;
  if (name == "random") return Strategy::Random;
  raise(ErrorKind::Invalid,
        "unknown strategy '" + std::string(name) + "' (expected closest|farthest|random)");
}

ExemplarSet select_exemplars(const RetrievalResult& candidates, const Corpus& corpus,
                             Strategy strategy, std::size_t k, std::uint64_t seed) {
  const std::size_t n = candidates.size();
  if (n == 0) raise(ErrorKind::Invalid, "select_exemplars: empty candidate pool");
  if (k == 0 || k > n) {
    raise(ErrorKind::Invalid, "select_exemplars: k (" + std::to_string(k) +
                                  ") must be in [1, " + std::to_string(n) + "]");
  }

  std::vector<std::size_t> picks;
  picks.reserve(k);
  switch (strategy) {
    case Strategy::Closest:
      for (std::size_t i = 0; i < k; ++i) picks.push_back(i);
      break;
    case Strategy::Farthest:
      for (std::size_t i = 0; i < k; ++i) picks.push_back(n - 1 - i);
      break;
    case Strategy::Random: {
      // Partial Fisher-Yates over the candidate indices.
      std::vector<std::size_t> pool(n);
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      Rng rng(seed);
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.below(n - i);
        std::swap(pool[i], pool[j]);
        picks.push_back(pool[i]);
      }
      break;
    }
  }

  ExemplarSet set;
  set.strategy = strategy;
  set.pool_size = n;
  for (std::size_t idx : picks) {
    const Neighbor& neighbor = candidates.neighbors[idx];
    const Prompt* prompt = corpus.find(neighbor.id);
    if (!prompt) {
      raise(ErrorKind::Invalid, "candidate id '" + neighbor.id + "' is not in the corpus");
    }
    set.exemplars.push_back({neighbor.id, prompt->text, neighbor.distance});
  }
  return set;
}

InContextPrompt assemble_prompt(const std::string& instruction,
                                const ExemplarSet& exemplars, const Prompt& user) {
  if (instruction.empty()) raise(ErrorKind::Invalid, "instruction must be non-empty");
  std::string rendered = instruction;
  for (const Exemplar& e : exemplars.exemplars) {
    rendered += "\nExample: ";
    rendered += e.text;
  }
  rendered += "\nInput: ";
  rendered += user.text;
  rendered += "\nOutput:";
  return {instruction, exemplars, user, std::move(rendered)};
}

TransportResult HttpTransport::post(const LlmClientConfig& config,
                                    const std::string& body) {
  // Split the endpoint URL into scheme://host[:port] and path.
  const std::string& url = config.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    return {false, 0, "", "endpoint is not a URL: " + url};
  }
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(0, config.timeout_ms * 1000LL);
  client.set_read_timeout(0, config.timeout_ms * 1000LL);
  client.set_write_timeout(0, config.timeout_ms * 1000LL);
  httplib::Headers headers;
  if (!config.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config.api_key);
  }
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) {
    return {false, 0, "", "transport error: " + httplib::to_string(res.error())};
  }
  return {true, res->status, res->body, ""};
}

namespace {

std::string trim_copy(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool retryable(const TransportResult& r) {
  if (!r.ok) return true;
  return r.status == 429 || (r.status >= 500 && r.status < 600);
}

}  // namespace

EditedPrompt edit_prompt(const InContextPrompt& icp, const LlmClientConfig& config,
                         LlmTransport& transport) {
  if (config.endpoint.empty()) raise(ErrorKind::Invalid, "llm endpoint is not configured");
  if (config.max_retries < 0) raise(ErrorKind::Invalid, "max_retries must be >= 0");

  nlohmann::json request;
  request["model"] = config.model;
  request["prompt"] = icp.rendered;
  request["max_tokens"] = config.max_tokens;
  const std::string body = request.dump();

  const auto started = std::chrono::steady_clock::now();
  TransportResult last;
  int attempts = 0;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0 && config.backoff_ms > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<std::int64_t>(config.backoff_ms)
                                    << (attempt - 1)));
    }
    last = transport.post(config, body);
    ++attempts;
    if (!retryable(last)) break;
  }
  const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();

  if (!last.ok) {
    raise(ErrorKind::Network, "llm request failed after " + std::to_string(attempts) +
                                  " attempts: " + last.error);
  }
  if (last.status < 200 || last.status >= 300) {
    raise(ErrorKind::Network, "llm request failed with status " +
                                  std::to_string(last.status) + " after " +
                                  std::to_string(attempts) + " attempts");
  }

  nlohmann::json response = nlohmann::json::parse(last.body, nullptr, false);
  if (response.is_discarded() || !response.contains("choices") ||
      !response["choices"].is_array() || response["choices"].empty() ||
      !response["choices"][0].contains("text")) {
    raise(ErrorKind::Parse, "llm response is not a completion object");
  }
  const std::string text = trim_copy(response["choices"][0]["text"].get<std::string>());
  if (text.empty()) raise(ErrorKind::Parse, "llm returned an empty completion");

  EditedPrompt edited;
  edited.original_id = icp.user_prompt.id;
  edited.edited_text = text;
  edited.model_name = config.model;
  edited.latency_ms = latency;
  edited.retries = attempts - 1;
  return edited;
}

}  // namespace promptloom
