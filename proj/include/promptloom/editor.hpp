#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "promptloom/cluster_index.hpp"
#include "promptloom/corpus.hpp"

namespace promptloom {

enum class Strategy { Closest, Farthest, Random };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(std::string_view name);

struct Exemplar {
  std::string id;
  std::string text;
  double distance = 0.0;
};

// The in-context demonstration set C, drawn from a retrieved candidate pool.
// closest keeps the k smallest-distance candidates in order, farthest the k
// largest in decreasing distance, random a seeded sample without replacement.
struct ExemplarSet {
  std::vector<Exemplar> exemplars;
  Strategy strategy = Strategy::Closest;
  std::size_t pool_size = 0;
};

ExemplarSet select_exemplars(const RetrievalResult& candidates, const Corpus& corpus,
                             Strategy strategy, std::size_t k, std::uint64_t seed);

// The assembled editing prompt: instruction, then the demonstrations, then
// the user prompt, rendered bit-exactly as
//   <instruction>\n
//   Example: <exemplar text>\n   (one line per exemplar)
//   Input: <user text>\n
//   Output:
struct InContextPrompt {
  std::string instruction;
  ExemplarSet exemplars;
  Prompt user_prompt;
  std::string rendered;
};

InContextPrompt assemble_prompt(const std::string& instruction,
                                const ExemplarSet& exemplars, const Prompt& user);

struct LlmClientConfig {
  std::string endpoint;  // full URL, e.g. http://host:8080/v1/completions
  std::string model;
  std::string api_key;  // sent as a bearer Authorization header when set
  int timeout_ms = 30000;
  int max_retries = 3;
  int backoff_ms = 200;  // doubled per retry
  int max_tokens = 256;
};

struct TransportResult {
  bool ok = false;       // transport-level success (a response was received)
  int status = 0;        // HTTP status when ok
  std::string body;
  std::string error;     // transport-level error description when !ok
};

// Injectable HTTP boundary so the pipeline tests hermetically.
class LlmTransport {
 public:
  virtual ~LlmTransport() = default;
  virtual TransportResult post(const LlmClientConfig& config, const std::string& body) = 0;
};

// cpp-httplib backed transport speaking the documented completion protocol.
class HttpTransport : public LlmTransport {
 public:
  TransportResult post(const LlmClientConfig& config, const std::string& body) override;
};

struct EditedPrompt {
  std::string original_id;
  std::string edited_text;
  std::string model_name;
  std::int64_t latency_ms = 0;
  int retries = 0;
};

// POSTs {"model":..,"prompt":<rendered>,"max_tokens":..} and returns the
// first completion text, trimmed. Transient failures (transport errors,
// HTTP 429/5xx) are retried with exponential backoff up to max_retries.
EditedPrompt edit_prompt(const InContextPrompt& icp, const LlmClientConfig& config,
                         LlmTransport& transport);

}  // namespace promptloom
