#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace promptloom {

// Pipeline-wide configuration. Defaults are the documented operating point;
// every stage derives its randomness from the single top-level seed.
struct PipelineConfig {
  std::uint64_t seed = 42;

  struct Dedup {
    std::size_t num_hashes = 128;
    std::size_t bands = 16;
    std::size_t rows = 8;
    double threshold = 0.8;
    std::size_t ngram_n = 3;
    bool exact_confirm = false;

    bool operator==(const Dedup&) const = default;
  } dedup;

  struct Features {
    std::vector<int> n_orders = {1, 2};
    std::size_t feature_dim = 65536;
    double alpha = 0.5;
    std::size_t bootstrap_count = 16;

    bool operator==(const Features&) const = default;
  } features;

  struct Embedding {
    std::size_t dim = 384;

    bool operator==(const Embedding&) const = default;
  } embedding;

  struct Index {
    std::size_t k_clusters = 0;  // 0 = auto: ceil(sqrt(N))
    std::size_t max_iters = 25;
    std::size_t nprobe = 4;
    std::size_t n_init = 10;

    bool operator==(const Index&) const = default;
  } index;

  struct Editor {
    std::size_t pool_size = 100;  // retrieved candidate pool M
    std::size_t k_exemplars = 1;
    std::string strategy = "closest";
    std::string instruction =
        "Rewrite the input as an audio-generation prompt in the style of the examples.";

    bool operator==(const Editor&) const = default;
  } editor;

  struct Llm {
    std::string endpoint;
    std::string model;
    std::string api_key;
    int timeout_ms = 30000;
    int max_retries = 3;
    int backoff_ms = 200;
    int max_tokens = 256;

    bool operator==(const Llm&) const = default;
  } llm;

  bool operator==(const PipelineConfig&) const = default;
};

// Config file grammar (a TOML subset, documented in the README):
//   - `key = value` pairs, one per line
//   - `[section]` headers scope the keys that follow
//   - values: integers, floats, booleans (true/false), "quoted strings"
//     (with \" \\ \n \t escapes), and [v1, v2, ...] integer arrays
//   - `#` starts a comment; blank lines are ignored
// serialize_config emits every key in a fixed order, so parse∘serialize is
// the identity and saved files round-trip byte-identically.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const PipelineConfig& config);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

// Dotted-key access used by the C API and CLI overrides, e.g.
// set_config_key(cfg, "dedup.threshold", "0.9"). Values use the same
// lexical forms as the config file (strings may be unquoted).
void set_config_key(PipelineConfig& config, const std::string& key,
                    const std::string& value);
std::string get_config_key(const PipelineConfig& config, const std::string& key);
std::vector<std::string> config_keys();

}  // namespace promptloom
