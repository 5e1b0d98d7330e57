#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptloom/cluster_index.hpp"
#include "promptloom/config.hpp"
#include "promptloom/corpus.hpp"
#include "promptloom/embed.hpp"

namespace promptloom {

// Externally supplied audio-quality scores joined by strategy name; this
// tool never computes them.
struct ExternalScores {
  std::optional<double> clap, kl, fad, sub, obj;
};

struct StrategyRow {
  std::string strategy_name;
  double delta_r_div = 0.0;
  std::size_t token_count = 0;
  double ttr_percent = 0.0;
  std::optional<ExternalScores> external;
};

// For every user prompt: retrieve the candidate pool, select exemplars per
// strategy, featurize the selected texts into the revised distribution and
// evaluate the prompt divergence against the bootstrap train set. Rows carry
// the mean divergence plus lexical statistics of the selected exemplar
// texts. The pseudo-strategy "identity" evaluates revised = user (always 0).
std::vector<StrategyRow> run_report(
    const Corpus& corpus, const EmbeddingTable& table, const ClusterIndex& index,
    const std::vector<std::string>& strategies, const PipelineConfig& config,
    const std::map<std::string, ExternalScores>* external_scores = nullptr,
    std::vector<std::string>* warnings = nullptr);

// CSV emission, header `strategy,delta_r_div,tokens,ttr,clap,kl,fad,sub,obj`;
// absent scores leave their cells empty. Byte-deterministic.
std::string report_to_csv(const std::vector<StrategyRow>& rows);

// Parses the external score CSV (`strategy,clap,kl,fad,sub,obj`). Rows for
// strategies not in `known` are skipped with a warning.
std::map<std::string, ExternalScores> parse_external_scores(
    const std::string& csv_text, const std::vector<std::string>& known,
    std::vector<std::string>* warnings);

struct BenchRow {
  std::size_t pool_size = 0;
  double mean_latency_ms = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  double slope_ms_per_entry = 0.0;
  double intercept_ms = 0.0;
  double r_squared = 0.0;
};

// Synthetic fixtures used by the benchmark; exposed so tests can replay the
// exact queries deterministically.
EmbeddingTable synthetic_table(std::size_t count, std::size_t dim, std::uint64_t seed);
EmbeddingVector bench_query(std::size_t dim, std::uint64_t seed, std::size_t table_size,
                            std::size_t trial);

// For each table size: build a synthetic table, fit an index and time
// retrieve_topM over `trials` seeded queries. Also fits latency = a*size + b
// by least squares and reports R².
BenchResult run_bench(const std::vector<std::size_t>& table_sizes, std::size_t M,
                      std::size_t trials, std::uint64_t seed,
                      const PipelineConfig& config);

// CSV rows `size,mean_latency_ms` followed by `# slope_ms_per_entry=...` and
// `# r_squared=...` comment lines.
std::string bench_to_csv(const BenchResult& result);

}  // namespace promptloom
