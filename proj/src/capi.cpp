#include "promptloom/promptloom.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "promptloom/cluster_index.hpp"
#include "promptloom/config.hpp"
#include "promptloom/corpus.hpp"
#include "promptloom/dedup.hpp"
#include "promptloom/embed.hpp"
#include "promptloom/error.hpp"
#include "promptloom/hashing.hpp"
#include "promptloom/pipeline.hpp"
#include "promptloom/report.hpp"

struct promptloom_config {
  promptloom::PipelineConfig value;
};
struct promptloom_corpus {
  promptloom::Corpus value;
};
struct promptloom_embeddings {
  promptloom::EmbeddingTable value;
};
struct promptloom_index {
  promptloom::ClusterIndex value;
};

namespace {

thread_local std::string g_last_error;

promptloom_status status_from(promptloom::ErrorKind kind) {
  using promptloom::ErrorKind;
  switch (kind) {
    case ErrorKind::Io: return PROMPTLOOM_ERR_IO;
    case ErrorKind::Parse: return PROMPTLOOM_ERR_PARSE;
    case ErrorKind::Invalid: return PROMPTLOOM_ERR_INVALID;
    case ErrorKind::Network: return PROMPTLOOM_ERR_NETWORK;
    case ErrorKind::Internal: return PROMPTLOOM_ERR_INTERNAL;
  }
  return PROMPTLOOM_ERR_INTERNAL;
}

template <typename Fn>
promptloom_status guarded(Fn&& fn) {
  try {
    fn();
    return PROMPTLOOM_OK;
  } catch (const promptloom::Error& e) {
    g_last_error = e.what();
    return status_from(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PROMPTLOOM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return PROMPTLOOM_ERR_INTERNAL;
  }
}

promptloom_status require(bool ok, const char* message) {
  if (!ok) {
    g_last_error = message;
    return PROMPTLOOM_ERR_INVALID;
  }
  return PROMPTLOOM_OK;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const std::size_t b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const std::size_t e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

extern "C" {

const char* promptloom_version(void) { return "0.1.0"; }

const char* promptloom_status_name(promptloom_status status) {
  switch (status) {
    case PROMPTLOOM_OK: return "ok";
    case PROMPTLOOM_ERR_IO: return "io";
    case PROMPTLOOM_ERR_PARSE: return "parse";
    case PROMPTLOOM_ERR_INVALID: return "invalid";
    case PROMPTLOOM_ERR_NETWORK: return "network";
    case PROMPTLOOM_ERR_INTERNAL: return "internal";
  }
  return "internal";
}

const char* promptloom_last_error(void) { return g_last_error.c_str(); }

void promptloom_string_free(char* s) { std::free(s); }

/* ---- configuration ----------------------------------------------------- */

promptloom_config* promptloom_config_new(void) { return new promptloom_config{}; }

promptloom_status promptloom_config_load(const char* path, promptloom_config** out) {
  if (auto s = require(path && out, "config_load: path and out must be non-NULL")) return s;
  return guarded([&] { *out = new promptloom_config{promptloom::load_config(path)}; });
}

promptloom_status promptloom_config_save(const promptloom_config* config,
                                         const char* path) {
  if (auto s = require(config && path, "config_save: config and path must be non-NULL"))
    return s;
  return guarded([&] { promptloom::save_config(config->value, path); });
}

promptloom_status promptloom_config_set(promptloom_config* config, const char* key,
                                        const char* value) {
  if (auto s = require(config && key && value, "config_set: NULL argument")) return s;
  return guarded([&] { promptloom::set_config_key(config->value, key, value); });
}

promptloom_status promptloom_config_get(const promptloom_config* config, const char* key,
                                        char** out) {
  if (auto s = require(config && key && out, "config_get: NULL argument")) return s;
  return guarded([&] { *out = dup_string(promptloom::get_config_key(config->value, key)); });
}

void promptloom_config_free(promptloom_config* config) { delete config; }

/* ---- corpus ------------------------------------------------------------ */

promptloom_status promptloom_corpus_ingest(const char* train_jsonl_path,
                                           const char* user_jsonl_path,
                                           promptloom_corpus** out) {
  if (auto s = require(out && (train_jsonl_path || user_jsonl_path),
                       "corpus_ingest: need out and at least one input path"))
    return s;
  return guarded([&] {
    promptloom::Corpus corpus;
    if (train_jsonl_path) {
      corpus = promptloom::ingest(train_jsonl_path, promptloom::Source::Train);
    }
    if (user_jsonl_path) {
      corpus.extend(promptloom::ingest(user_jsonl_path, promptloom::Source::User));
    }
    *out = new promptloom_corpus{std::move(corpus)};
  });
}

promptloom_status promptloom_corpus_load(const char* path, promptloom_corpus** out) {
  if (auto s = require(path && out, "corpus_load: NULL argument")) return s;
  return guarded([&] { *out = new promptloom_corpus{promptloom::load_corpus(path)}; });
}

promptloom_status promptloom_corpus_save(const promptloom_corpus* corpus,
                                         const char* path) {
  if (auto s = require(corpus && path, "corpus_save: NULL argument")) return s;
  return guarded([&] { promptloom::save_corpus(corpus->value, path); });
}

size_t promptloom_corpus_size(const promptloom_corpus* corpus) {
  return corpus ? corpus->value.size() : 0;
}

size_t promptloom_corpus_train_count(const promptloom_corpus* corpus) {
  return corpus ? corpus->value.train_count() : 0;
}

size_t promptloom_corpus_user_count(const promptloom_corpus* corpus) {
  return corpus ? corpus->value.user_count() : 0;
}

void promptloom_corpus_free(promptloom_corpus* corpus) { delete corpus; }

/* ---- de-duplication ---------------------------------------------------- */

promptloom_status promptloom_dedup(const promptloom_corpus* corpus,
                                   const promptloom_config* config,
                                   promptloom_corpus** kept_out,
                                   char** report_json_out) {
  if (auto s = require(corpus && config && kept_out, "dedup: NULL argument")) return s;
  return guarded([&] {
    promptloom::DedupParams params;
    params.num_hashes = config->value.dedup.num_hashes;
    params.bands = config->value.dedup.bands;
    params.rows = config->value.dedup.rows;
    params.threshold = config->value.dedup.threshold;
    params.ngram_n = config->value.dedup.ngram_n;
    params.exact_confirm = config->value.dedup.exact_confirm;
    params.seed = promptloom::stage_seed(config->value.seed, "dedup");
    promptloom::DedupReport report = promptloom::deduplicate(corpus->value, params);
    if (report_json_out) *report_json_out = dup_string(promptloom::dedup_report_to_json(report));
    *kept_out = new promptloom_corpus{std::move(report.kept)};
  });
}

/* ---- embeddings --------------------------------------------------------- */

promptloom_status promptloom_embeddings_load(const char* path, size_t expected_dim,
                                             promptloom_embeddings** out) {
  if (auto s = require(path && out, "embeddings_load: NULL argument")) return s;
  return guarded([&] {
    *out = new promptloom_embeddings{promptloom::load_embeddings(path, expected_dim)};
  });
}

promptloom_status promptloom_embeddings_save(const promptloom_embeddings* table,
                                             const char* path) {
  if (auto s = require(table && path, "embeddings_save: NULL argument")) return s;
  return guarded([&] { promptloom::save_embeddings(table->value, path); });
}

promptloom_status promptloom_embeddings_hash_for_corpus(const promptloom_corpus* corpus,
                                                        const promptloom_config* config,
                                                        promptloom_embeddings** out) {
  if (auto s = require(corpus && config && out, "embeddings_hash_for_corpus: NULL argument"))
    return s;
  return guarded([&] {
    *out = new promptloom_embeddings{promptloom::hash_embed_corpus(
        corpus->value, config->value.embedding.dim,
        promptloom::stage_seed(config->value.seed, "embed"))};
  });
}

size_t promptloom_embeddings_dim(const promptloom_embeddings* table) {
  return table ? table->value.dim() : 0;
}

size_t promptloom_embeddings_size(const promptloom_embeddings* table) {
  return table ? table->value.size() : 0;
}

void promptloom_embeddings_free(promptloom_embeddings* table) { delete table; }

/* ---- cluster index ------------------------------------------------------ */

promptloom_status promptloom_index_fit(const promptloom_embeddings* table,
                                       const promptloom_corpus* corpus,
                                       const promptloom_config* config,
                                       promptloom_index** out) {
  if (auto s = require(table && corpus && config && out, "index_fit: NULL argument"))
    return s;
  return guarded([&] {
    std::vector<std::string> train_ids;
    for (const promptloom::Prompt& p : corpus->value.prompts()) {
      if (p.source == promptloom::Source::Train) train_ids.push_back(p.id);
    }
    if (train_ids.empty()) {
      promptloom::raise(promptloom::ErrorKind::Invalid,
                        "index_fit: corpus has no train prompts");
    }
    std::size_t k = config->value.index.k_clusters;
    if (k == 0) {
      k = static_cast<std::size_t>(
          std::ceil(std::sqrt(static_cast<double>(train_ids.size()))));
    }
    *out = new promptloom_index{promptloom::kmeans_fit(
        table->value, train_ids, k, config->value.index.max_iters,
        promptloom::stage_seed(config->value.seed, "index"),
        config->value.index.n_init)};
  });
}

promptloom_status promptloom_index_save(const promptloom_index* index, const char* path) {
  if (auto s = require(index && path, "index_save: NULL argument")) return s;
  return guarded([&] { promptloom::save_index(index->value, path); });
}

promptloom_status promptloom_index_load(const char* path, promptloom_index** out) {
  if (auto s = require(path && out, "index_load: NULL argument")) return s;
  return guarded([&] { *out = new promptloom_index{promptloom::load_index(path)}; });
}

size_t promptloom_index_k(const promptloom_index* index) {
  return index ? index->value.k() : 0;
}

void promptloom_index_free(promptloom_index* index) { delete index; }

/* ---- pipeline ----------------------------------------------------------- */

promptloom_status promptloom_edit(const promptloom_corpus* corpus,
                                  const promptloom_embeddings* table,
                                  const promptloom_index* index,
                                  const promptloom_config* config, const char* user_text,
                                  int dry_run, char** result_json_out,
                                  char** timings_json_out) {
  if (auto s = require(corpus && table && index && config && user_text && result_json_out,
                       "edit: NULL argument"))
    return s;
  return guarded([&] {
    promptloom::EditOutcome outcome =
        promptloom::run_pipeline(corpus->value, table->value, index->value, config->value,
                                 user_text, dry_run != 0);
    *result_json_out = dup_string(promptloom::outcome_to_json(outcome));
    if (timings_json_out) {
      *timings_json_out = dup_string(promptloom::timings_to_json(outcome.diagnostics));
    }
  });
}

promptloom_status promptloom_report(const promptloom_corpus* corpus,
                                    const promptloom_embeddings* table,
                                    const promptloom_index* index,
                                    const promptloom_config* config,
                                    const char* strategies_csv,
                                    const char* external_scores_path,
                                    const char* out_csv_path, char** warnings_out) {
  if (auto s = require(corpus && table && index && config && strategies_csv && out_csv_path,
                       "report: NULL argument"))
    return s;
  return guarded([&] {
    const std::vector<std::string> strategies = split_csv_list(strategies_csv);
    std::vector<std::string> warnings;

    std::map<std::string, promptloom::ExternalScores> scores;
    const std::map<std::string, promptloom::ExternalScores>* scores_ptr = nullptr;
    if (external_scores_path) {
      std::ifstream in(external_scores_path, std::ios::binary);
      if (!in) {
        promptloom::raise(promptloom::ErrorKind::Io,
                          std::string("cannot open external scores CSV: ") +
                              external_scores_path);
      }
      std::ostringstream buf;
      buf << in.rdbuf();
      scores = promptloom::parse_external_scores(buf.str(), strategies, &warnings);
      scores_ptr = &scores;
    }

    const std::vector<promptloom::StrategyRow> rows = promptloom::run_report(
        corpus->value, table->value, index->value, strategies, config->value, scores_ptr,
        &warnings);

    std::ofstream out(out_csv_path, std::ios::binary);
    if (!out) {
      promptloom::raise(promptloom::ErrorKind::Io,
                        std::string("cannot write report CSV: ") + out_csv_path);
    }
    out << promptloom::report_to_csv(rows);
    if (!out) {
      promptloom::raise(promptloom::ErrorKind::Io,
                        std::string("failed writing report CSV: ") + out_csv_path);
    }

    if (warnings_out) {
      std::string joined;
      for (const std::string& w : warnings) {
        if (!joined.empty()) joined += '\n';
        joined += w;
      }
      *warnings_out = dup_string(joined);
    }
  });
}

promptloom_status promptloom_bench(const char* sizes_csv, size_t top_m, size_t trials,
                                   const promptloom_config* config,
                                   const char* out_csv_path, char** summary_json_out) {
  if (auto s = require(sizes_csv && config && out_csv_path, "bench: NULL argument"))
    return s;
  return guarded([&] {
    std::vector<std::size_t> sizes;
    for (const std::string& item : split_csv_list(sizes_csv)) {
      std::size_t value = 0;
      try {
        value = std::stoull(item);
      } catch (const std::exception&) {
        promptloom::raise(promptloom::ErrorKind::Invalid,
                          "bench: malformed size '" + item + "'");
      }
      sizes.push_back(value);
    }

    const promptloom::BenchResult result = promptloom::run_bench(
        sizes, top_m, trials, promptloom::stage_seed(config->value.seed, "bench"),
        config->value);

    std::ofstream out(out_csv_path, std::ios::binary);
    if (!out) {
      promptloom::raise(promptloom::ErrorKind::Io,
                        std::string("cannot write bench CSV: ") + out_csv_path);
    }
    out << promptloom::bench_to_csv(result);

    if (summary_json_out) {
      nlohmann::json summary;
      summary["slope_ms_per_entry"] = result.slope_ms_per_entry;
      summary["intercept_ms"] = result.intercept_ms;
      summary["r_squared"] = result.r_squared;
      auto& rows = summary["rows"] = nlohmann::json::array();
      for (const promptloom::BenchRow& row : result.rows) {
        rows.push_back({row.pool_size, row.mean_latency_ms});
      }
      *summary_json_out = dup_string(summary.dump());
    }
  });
}

} /* extern "C" */
