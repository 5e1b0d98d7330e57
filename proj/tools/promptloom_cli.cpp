// promptloom command-line driver. Talks to the library exclusively through
// the C API so it doubles as a reference client for language bindings.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "promptloom/promptloom.h"

namespace fs = std::filesystem;

namespace {

struct ConfigDeleter {
  void operator()(promptloom_config* c) const { promptloom_config_free(c); }
};
struct CorpusDeleter {
  void operator()(promptloom_corpus* c) const { promptloom_corpus_free(c); }
};
struct EmbeddingsDeleter {
  void operator()(promptloom_embeddings* e) const { promptloom_embeddings_free(e); }
};
struct IndexDeleter {
  void operator()(promptloom_index* i) const { promptloom_index_free(i); }
};

using ConfigPtr = std::unique_ptr<promptloom_config, ConfigDeleter>;
using CorpusPtr = std::unique_ptr<promptloom_corpus, CorpusDeleter>;
using EmbeddingsPtr = std::unique_ptr<promptloom_embeddings, EmbeddingsDeleter>;
using IndexPtr = std::unique_ptr<promptloom_index, IndexDeleter>;

// One-line machine-parsable failure channel; every error exits through here.
[[noreturn]] void die(promptloom_status status, const std::string& detail = {}) {
  const std::string message = detail.empty() ? promptloom_last_error() : detail;
  std::fprintf(stderr, "promptloom: error:%s: %s\n", promptloom_status_name(status),
               message.c_str());
  std::exit(1);
}

void check(promptloom_status status) {
  if (status != PROMPTLOOM_OK) die(status);
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  promptloom_string_free(s);
  return out;
}

struct Override {
  std::string key;
  std::string value;
};

// Effective config: defaults ← <in>/config.toml ← --config file, then flag
// overrides, then PROMPTLOOM_LLM_* environment variables.
ConfigPtr resolve_config(const std::string& explicit_config, const std::string& in_dir,
                         const std::vector<Override>& overrides) {
  ConfigPtr cfg;
  std::string file;
  if (!explicit_config.empty()) {
    file = explicit_config;
  } else if (!in_dir.empty() && fs::exists(fs::path(in_dir) / "config.toml")) {
    file = (fs::path(in_dir) / "config.toml").string();
  }
  if (!file.empty()) {
    promptloom_config* raw = nullptr;
    check(promptloom_config_load(file.c_str(), &raw));
    cfg.reset(raw);
  } else {
    cfg.reset(promptloom_config_new());
  }
  for (const Override& o : overrides) {
    check(promptloom_config_set(cfg.get(), o.key.c_str(), o.value.c_str()));
  }
  struct {
    const char* env;
    const char* key;
  } env_map[] = {{"PROMPTLOOM_LLM_ENDPOINT", "llm.endpoint"},
                 {"PROMPTLOOM_LLM_MODEL", "llm.model"},
                 {"PROMPTLOOM_LLM_API_KEY", "llm.api_key"}};
  for (const auto& m : env_map) {
    if (const char* v = std::getenv(m.env)) {
      check(promptloom_config_set(cfg.get(), m.key, v));
    }
  }
  return cfg;
}

std::size_t config_dim(const promptloom_config* cfg) {
  char* dim_str = nullptr;
  check(promptloom_config_get(cfg, "embedding.dim", &dim_str));
  return std::stoull(take_string(dim_str));
}

CorpusPtr load_corpus_from(const std::string& dir) {
  promptloom_corpus* raw = nullptr;
  check(promptloom_corpus_load((fs::path(dir) / "corpus.jsonl").string().c_str(), &raw));
  return CorpusPtr(raw);
}

EmbeddingsPtr load_embeddings_from(const std::string& dir, const promptloom_config* cfg) {
  const fs::path path = fs::path(dir) / "embeddings.emb";
  if (!fs::exists(path)) {
    die(PROMPTLOOM_ERR_IO, "no embeddings.emb in " + dir + " (run `promptloom index` first)");
  }
  promptloom_embeddings* raw = nullptr;
  check(promptloom_embeddings_load(path.string().c_str(), config_dim(cfg), &raw));
  return EmbeddingsPtr(raw);
}

IndexPtr load_index_from(const std::string& dir) {
  const fs::path path = fs::path(dir) / "index.json";
  if (!fs::exists(path)) {
    die(PROMPTLOOM_ERR_IO, "no index.json in " + dir + " (run `promptloom index` first)");
  }
  promptloom_index* raw = nullptr;
  check(promptloom_index_load(path.string().c_str(), &raw));
  return IndexPtr(raw);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) die(PROMPTLOOM_ERR_IO, "cannot create directory " + dir + ": " + ec.message());
}

void copy_bytes(const fs::path& from, const fs::path& to) {
  if (fs::exists(from) && (!fs::exists(to) || !fs::equivalent(from, to))) {
    fs::copy_file(from, to, fs::copy_options::overwrite_existing);
  }
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) die(PROMPTLOOM_ERR_IO, "cannot write " + path.string());
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"promptloom: retrieval-based in-context prompt editing pipeline"};
  app.require_subcommand(1);

  std::string config_file;
  app.add_option("--config", config_file, "Config file (TOML subset) applied to every stage")
      ->envname("PROMPTLOOM_CONFIG");

  // ---- ingest ----
  auto* ingest = app.add_subcommand("ingest", "Load raw JSONL prompt files into a run directory");
  std::string ingest_train, ingest_user, ingest_out, ingest_seed;
  ingest->add_option("--train", ingest_train, "Train-pool JSONL file");
  ingest->add_option("--user", ingest_user, "User-pool JSONL file");
  ingest->add_option("--out", ingest_out, "Output run directory")->required();
  ingest->add_option("--seed", ingest_seed, "Top-level pipeline seed");
  ingest->callback([&] {
    if (ingest_train.empty() && ingest_user.empty()) {
      die(PROMPTLOOM_ERR_INVALID, "ingest needs --train and/or --user");
    }
    std::vector<Override> overrides;
    if (!ingest_seed.empty()) overrides.push_back({"seed", ingest_seed});
    ConfigPtr cfg = resolve_config(config_file, "", overrides);
    promptloom_corpus* corpus = nullptr;
    check(promptloom_corpus_ingest(ingest_train.empty() ? nullptr : ingest_train.c_str(),
                                   ingest_user.empty() ? nullptr : ingest_user.c_str(),
                                   &corpus));
    CorpusPtr owned(corpus);
    ensure_dir(ingest_out);
    const fs::path dir(ingest_out);
    check(promptloom_corpus_save(corpus, (dir / "corpus.jsonl").string().c_str()));
    check(promptloom_config_save(cfg.get(), (dir / "config.toml").string().c_str()));
    std::printf("ingested %zu prompts (%zu train, %zu user) into %s\n",
                promptloom_corpus_size(corpus), promptloom_corpus_train_count(corpus),
                promptloom_corpus_user_count(corpus), ingest_out.c_str());
  });

  // ---- dedup ----
  auto* dedup = app.add_subcommand("dedup", "Remove near-duplicate train prompts");
  std::string dedup_in, dedup_out, dedup_threshold;
  dedup->add_option("--in", dedup_in, "Run directory from `ingest`")->required();
  dedup->add_option("--threshold", dedup_threshold, "Jaccard discard threshold (0,1)");
  dedup->add_option("--out", dedup_out, "Output run directory")->required();
  dedup->callback([&] {
    std::vector<Override> overrides;
    if (!dedup_threshold.empty()) overrides.push_back({"dedup.threshold", dedup_threshold});
    ConfigPtr cfg = resolve_config(config_file, dedup_in, overrides);
    CorpusPtr corpus = load_corpus_from(dedup_in);
    promptloom_corpus* kept = nullptr;
    char* report_json = nullptr;
    check(promptloom_dedup(corpus.get(), cfg.get(), &kept, &report_json));
    CorpusPtr owned(kept);
    ensure_dir(dedup_out);
    const fs::path dir(dedup_out);
    check(promptloom_corpus_save(kept, (dir / "corpus.jsonl").string().c_str()));
    write_text(dir / "dedup_report.json", take_string(report_json) + "\n");
    check(promptloom_config_save(cfg.get(), (dir / "config.toml").string().c_str()));
    std::printf("kept %zu of %zu prompts (report: %s)\n", promptloom_corpus_size(kept),
                promptloom_corpus_size(corpus.get()),
                (dir / "dedup_report.json").string().c_str());
  });

  // ---- index ----
  auto* index_cmd = app.add_subcommand("index", "Embed train prompts and fit the k-means index");
  std::string index_in, index_out, index_embeddings, index_k;
  index_cmd->add_option("--in", index_in, "Run directory")->required();
  index_cmd->add_option("--embeddings", index_embeddings,
                        "External embedding file (EMB1 format); omit to use the built-in "
                        "hashed embedder");
  index_cmd->add_option("--k", index_k, "Cluster count (0 = ceil(sqrt(N)))");
  index_cmd->add_option("--out", index_out, "Output run directory")->required();
  index_cmd->callback([&] {
    std::vector<Override> overrides;
    if (!index_k.empty()) overrides.push_back({"index.k_clusters", index_k});
    ConfigPtr cfg = resolve_config(config_file, index_in, overrides);
    CorpusPtr corpus = load_corpus_from(index_in);

    EmbeddingsPtr table;
    if (!index_embeddings.empty()) {
      promptloom_embeddings* raw = nullptr;
      check(promptloom_embeddings_load(index_embeddings.c_str(), config_dim(cfg.get()), &raw));
      table.reset(raw);
    } else {
      promptloom_embeddings* raw = nullptr;
      check(promptloom_embeddings_hash_for_corpus(corpus.get(), cfg.get(), &raw));
      table.reset(raw);
    }

    promptloom_index* index = nullptr;
    check(promptloom_index_fit(table.get(), corpus.get(), cfg.get(), &index));
    IndexPtr owned(index);

    ensure_dir(index_out);
    const fs::path dir(index_out);
    check(promptloom_index_save(index, (dir / "index.json").string().c_str()));
    check(promptloom_embeddings_save(table.get(), (dir / "embeddings.emb").string().c_str()));
    copy_bytes(fs::path(index_in) / "corpus.jsonl", dir / "corpus.jsonl");
    copy_bytes(fs::path(index_in) / "dedup_report.json", dir / "dedup_report.json");
    check(promptloom_config_save(cfg.get(), (dir / "config.toml").string().c_str()));
    std::printf("fitted %zu clusters over %zu embeddings into %s\n",
                promptloom_index_k(index), promptloom_embeddings_size(table.get()),
                index_out.c_str());
  });

  // ---- edit ----
  auto* edit = app.add_subcommand("edit", "Edit one user prompt through the pipeline");
  std::string edit_in, edit_prompt_text, edit_out, edit_strategy, edit_k, edit_pool;
  bool edit_dry_run = false;
  edit->add_option("--in", edit_in, "Run directory with corpus, embeddings and index")
      ->required();
  edit->add_option("--prompt", edit_prompt_text, "User prompt text")->required();
  edit->add_flag("--dry-run", edit_dry_run,
                 "Skip the LLM call and return the assembled prompt");
  edit->add_option("--strategy", edit_strategy, "closest|farthest|random");
  edit->add_option("--k-exemplars", edit_k, "Number of in-context exemplars");
  edit->add_option("--pool-size", edit_pool, "Retrieved candidate pool size M");
  edit->add_option("--out", edit_out, "Write the result JSON here instead of stdout");
  edit->callback([&] {
    std::vector<Override> overrides;
    if (!edit_strategy.empty()) overrides.push_back({"editor.strategy", edit_strategy});
    if (!edit_k.empty()) overrides.push_back({"editor.k_exemplars", edit_k});
    if (!edit_pool.empty()) overrides.push_back({"editor.pool_size", edit_pool});
    ConfigPtr cfg = resolve_config(config_file, edit_in, overrides);
    CorpusPtr corpus = load_corpus_from(edit_in);
    EmbeddingsPtr table = load_embeddings_from(edit_in, cfg.get());
    IndexPtr index = load_index_from(edit_in);

    char* result_json = nullptr;
    char* timings_json = nullptr;
    check(promptloom_edit(corpus.get(), table.get(), index.get(), cfg.get(),
                          edit_prompt_text.c_str(), edit_dry_run ? 1 : 0, &result_json,
                          &timings_json));
    const std::string result = take_string(result_json) + "\n";
    std::fprintf(stderr, "timings_ms: %s\n", take_string(timings_json).c_str());
    if (edit_out.empty()) {
      std::fputs(result.c_str(), stdout);
    } else {
      write_text(edit_out, result);
    }
  });

  // ---- report ----
  auto* report = app.add_subcommand("report", "Compare exemplar strategies");
  std::string report_in, report_out, report_strategies = "closest,farthest,random";
  std::string report_scores, report_k, report_pool;
  report->add_option("--in", report_in, "Run directory")->required();
  report->add_option("--strategies", report_strategies,
                     "Comma-separated strategies (closest,farthest,random,identity)");
  report->add_option("--k-exemplars", report_k, "Exemplars per user prompt");
  report->add_option("--pool-size", report_pool, "Retrieved candidate pool size M");
  report->add_option("--external-scores", report_scores,
                     "CSV of externally computed quality scores to join");
  report->add_option("--out", report_out, "Report CSV path")->required();
  report->callback([&] {
    std::vector<Override> overrides;
    if (!report_k.empty()) overrides.push_back({"editor.k_exemplars", report_k});
    if (!report_pool.empty()) overrides.push_back({"editor.pool_size", report_pool});
    ConfigPtr cfg = resolve_config(config_file, report_in, overrides);
    CorpusPtr corpus = load_corpus_from(report_in);
    EmbeddingsPtr table = load_embeddings_from(report_in, cfg.get());
    IndexPtr index = load_index_from(report_in);

    char* warnings = nullptr;
    check(promptloom_report(corpus.get(), table.get(), index.get(), cfg.get(),
                            report_strategies.c_str(),
                            report_scores.empty() ? nullptr : report_scores.c_str(),
                            report_out.c_str(), &warnings));
    const std::string warn = take_string(warnings);
    if (!warn.empty()) std::fprintf(stderr, "warning: %s\n", warn.c_str());
    std::printf("wrote %s\n", report_out.c_str());
  });

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "Measure retrieval latency on synthetic tables");
  std::string bench_sizes = "1000,2000,4000", bench_out;
  std::size_t bench_m = 100, bench_trials = 100;
  bench->add_option("--sizes", bench_sizes, "Comma-separated table sizes");
  bench->add_option("--m", bench_m, "Top-M per query");
  bench->add_option("--trials", bench_trials, "Queries per table size");
  bench->add_option("--out", bench_out, "Bench CSV path")->required();
  bench->callback([&] {
    ConfigPtr cfg = resolve_config(config_file, "", {});
    char* summary = nullptr;
    check(promptloom_bench(bench_sizes.c_str(), bench_m, bench_trials, cfg.get(),
                           bench_out.c_str(), &summary));
    std::printf("%s\n", take_string(summary).c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::fprintf(stderr, "promptloom: error:usage: %s\n", e.what());
    return 1;
  }
  return 0;
}
