#include "promptloom/report.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>

#include "promptloom/editor.hpp"
#include "promptloom/error.hpp"
#include "promptloom/features.hpp"
#include "promptloom/hashing.hpp"

namespace promptloom {

namespace {

FeaturizeConfig featurize_config(const PipelineConfig& config) {
  FeaturizeConfig fc;
  fc.n_orders = config.features.n_orders;
  fc.feature_dim = config.features.feature_dim;
  fc.alpha = config.features.alpha;
  fc.seed = stage_seed(config.seed, "features");
  return fc;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) raise(ErrorKind::Internal, "double formatting failed");
  return std::string(buf, end);
}

}  // namespace

std::vector<StrategyRow> run_report(
    const Corpus& corpus, const EmbeddingTable& table, const ClusterIndex& index,
    const std::vector<std::string>& strategies, const PipelineConfig& config,
    const std::map<std::string, ExternalScores>* external_scores,
    std::vector<std::string>* warnings) {
  if (corpus.train_count() == 0 || corpus.user_count() == 0) {
    raise(ErrorKind::Invalid, "report requires both train and user prompts");
  }
  if (strategies.empty()) raise(ErrorKind::Invalid, "report requires at least one strategy");
  for (const std::string& name : strategies) {
    if (name != "identity") strategy_from_name(name);  // validates
  }

  const FeaturizeConfig fc = featurize_config(config);
  const std::vector<std::string> train_texts = corpus.texts(Source::Train);
  const std::vector<FeatureDistribution> train_set = bootstrap_feature_set(
      train_texts, config.features.bootstrap_count, fc, stage_seed(config.seed, "bootstrap"));

  const std::size_t nprobe = std::min(config.index.nprobe, index.k());
  const std::uint64_t embed_seed = stage_seed(config.seed, "embed");
  const std::uint64_t editor_seed = stage_seed(config.seed, "editor");

  struct Accumulator {
    double divergence_sum = 0.0;
    std::vector<std::string> exemplar_texts;
  };
  std::vector<Accumulator> acc(strategies.size());

  std::size_t user_prompts = 0;
  for (const Prompt& user : corpus.prompts()) {
    if (user.source != Source::User) continue;
    ++user_prompts;

    EmbeddingVector query_storage;
    std::span<const float> query;
    if (const auto row = table.find(user.id)) {
      query = table.vec(*row);
    } else {
      query_storage = hash_embed(user.text, table.dim(), embed_seed);
      query = query_storage;
    }

    const RetrievalResult candidates =
        retrieve_topM(query, index, table, config.editor.pool_size, nprobe);
    const FeatureDistribution user_dist =
        featurize(std::span<const std::string>(&user.text, 1), fc);

    for (std::size_t s = 0; s < strategies.size(); ++s) {
      const std::string& name = strategies[s];
      if (name == "identity") {
        acc[s].divergence_sum += prompt_divergence({train_set, user_dist, user_dist});
        acc[s].exemplar_texts.push_back(user.text);
        continue;
      }
      const std::size_t k = std::min(config.editor.k_exemplars, candidates.size());
      if (k == 0) raise(ErrorKind::Invalid, "empty candidate pool for user '" + user.id + "'");
      const std::uint64_t seed =
          mix64(editor_seed ^ hash64(user.id, 1) ^ hash64(name, 2));
      const ExemplarSet selected =
          select_exemplars(candidates, corpus, strategy_from_name(name), k, seed);
      std::vector<std::string> texts;
      texts.reserve(selected.exemplars.size());
      for (const Exemplar& e : selected.exemplars) texts.push_back(e.text);
      const FeatureDistribution revised = featurize(texts, fc);
      acc[s].divergence_sum += prompt_divergence({train_set, user_dist, revised});
      for (std::string& t : texts) acc[s].exemplar_texts.push_back(std::move(t));
    }
  }

  std::vector<StrategyRow> rows;
  rows.reserve(strategies.size());
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    StrategyRow row;
    row.strategy_name = strategies[s];
    row.delta_r_div = acc[s].divergence_sum / static_cast<double>(user_prompts);
    const LexicalStats stats = lexical_stats(acc[s].exemplar_texts);
    row.token_count = stats.token_count;
    row.ttr_percent = stats.ttr_percent;
    if (external_scores) {
      auto it = external_scores->find(row.strategy_name);
      if (it != external_scores->end()) row.external = it->second;
    }
    rows.push_back(std::move(row));
  }

  if (external_scores && warnings) {
    for (const auto& [name, scores] : *external_scores) {
      if (std::find(strategies.begin(), strategies.end(), name) == strategies.end()) {
        warnings->push_back("external scores for unknown strategy '" + name + "' ignored");
      }
    }
  }
  return rows;
}

std::string report_to_csv(const std::vector<StrategyRow>& rows) {
  std::string out = "strategy,delta_r_div,tokens,ttr,clap,kl,fad,sub,obj\n";
  auto cell = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const StrategyRow& row : rows) {
    out += row.strategy_name;
    out += ',';
    out += format_double(row.delta_r_div);
    out += ',';
    out += std::to_string(row.token_count);
    out += ',';
    out += format_double(row.ttr_percent);
    const ExternalScores scores = row.external.value_or(ExternalScores{});
    out += ',' + cell(scores.clap);
    out += ',' + cell(scores.kl);
    out += ',' + cell(scores.fad);
    out += ',' + cell(scores.sub);
    out += ',' + cell(scores.obj);
    out += '\n';
  }
  return out;
}

std::map<std::string, ExternalScores> parse_external_scores(
    const std::string& csv_text, const std::vector<std::string>& known,
    std::vector<std::string>* warnings) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) raise(ErrorKind::Parse, "external scores CSV is empty");
  if (line != "strategy,clap,kl,fad,sub,obj") {
    raise(ErrorKind::Parse,
          "external scores CSV must start with header 'strategy,clap,kl,fad,sub,obj'");
  }

  std::map<std::string, ExternalScores> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    while (cells.size() < 6) cells.emplace_back();
    if (cells.size() != 6) {
      raise(ErrorKind::Parse, "external scores CSV line " + std::to_string(line_no) +
                                  ": expected 6 columns");
    }
    auto parse_cell = [&](const std::string& raw) -> std::optional<double> {
      if (raw.empty()) return std::nullopt;
      double v = 0.0;
      auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (ec != std::errc() || p != raw.data() + raw.size()) {
        raise(ErrorKind::Parse, "external scores CSV line " + std::to_string(line_no) +
                                    ": malformed number '" + raw + "'");
      }
      return v;
    };
    const std::string& name = cells[0];
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      if (warnings) {
        warnings->push_back("external scores row for unknown strategy '" + name +
                            "' skipped");
      }
      continue;
    }
    ExternalScores scores;
    scores.clap = parse_cell(cells[1]);
    scores.kl = parse_cell(cells[2]);
    scores.fad = parse_cell(cells[3]);
    scores.sub = parse_cell(cells[4]);
    scores.obj = parse_cell(cells[5]);
    out[name] = scores;
  }
  return out;
}

EmbeddingTable synthetic_table(std::size_t count, std::size_t dim, std::uint64_t seed) {
  EmbeddingTable table(dim);
  Rng rng(mix64(seed ^ count));
  for (std::size_t i = 0; i < count; ++i) {
    EmbeddingVector v(dim);
    for (float& x : v) x = static_cast<float>(rng.gaussian());
    normalize(v);
    table.add("p" + std::to_string(i), std::move(v), false);
  }
  return table;
}

EmbeddingVector bench_query(std::size_t dim, std::uint64_t seed, std::size_t table_size,
                            std::size_t trial) {
  Rng rng(mix64(seed ^ (table_size * 0x9e3779b9ULL) ^ (trial + 1)));
  EmbeddingVector v(dim);
  for (float& x : v) x = static_cast<float>(rng.gaussian());
  normalize(v);
  return v;
}

BenchResult run_bench(const std::vector<std::size_t>& table_sizes, std::size_t M,
                      std::size_t trials, std::uint64_t seed,
                      const PipelineConfig& config) {
  if (table_sizes.empty()) raise(ErrorKind::Invalid, "bench requires at least one size");
  if (trials == 0) raise(ErrorKind::Invalid, "bench trials must be >= 1");
  for (std::size_t size : table_sizes) {
    if (size < M) raise(ErrorKind::Invalid, "bench sizes must be >= M");
  }

  const std::size_t dim = config.embedding.dim;
  BenchResult result;
  for (std::size_t size : table_sizes) {
    const EmbeddingTable table = synthetic_table(size, dim, seed);
    const std::size_t k =
        config.index.k_clusters > 0
            ? std::min(config.index.k_clusters, size)
            : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(size))));
    // Single init: the bench measures query latency, not fit quality.
    const ClusterIndex index =
        kmeans_fit(table, k, config.index.max_iters, stage_seed(seed, "bench-index"), 1);
    const std::size_t nprobe = std::min(config.index.nprobe, index.k());

    double total_ms = 0.0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const EmbeddingVector query = bench_query(dim, seed, size, trial);
      const auto start = std::chrono::steady_clock::now();
      const RetrievalResult hits = retrieve_topM(query, index, table, M, nprobe);
      const auto stop = std::chrono::steady_clock::now();
      if (hits.size() == 0) raise(ErrorKind::Internal, "bench retrieval returned nothing");
      total_ms += std::chrono::duration<double, std::milli>(stop - start).count();
    }
    result.rows.push_back({size, total_ms / static_cast<double>(trials)});
  }

  // Least-squares fit of latency against table size.
  const double n = static_cast<double>(result.rows.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const BenchRow& row : result.rows) {
    const double x = static_cast<double>(row.pool_size);
    const double y = row.mean_latency_ms;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom != 0.0) {
    result.slope_ms_per_entry = (n * sxy - sx * sy) / denom;
    result.intercept_ms = (sy - result.slope_ms_per_entry * sx) / n;
    double ss_res = 0.0;
    const double mean_y = sy / n;
    double ss_tot = 0.0;
    for (const BenchRow& row : result.rows) {
      const double x = static_cast<double>(row.pool_size);
      const double fit = result.slope_ms_per_entry * x + result.intercept_ms;
      ss_res += (row.mean_latency_ms - fit) * (row.mean_latency_ms - fit);
      ss_tot += (row.mean_latency_ms - mean_y) * (row.mean_latency_ms - mean_y);
    }
    result.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  }
  return result;
}

std::string bench_to_csv(const BenchResult& result) {
  std::string out = "size,mean_latency_ms\n";
  for (const BenchRow& row : result.rows) {
    out += std::to_string(row.pool_size);
    out += ',';
    out += format_double(row.mean_latency_ms);
    out += '\n';
  }
  out += "# slope_ms_per_entry=" + format_double(result.slope_ms_per_entry) + "\n";
  out += "# r_squared=" + format_double(result.r_squared) + "\n";
  return out;
}

}  // namespace promptloom
