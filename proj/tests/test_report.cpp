#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "promptloom/editor.hpp"
#include "promptloom/error.hpp"
#include "promptloom/features.hpp"
#include "promptloom/hashing.hpp"
#include "promptloom/report.hpp"

using namespace promptloom;

namespace {

// Synthetic clustered corpus: a large "field recording" cluster, a small
// "music" cluster, and user prompts that are word-level perturbations of
// cluster-A training prompts.
struct ReportFixture {
  Corpus corpus;
  PipelineConfig config;
  EmbeddingTable table{64};
  ClusterIndex index;

  explicit ReportFixture(std::uint64_t seed = 5) {
    Rng rng(seed);
    std::vector<std::string> vocab_a, vocab_b;
    for (int v = 0; v < 12; ++v) {
      vocab_a.push_back("field" + std::to_string(v));
      vocab_b.push_back("music" + std::to_string(v));
    }
    auto sentence = [&](const std::vector<std::string>& vocab) {
      std::string text;
      for (int w = 0; w < 8; ++w) {
        if (w) text += ' ';
        text += vocab[rng.below(vocab.size())];
      }
      return text;
    };

    std::vector<std::string> a_texts;
    for (int i = 0; i < 30; ++i) {
      Prompt p;
      p.id = "a" + std::to_string(i);
      p.text = sentence(vocab_a);
      p.source = Source::Train;
      a_texts.push_back(p.text);
      corpus.add(p);
    }
    for (int i = 0; i < 10; ++i) {
      Prompt p;
      p.id = "b" + std::to_string(i);
      p.text = sentence(vocab_b);
      p.source = Source::Train;
      corpus.add(p);
    }
    for (int i = 0; i < 8; ++i) {
      std::vector<std::string> words;
      {
        std::string base = a_texts[rng.below(a_texts.size())];
        std::string word;
        for (char c : base + " ") {
          if (c == ' ') {
            words.push_back(word);
            word.clear();
          } else {
            word += c;
          }
        }
      }
      words[1] = "usr" + std::to_string(i);
      words[5] = "typo" + std::to_string(i);
      std::string text;
      for (const auto& w : words) {
        if (!text.empty()) text += ' ';
        text += w;
      }
      Prompt p;
      p.id = "u" + std::to_string(i);
      p.text = text;
      p.source = Source::User;
      corpus.add(p);
    }

    config.seed = seed;
    config.features.feature_dim = 2048;
    config.features.bootstrap_count = 8;
    config.editor.pool_size = 36;
    config.editor.k_exemplars = 3;
    config.index.nprobe = 4;

    table = hash_embed_corpus(corpus, 64, stage_seed(config.seed, "embed"));
    std::vector<std::string> train_ids;
    for (const Prompt& p : corpus.prompts()) {
      if (p.source == Source::Train) train_ids.push_back(p.id);
    }
    index = kmeans_fit(table, train_ids, 6, 25, stage_seed(config.seed, "index"));
  }
};

}  // namespace

TEST_CASE("run_report produces one finite row per strategy") {
  ReportFixture f;
  const auto rows =
      run_report(f.corpus, f.table, f.index, {"closest", "farthest", "random"}, f.config);
  REQUIRE(rows.size() == 3);
  for (const StrategyRow& row : rows) {
    CHECK(std::isfinite(row.delta_r_div));
    CHECK(row.token_count > 0);
    CHECK(row.ttr_percent > 0.0);
    CHECK(row.ttr_percent <= 100.0);
    CHECK(!row.external.has_value());
  }
  CHECK(rows[0].strategy_name == "closest");
  CHECK(rows[2].strategy_name == "random");
}

TEST_CASE("identity strategy yields a zero divergence row") {
  ReportFixture f;
  const auto rows = run_report(f.corpus, f.table, f.index, {"identity"}, f.config);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].delta_r_div == 0.0);
}

TEST_CASE("closest-row divergence matches a scripted oracle") {
  ReportFixture f;
  const auto rows = run_report(f.corpus, f.table, f.index, {"closest"}, f.config);
  REQUIRE(rows.size() == 1);

  // Oracle: recompute per user prompt by composing the public ops directly
  // and evaluating the divergence with the independent termwise loop.
  FeaturizeConfig fc;
  fc.n_orders = f.config.features.n_orders;
  fc.feature_dim = f.config.features.feature_dim;
  fc.alpha = f.config.features.alpha;
  fc.seed = stage_seed(f.config.seed, "features");
  const auto train_texts = f.corpus.texts(Source::Train);
  const auto z = bootstrap_feature_set(train_texts, f.config.features.bootstrap_count, fc,
                                       stage_seed(f.config.seed, "bootstrap"));
  double expected_sum = 0.0;
  std::size_t users = 0;
  for (const Prompt& user : f.corpus.prompts()) {
    if (user.source != Source::User) continue;
    ++users;
    const auto query = hash_embed(user.text, f.table.dim(), stage_seed(f.config.seed, "embed"));
    const auto candidates = retrieve_topM(query, f.index, f.table,
                                          f.config.editor.pool_size,
                                          std::min(f.config.index.nprobe, f.index.k()));
    std::vector<std::string> exemplar_texts;
    for (std::size_t i = 0; i < f.config.editor.k_exemplars; ++i) {
      exemplar_texts.push_back(f.corpus.find(candidates.neighbors[i].id)->text);
    }
    const auto user_dist = featurize(std::span<const std::string>(&user.text, 1), fc);
    const auto revised = featurize(exemplar_texts, fc);
    expected_sum += oracle::prompt_divergence(z, user_dist, revised);
  }
  CHECK(rows[0].delta_r_div ==
        doctest::Approx(expected_sum / static_cast<double>(users)).epsilon(1e-9));
}

TEST_CASE("closest beats farthest on the clustered fixture") {
  ReportFixture f;
  const auto rows =
      run_report(f.corpus, f.table, f.index, {"closest", "farthest"}, f.config);
  CHECK(rows[0].delta_r_div > rows[1].delta_r_div);
}

TEST_CASE("report CSV emission and external score join") {
  ReportFixture f;
  std::vector<std::string> warnings;
  const auto scores = parse_external_scores(
      "strategy,clap,kl,fad,sub,obj\n"
      "closest,0.047,0.1453,3.068,3.832,2.68\n"
      "unknown,1,2,3,4,5\n"
      "farthest,,,2.203,,\n",
      {"closest", "farthest", "random"}, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("unknown") != std::string::npos);
  REQUIRE(scores.count("closest") == 1);
  CHECK(scores.at("closest").fad.value() == doctest::Approx(3.068));
  CHECK(!scores.at("farthest").clap.has_value());

  const auto rows = run_report(f.corpus, f.table, f.index,
                               {"closest", "farthest", "random"}, f.config, &scores);
  const std::string csv = report_to_csv(rows);
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header == "strategy,delta_r_div,tokens,ttr,clap,kl,fad,sub,obj");
  CHECK(csv.find("closest,") != std::string::npos);
  CHECK(csv.find(",3.068,") != std::string::npos);
  // The random row carries no external scores: trailing empty cells.
  const auto random_pos = csv.find("random,");
  REQUIRE(random_pos != std::string::npos);
  const std::string random_line = csv.substr(random_pos, csv.find('\n', random_pos) - random_pos);
  CHECK(random_line.substr(random_line.size() - 5) == ",,,,,");
}

TEST_CASE("report emission is deterministic across runs") {
  ReportFixture f1, f2;
  const auto r1 =
      run_report(f1.corpus, f1.table, f1.index, {"closest", "random"}, f1.config);
  const auto r2 =
      run_report(f2.corpus, f2.table, f2.index, {"closest", "random"}, f2.config);
  CHECK(report_to_csv(r1) == report_to_csv(r2));
}

TEST_CASE("report rejects unknown strategies and degenerate corpora") {
  ReportFixture f;
  CHECK_THROWS_AS(run_report(f.corpus, f.table, f.index, {"nearest"}, f.config), Error);
  CHECK_THROWS_AS(run_report(f.corpus, f.table, f.index, {}, f.config), Error);

  Corpus train_only;
  Prompt p;
  p.id = "t0";
  p.text = "just train";
  p.source = Source::Train;
  train_only.add(p);
  CHECK_THROWS_AS(run_report(train_only, f.table, f.index, {"closest"}, f.config), Error);
}

TEST_CASE("external scores CSV validation") {
  std::vector<std::string> warnings;
  CHECK_THROWS_AS(parse_external_scores("", {"closest"}, &warnings), Error);
  CHECK_THROWS_AS(parse_external_scores("wrong,header\n", {"closest"}, &warnings), Error);
  CHECK_THROWS_AS(
      parse_external_scores("strategy,clap,kl,fad,sub,obj\nclosest,xx,,,,\n",
                            {"closest"}, &warnings),
      Error);
}

TEST_CASE("bench rows, shape and fit") {
  PipelineConfig config;
  config.embedding.dim = 96;
  config.index.max_iters = 8;
  const BenchResult result = run_bench({400, 800}, 10, 20, 7, config);
  REQUIRE(result.rows.size() == 2);
  CHECK(result.rows[0].pool_size == 400);
  CHECK(result.rows[1].pool_size == 800);
  for (const BenchRow& row : result.rows) CHECK(row.mean_latency_ms >= 0.0);
  CHECK(std::isfinite(result.r_squared));

  const std::string csv = bench_to_csv(result);
  CHECK(csv.rfind("size,mean_latency_ms\n", 0) == 0);
  CHECK(csv.find("# slope_ms_per_entry=") != std::string::npos);
  CHECK(csv.find("# r_squared=") != std::string::npos);

  CHECK_THROWS_AS(run_bench({}, 10, 5, 7, config), Error);
  CHECK_THROWS_AS(run_bench({5}, 10, 5, 7, config), Error);  // size < M
}

TEST_CASE("bench queries are deterministic: trial 0 retrieves the same ids") {
  PipelineConfig config;
  config.embedding.dim = 64;
  config.index.max_iters = 8;
  const std::uint64_t seed = 11;
  const EmbeddingTable table = synthetic_table(500, 64, seed);
  const ClusterIndex index = kmeans_fit(table, 22, 8, stage_seed(seed, "bench-index"));
  const EmbeddingVector q1 = bench_query(64, seed, 500, 0);
  const EmbeddingVector q2 = bench_query(64, seed, 500, 0);
  CHECK(q1 == q2);
  const auto r1 = retrieve_topM(q1, index, table, 10, 4);
  const auto r2 = retrieve_topM(q2, index, table, 10, 4);
  REQUIRE(r1.size() == r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i) {
    CHECK(r1.neighbors[i].id == r2.neighbors[i].id);
  }
}

TEST_CASE("candidate scan cost grows sublinearly when doubling the table") {
  // With nprobe fixed the probed pool grows ~sqrt(2)x per doubling; allow a
  // generous 2.5x bound to absorb timing noise.
  PipelineConfig config;
  config.embedding.dim = 128;
  config.index.max_iters = 6;
  const BenchResult result = run_bench({1000, 2000}, 10, 50, 3, config);
  REQUIRE(result.rows.size() == 2);
  const double small = result.rows[0].mean_latency_ms;
  const double large = result.rows[1].mean_latency_ms;
  if (small > 1e-4) {  // only meaningful when above timer noise
    CHECK(large / small <= 2.5);
  }
}
