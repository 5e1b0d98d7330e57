#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "promptloom/error.hpp"
#include "promptloom/features.hpp"
#include "promptloom/hashing.hpp"

using namespace promptloom;

namespace {

FeaturizeConfig small_config(std::size_t dim, std::vector<int> orders = {1},
                             double alpha = 0.5) {
  FeaturizeConfig fc;
  fc.n_orders = std::move(orders);
  fc.feature_dim = dim;
  fc.seed = 12;
  fc.alpha = alpha;
  return fc;
}

FeatureDistribution random_distribution(Rng& rng, std::size_t dim) {
  std::vector<double> w(dim);
  double sum = 0.0;
  for (double& x : w) {
    x = 0.05 + rng.unit();
    sum += x;
  }
  for (double& x : w) x /= sum;
  return make_distribution(std::move(w), 0.5);
}

}  // namespace

TEST_CASE("featurize hand example: 'a a' unigrams, dim 4, alpha 0.5") {
  const std::vector<std::string> texts = {"a a"};
  const FeatureDistribution dist = featurize(texts, small_config(4));
  // One bucket holds (2 + 0.5) / (2 + 4*0.5) = 0.625, the rest 0.125 each.
  std::vector<double> sorted = dist.weights;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted[3] == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(sorted[0] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(sorted[1] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(sorted[2] == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("featurize is deterministic and permutation-invariant") {
  const std::vector<std::string> a = {"a dog barks", "rain falls", "wind howls"};
  std::vector<std::string> b = {"wind howls", "a dog barks", "rain falls"};
  const auto fa = featurize(a, small_config(64, {1, 2}));
  const auto fb = featurize(b, small_config(64, {1, 2}));
  CHECK(fa.weights == fb.weights);
}

TEST_CASE("featurize output is a smoothed probability vector") {
  const std::vector<std::string> texts = {"a dog barks at the moon", "x y z"};
  const auto dist = featurize(texts, small_config(128, {1, 2}));
  double sum = 0.0;
  for (double w : dist.weights) {
    CHECK(w > 0.0);
    sum += w;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);
}

TEST_CASE("featurize rejects degenerate inputs") {
  const std::vector<std::string> none;
  CHECK_THROWS_AS(featurize(none, small_config(8)), Error);
  const std::vector<std::string> empties = {"...", "  "};
  CHECK_THROWS_AS(featurize(empties, small_config(8)), Error);
  const std::vector<std::string> ok = {"a"};
  CHECK_THROWS_AS(featurize(ok, small_config(8, {4})), Error);
  CHECK_THROWS_AS(featurize(ok, small_config(8, {1}, 0.0)), Error);
}

TEST_CASE("kl_divergence matches the hand-evaluated dim-2 example") {
  const auto p = make_distribution({0.75, 0.25}, 0.5);
  const auto q = make_distribution({0.25, 0.75}, 0.5);
  // (1/2) * (0.75*ln3 + 0.25*ln(1/3)).
  const double expected = 0.5 * (0.75 * std::log(3.0) + 0.25 * std::log(1.0 / 3.0));
  CHECK(kl_divergence(p, q) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(kl_divergence(p, q) == doctest::Approx(0.27465307).epsilon(1e-7));
}

TEST_CASE("kl_divergence is exactly zero on identical distributions") {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_distribution(rng, 16);
    CHECK(kl_divergence(p, p) == 0.0);
  }
}

TEST_CASE("kl_divergence is non-negative and matches the termwise oracle") {
  Rng rng(33);
  for (int t = 0; t < 1000; ++t) {
    const auto p = random_distribution(rng, 4);
    const auto q = random_distribution(rng, 4);
    const double kl = kl_divergence(p, q);
    CHECK(kl >= -1e-12);
    CHECK(kl == doctest::Approx(oracle::kl(p.weights, q.weights)).epsilon(1e-9));
  }
}

TEST_CASE("kl_divergence equality holds only for identical inputs (1e-9 scale)") {
  Rng rng(41);
  for (int t = 0; t < 50; ++t) {
    const auto p = random_distribution(rng, 8);
    auto shifted = p.weights;
    // Move 1% mass between two channels: KL must be visibly positive.
    const double delta = 0.01 * shifted[0];
    shifted[0] -= delta;
    shifted[1] += delta;
    const auto q = make_distribution(shifted, p.alpha);
    CHECK(kl_divergence(p, q) > 1e-9);
  }
}

TEST_CASE("kl_divergence rejects dimension mismatch") {
  const auto p = make_distribution({0.5, 0.5}, 0.5);
  const auto q = make_distribution({0.25, 0.25, 0.25, 0.25}, 0.5);
  CHECK_THROWS_AS(kl_divergence(p, q), Error);
}

TEST_CASE("prompt_divergence contract cases") {
  Rng rng(51);
  const auto p1 = random_distribution(rng, 8);
  const auto p2 = random_distribution(rng, 8);
  const auto user = random_distribution(rng, 8);

  SUBCASE("revised = user cancels exactly") {
    CHECK(prompt_divergence({{p1, p2}, user, user}) == 0.0);
  }
  SUBCASE("singleton Z with revised = train reduces to KL(train||user)") {
    const double r = prompt_divergence({{p1}, user, p1});
    CHECK(r == doctest::Approx(kl_divergence(p1, user)).epsilon(1e-12));
  }
  SUBCASE("two-element Z matches the independent termwise oracle") {
    const auto revised = random_distribution(rng, 8);
    const double r = prompt_divergence({{p1, p2}, user, revised});
    CHECK(r == doctest::Approx(oracle::prompt_divergence({p1, p2}, user, revised))
                   .epsilon(1e-9));
  }
  SUBCASE("empty train set is rejected") {
    CHECK_THROWS_AS(prompt_divergence({{}, user, user}), Error);
  }
  SUBCASE("mismatched smoothing alpha is rejected") {
    FeatureDistribution other = make_distribution(user.weights, 0.25);
    CHECK_THROWS_AS(prompt_divergence({{p1}, user, other}), Error);
  }
}

TEST_CASE("prompt_divergence is linear in the train-set average") {
  Rng rng(61);
  std::vector<FeatureDistribution> z;
  for (int i = 0; i < 5; ++i) z.push_back(random_distribution(rng, 12));
  const auto user = random_distribution(rng, 12);
  const auto revised = random_distribution(rng, 12);
  const double batch = prompt_divergence({z, user, revised});
  double mean = 0.0;
  for (const auto& p : z) mean += prompt_divergence({{p}, user, revised});
  mean /= static_cast<double>(z.size());
  CHECK(batch == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("convex moves toward a train distribution give positive divergence") {
  Rng rng(71);
  for (int t = 0; t < 40; ++t) {
    const std::size_t dim = 2 + rng.below(15);
    const auto train = random_distribution(rng, dim);
    const auto user = random_distribution(rng, dim);
    const double lambda = 0.05 + 0.95 * rng.unit();  // (0, 1]
    std::vector<double> blend(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      blend[i] = lambda * train.weights[i] + (1.0 - lambda) * user.weights[i];
    }
    const auto revised = make_distribution(blend, 0.5);
    CHECK(prompt_divergence({{train}, user, revised}) > 0.0);
  }
}

TEST_CASE("lexical_stats counts tokens and types") {
  const std::vector<std::string> two = {"a dog", "a cat"};
  const LexicalStats s = lexical_stats(two);
  CHECK(s.token_count == 4);
  CHECK(s.type_count == 3);
  CHECK(s.ttr_percent == doctest::Approx(75.0));

  const std::vector<std::string> none;
  CHECK(lexical_stats(none).token_count == 0);
  CHECK(lexical_stats(none).ttr_percent == 0.0);

  const std::vector<std::string> rep = {"x x x x"};
  CHECK(lexical_stats(rep).ttr_percent == doctest::Approx(25.0));
}

TEST_CASE("bootstrap_feature_set is deterministic and respects config") {
  const std::vector<std::string> texts = {"a dog barks", "rain on tin", "wind in trees",
                                          "a cat sleeps"};
  const auto z1 = bootstrap_feature_set(texts, 4, small_config(64, {1, 2}), 5);
  const auto z2 = bootstrap_feature_set(texts, 4, small_config(64, {1, 2}), 5);
  REQUIRE(z1.size() == 4);
  for (std::size_t i = 0; i < z1.size(); ++i) CHECK(z1[i].weights == z2[i].weights);
  const auto z3 = bootstrap_feature_set(texts, 4, small_config(64, {1, 2}), 6);
  bool any_diff = false;
  for (std::size_t i = 0; i < z1.size(); ++i) {
    if (z1[i].weights != z3[i].weights) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("distribution_to_json carries dim, alpha and weights") {
  const auto p = make_distribution({0.5, 0.5}, 0.25);
  const std::string json = distribution_to_json(p);
  CHECK(json.find("\"dim\":2") != std::string::npos);
  CHECK(json.find("\"alpha\":0.25") != std::string::npos);
  CHECK(json.find("\"weights\"") != std::string::npos);
}
