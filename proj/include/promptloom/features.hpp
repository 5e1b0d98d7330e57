#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace promptloom {

// Normalized hashed n-gram probability vector. All weights are strictly
// positive after additive smoothing and sum to 1 within 1e-9.
struct FeatureDistribution {
  std::vector<double> weights;
  double alpha = 0.5;

  std::size_t dim() const { return weights.size(); }
};

// Builds a FeatureDistribution from raw weights, validating the invariants.
FeatureDistribution make_distribution(std::vector<double> weights, double alpha);

struct FeaturizeConfig {
  std::vector<int> n_orders = {1, 2};  // subset of {1,2,3}
  std::size_t feature_dim = 65536;
  std::uint64_t seed = 0;
  double alpha = 0.5;
};

// Word n-gram counts (all configured orders) hashed into feature_dim buckets,
// smoothed by alpha per bucket and normalized to sum 1.
FeatureDistribution featurize(std::span<const std::string> texts,
                              const FeaturizeConfig& config);

// Channel-averaged KL divergence: (1/|X|) * sum_x p(x) * ln(p(x)/q(x)).
// Exactly zero for identical inputs; dimensions must match.
double kl_divergence(const FeatureDistribution& p, const FeatureDistribution& q);

struct DivergenceInputs {
  std::vector<FeatureDistribution> train_set;  // the set Z
  FeatureDistribution user;
  FeatureDistribution revised;  // the retrieved/edited candidate
};

// Prompt divergence: (1/|Z|) * sum over train_set of
//   KL(p_hat || user) - KL(p_hat || revised).
// Positive values mean the revised distribution sits closer to the training
// distributions than the raw user distribution does.
double prompt_divergence(const DivergenceInputs& inputs);

struct LexicalStats {
  std::size_t token_count = 0;
  std::size_t type_count = 0;
  double ttr_percent = 0.0;  // 100 * type_count / token_count, 0 when empty
};

LexicalStats lexical_stats(std::span<const std::string> texts);

// The set Z: B bootstrap resamples of the text list, each featurized into one
// distribution. Deterministic for a fixed (texts order, B, config, seed).
std::vector<FeatureDistribution> bootstrap_feature_set(
    std::span<const std::string> texts, std::size_t count,
    const FeaturizeConfig& config, std::uint64_t seed);

// Debug serialization: {"dim":N,"alpha":a,"weights":[...]}.
std::string distribution_to_json(const FeatureDistribution& dist);

}  // namespace promptloom
