#include "promptloom/features.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "json.hpp"
#include "promptloom/corpus.hpp"
#include "promptloom/error.hpp"
#include "promptloom/hashing.hpp"

namespace promptloom {

FeatureDistribution make_distribution(std::vector<double> weights, double alpha) {
  if (weights.empty()) raise(ErrorKind::Invalid, "feature distribution must be non-empty");
  if (!(alpha > 0.0)) raise(ErrorKind::Invalid, "smoothing alpha must be > 0");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      raise(ErrorKind::Invalid, "feature weights must be strictly positive and finite");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    raise(ErrorKind::Invalid, "feature weights must sum to 1 within 1e-9");
  }
  return {std::move(weights), alpha};
}

FeatureDistribution featurize(std::span<const std::string> texts,
                              const FeaturizeConfig& config) {
  if (texts.empty()) raise(ErrorKind::Invalid, "featurize requires at least one text");
  if (config.feature_dim == 0) raise(ErrorKind::Invalid, "feature_dim must be >= 1");
  if (!(config.alpha > 0.0)) raise(ErrorKind::Invalid, "smoothing alpha must be > 0");
  if (config.n_orders.empty()) raise(ErrorKind::Invalid, "n_orders must be non-empty");
  for (int n : config.n_orders) {
    if (n < 1 || n > 3) raise(ErrorKind::Invalid, "n_orders must be a subset of {1,2,3}");
  }

  std::vector<double> counts(config.feature_dim, 0.0);
  std::size_t total = 0;
  for (const std::string& text : texts) {
    const TokenSequence tokens = tokenize(text);
    for (int n : config.n_orders) {
      const std::size_t order = static_cast<std::size_t>(n);
      if (tokens.size() < order) continue;
      for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
        std::string gram = tokens[i];
        for (std::size_t k = 1; k < order; ++k) {
          gram += ' ';
          gram += tokens[i + k];
        }
        counts[hash64(gram, config.seed) % config.feature_dim] += 1.0;
        ++total;
      }
    }
  }
  if (total == 0) {
    raise(ErrorKind::Invalid, "featurize: all texts are empty after tokenization");
  }

  const double denom = static_cast<double>(total) +
                       config.alpha * static_cast<double>(config.feature_dim);
  for (double& c : counts) c = (c + config.alpha) / denom;
  return {std::move(counts), config.alpha};
}

double kl_divergence(const FeatureDistribution& p, const FeatureDistribution& q) {
  if (p.dim() != q.dim() || p.dim() == 0) {
    raise(ErrorKind::Invalid, "kl_divergence: dimension mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.dim(); ++i) {
    sum += p.weights[i] * std::log(p.weights[i] / q.weights[i]);
  }
  return sum / static_cast<double>(p.dim());
}

double prompt_divergence(const DivergenceInputs& inputs) {
  if (inputs.train_set.empty()) {
    raise(ErrorKind::Invalid, "prompt_divergence: train_set must be non-empty");
  }
  const std::size_t dim = inputs.user.dim();
  const double alpha = inputs.user.alpha;
  if (inputs.revised.dim() != dim || inputs.revised.alpha != alpha) {
    raise(ErrorKind::Invalid, "prompt_divergence: dimension or alpha mismatch");
  }
  double sum = 0.0;
  for (const FeatureDistribution& train : inputs.train_set) {
    if (train.dim() != dim || train.alpha != alpha) {
      raise(ErrorKind::Invalid, "prompt_divergence: dimension or alpha mismatch in train_set");
    }
    sum += kl_divergence(train, inputs.user) - kl_divergence(train, inputs.revised);
  }
  return sum / static_cast<double>(inputs.train_set.size());
}

LexicalStats lexical_stats(std::span<const std::string> texts) {
  LexicalStats stats;
  std::unordered_set<std::string> types;
  for (const std::string& text : texts) {
    for (std::string& token : tokenize(text)) {
      ++stats.token_count;
      types.insert(std::move(token));
    }
  }
  stats.type_count = types.size();
  stats.ttr_percent = stats.token_count == 0
                          ? 0.0
                          : 100.0 * static_cast<double>(stats.type_count) /
                                static_cast<double>(stats.token_count);
  return stats;
}

std::vector<FeatureDistribution> bootstrap_feature_set(
    std::span<const std::string> texts, std::size_t count,
    const FeaturizeConfig& config, std::uint64_t seed) {
  if (texts.empty()) raise(ErrorKind::Invalid, "bootstrap requires at least one text");
  if (count == 0) raise(ErrorKind::Invalid, "bootstrap count must be >= 1");

  std::vector<FeatureDistribution> set;
  set.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    Rng rng(mix64(seed ^ (b + 1)));
    std::vector<std::string> sample;
    sample.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      sample.push_back(texts[rng.below(texts.size())]);
    }
    set.push_back(featurize(sample, config));
  }
  return set;
}

std::string distribution_to_json(const FeatureDistribution& dist) {
  nlohmann::json out;
  out["dim"] = dist.dim();
  out["alpha"] = dist.alpha;
  out["weights"] = dist.weights;
  return out.dump();
}

}  // namespace promptloom
