#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "promptloom/embed.hpp"

namespace promptloom {

struct Neighbor {
  std::string id;
  double distance = 0.0;
};

// Ranked nearest neighbors, distances non-decreasing, ties broken by id.
struct RetrievalResult {
  std::vector<Neighbor> neighbors;
  std::size_t M = 0;

  std::size_t size() const { return neighbors.size(); }
};

// K-means partition over a set of embedding rows plus per-cluster posting
// lists. The serialized contract covers {version, dim, k, seed, centroids,
// assignments, inertia}; posting lists and the per-iteration inertia trace
// are derived state.
struct ClusterIndex {
  static constexpr std::uint32_t kVersion = 1;

  std::size_t dim = 0;
  std::uint64_t seed = 0;
  double inertia = 0.0;
  std::vector<float> centroids;  // k * dim, row-major
  std::vector<std::pair<std::string, std::uint32_t>> assignments;  // id -> cluster

  std::vector<double> inertia_history;                 // one entry per Lloyd iteration
  std::vector<std::vector<std::uint32_t>> postings;    // cluster -> assignment rows

  std::size_t k() const { return dim == 0 ? 0 : centroids.size() / dim; }
  std::span<const float> centroid(std::size_t c) const {
    return {centroids.data() + c * dim, dim};
  }
  void rebuild_postings();
};

// Lloyd iterations from k-means++ seeding; stops when assignments are fixed
// or after max_iters. Inertia is non-increasing across iterations. Empty
// clusters are reseeded to the point currently farthest from its centroid.
// n_init independent seeded restarts keep the best (lowest-inertia) run;
// inertia_history covers the winning run.
ClusterIndex kmeans_fit(const EmbeddingTable& table, std::size_t k_clusters,
                        std::size_t max_iters, std::uint64_t seed,
                        std::size_t n_init = 10);

// Fit over a subset of table ids (e.g. the train split).
ClusterIndex kmeans_fit(const EmbeddingTable& table, std::span<const std::string> ids,
                        std::size_t k_clusters, std::size_t max_iters, std::uint64_t seed,
                        std::size_t n_init = 10);

// Gathers the prompts assigned to the nprobe nearest centroids, re-ranks the
// pool exactly by distance to the query and returns the first M.
RetrievalResult retrieve_topM(std::span<const float> query, const ClusterIndex& index,
                              const EmbeddingTable& table, std::size_t M,
                              std::size_t nprobe);

// Exact full-scan oracle with identical ordering and tie rules.
RetrievalResult brute_force_topM(std::span<const float> query,
                                 const EmbeddingTable& table, std::size_t M);

// Versioned JSON container; saving twice is byte-identical and
// load(save(x)) == x on the serialized fields.
void save_index(const ClusterIndex& index, const std::filesystem::path& path);
ClusterIndex load_index(const std::filesystem::path& path);

}  // namespace promptloom
