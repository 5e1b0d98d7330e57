#include "promptloom/cluster_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "promptloom/error.hpp"
#include "promptloom/hashing.hpp"

namespace promptloom {

namespace {

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sq += d * d;
  }
  return sq;
}

std::size_t nearest_centroid(std::span<const float> point,
                             const std::vector<float>& centroids, std::size_t k,
                             std::size_t dim, double* best_sq_out = nullptr) {
  std::size_t best = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const double sq = squared_distance(point, {centroids.data() + c * dim, dim});
    if (sq < best_sq) {
      best_sq = sq;
      best = c;
    }
  }
  if (best_sq_out) *best_sq_out = best_sq;
  return best;
}

}  // namespace

void ClusterIndex::rebuild_postings() {
  postings.assign(k(), {});
  for (std::size_t row = 0; row < assignments.size(); ++row) {
    postings[assignments[row].second].push_back(static_cast<std::uint32_t>(row));
  }
}

ClusterIndex kmeans_fit(const EmbeddingTable& table, std::size_t k_clusters,
                        std::size_t max_iters, std::uint64_t seed, std::size_t n_init) {
  std::vector<std::string> ids;
  ids.reserve(table.size());
  for (std::size_t row = 0; row < table.size(); ++row) ids.push_back(table.id(row));
  return kmeans_fit(table, ids, k_clusters, max_iters, seed, n_init);
}

namespace {

ClusterIndex kmeans_single(const EmbeddingTable& table, std::span<const std::string> ids,
                           std::size_t k_clusters, std::size_t max_iters,
                           std::uint64_t seed) {
  const std::size_t n = ids.size();
  if (k_clusters == 0) raise(ErrorKind::Invalid, "k_clusters must be >= 1");
  if (max_iters == 0) raise(ErrorKind::Invalid, "max_iters must be >= 1");
  if (k_clusters > n) {
    raise(ErrorKind::Invalid, "k_clusters (" + std::to_string(k_clusters) +
                                  ") exceeds number of points (" + std::to_string(n) + ")");
  }
  const std::size_t dim = table.dim();

  std::vector<std::size_t> rows;
  rows.reserve(n);
  for (const std::string& id : ids) {
    const auto row = table.find(id);
    if (!row) raise(ErrorKind::Invalid, "embedding table is missing id '" + id + "'");
    rows.push_back(*row);
  }

  const std::size_t k = k_clusters;
  ClusterIndex index;
  index.dim = dim;
  index.seed = seed;
  index.centroids.assign(k * dim, 0.0f);

  // k-means++ seeding: first center uniform, then D^2 sampling.
  Rng rng(seed);
  std::vector<double> best_sq(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  auto set_centroid = [&](std::size_t c, std::size_t point) {
    const auto v = table.vec(rows[point]);
    std::copy(v.begin(), v.end(), index.centroids.begin() + c * dim);
  };
  {
    const std::size_t first = rng.below(n);
    set_centroid(0, first);
    chosen[first] = true;
    for (std::size_t p = 0; p < n; ++p) {
      best_sq[p] = squared_distance(table.vec(rows[p]), index.centroid(0));
    }
    for (std::size_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (std::size_t p = 0; p < n; ++p) total += best_sq[p];
      std::size_t pick = n;
      if (total > 0.0) {
        const double r = rng.unit() * total;
        double acc = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
          acc += best_sq[p];
          if (acc >= r && !chosen[p]) {
            pick = p;
            break;
          }
        }
      }
      if (pick == n) {
        // All remaining mass sits on chosen points (duplicates); take the
        // first unchosen point for determinism.
        for (std::size_t p = 0; p < n; ++p) {
          if (!chosen[p]) {
            pick = p;
            break;
          }
        }
      }
      set_centroid(c, pick);
      chosen[pick] = true;
      for (std::size_t p = 0; p < n; ++p) {
        best_sq[p] = std::min(best_sq[p],
                              squared_distance(table.vec(rows[p]), index.centroid(c)));
      }
    }
  }

  std::vector<std::uint32_t> assign(n, 0);
  std::vector<std::uint32_t> prev_assign;
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    // Assignment step.
    double inertia = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double sq = 0.0;
      assign[p] = static_cast<std::uint32_t>(
          nearest_centroid(table.vec(rows[p]), index.centroids, k, dim, &sq));
      inertia += sq;
    }
    index.inertia_history.push_back(inertia);
    index.inertia = inertia;
    if (!prev_assign.empty() && prev_assign == assign) break;
    prev_assign = assign;
    // Stop on budget right after an assignment pass so the returned
    // assignments and inertia always match the current centroids.
    if (iter + 1 == max_iters) break;

    // Update step: centroids move to cluster means.
    std::vector<double> sums(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto v = table.vec(rows[p]);
      double* dst = sums.data() + assign[p] * dim;
      for (std::size_t d = 0; d < dim; ++d) dst[d] += v[d];
      ++counts[assign[p]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t d = 0; d < dim; ++d) {
        index.centroids[c * dim + d] = static_cast<float>(sums[c * dim + d] * inv);
      }
    }

    // Empty-cluster repair: reseed to the point farthest from its centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t farthest = n;
      double far_sq = -1.0;
      for (std::size_t p = 0; p < n; ++p) {
        if (counts[assign[p]] <= 1) continue;  // do not empty another cluster
        const double sq =
            squared_distance(table.vec(rows[p]), index.centroid(assign[p]));
        if (sq > far_sq) {
          far_sq = sq;
          farthest = p;
        }
      }
      if (farthest == n) continue;  // degenerate; leave centroid in place
      --counts[assign[farthest]];
      set_centroid(c, farthest);
      assign[farthest] = static_cast<std::uint32_t>(c);
      counts[c] = 1;
      prev_assign.clear();  // force at least one more assignment pass
    }
  }

  index.assignments.reserve(n);
  for (std::size_t p = 0; p < n; ++p) {
    index.assignments.emplace_back(ids[p], assign[p]);
  }
  index.rebuild_postings();
  return index;
}

}  // namespace

ClusterIndex kmeans_fit(const EmbeddingTable& table, std::span<const std::string> ids,
                        std::size_t k_clusters, std::size_t max_iters, std::uint64_t seed,
                        std::size_t n_init) {
  if (n_init == 0) raise(ErrorKind::Invalid, "n_init must be >= 1");
  ClusterIndex best;
  for (std::size_t run = 0; run < n_init; ++run) {
    const std::uint64_t run_seed = run == 0 ? seed : mix64(seed ^ (0xb5297a4dULL + run));
    ClusterIndex candidate = kmeans_single(table, ids, k_clusters, max_iters, run_seed);
    if (run == 0 || candidate.inertia < best.inertia) best = std::move(candidate);
    if (best.inertia == 0.0) break;
  }
  best.seed = seed;  // the serialized contract carries the caller's seed
  return best;
}

namespace {

RetrievalResult rank_candidates(std::span<const float> query,
                                const EmbeddingTable& table,
                                std::vector<std::size_t> candidate_rows,
                                std::size_t M) {
  std::vector<Neighbor> neighbors;
  neighbors.reserve(candidate_rows.size());
  for (std::size_t row : candidate_rows) {
    neighbors.push_back({table.id(row), distance(query, table.vec(row))});
  }
  std::sort(neighbors.begin(), neighbors.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  });
  if (neighbors.size() > M) neighbors.resize(M);
  return {std::move(neighbors), M};
}

}  // namespace

RetrievalResult retrieve_topM(std::span<const float> query, const ClusterIndex& index,
                              const EmbeddingTable& table, std::size_t M,
                              std::size_t nprobe) {
  if (query.size() != index.dim || index.dim != table.dim()) {
    raise(ErrorKind::Invalid, "retrieve_topM: dimension mismatch");
  }
  if (M == 0) raise(ErrorKind::Invalid, "retrieve_topM: M must be >= 1");
  if (nprobe == 0 || nprobe > index.k()) {
    raise(ErrorKind::Invalid, "retrieve_topM: nprobe must be in [1, k_clusters]");
  }
  if (index.postings.size() != index.k()) {
    raise(ErrorKind::Internal, "retrieve_topM: posting lists not built");
  }

  // Rank centroids by distance to the query, probe the closest nprobe.
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(index.k());
  for (std::size_t c = 0; c < index.k(); ++c) {
    order.emplace_back(squared_distance(query, index.centroid(c)), c);
  }
  std::sort(order.begin(), order.end());

  std::vector<std::size_t> candidate_rows;
  for (std::size_t i = 0; i < nprobe; ++i) {
    for (std::uint32_t assignment_row : index.postings[order[i].second]) {
      const std::string& id = index.assignments[assignment_row].first;
      const auto row = table.find(id);
      if (!row) raise(ErrorKind::Invalid, "embedding table is missing id '" + id + "'");
      candidate_rows.push_back(*row);
    }
  }
  if (candidate_rows.empty()) {
    raise(ErrorKind::Invalid,
          "retrieve_topM: probed clusters are empty, increase nprobe");
  }
  return rank_candidates(query, table, std::move(candidate_rows), M);
}

RetrievalResult brute_force_topM(std::span<const float> query,
                                 const EmbeddingTable& table, std::size_t M) {
  if (query.size() != table.dim()) {
    raise(ErrorKind::Invalid, "brute_force_topM: dimension mismatch");
  }
  if (M == 0) raise(ErrorKind::Invalid, "brute_force_topM: M must be >= 1");
  std::vector<std::size_t> rows(table.size());
  for (std::size_t row = 0; row < table.size(); ++row) rows[row] = row;
  return rank_candidates(query, table, std::move(rows), M);
}

void save_index(const ClusterIndex& index, const std::filesystem::path& path) {
  nlohmann::json out;
  out["version"] = ClusterIndex::kVersion;
  out["dim"] = index.dim;
  out["k"] = index.k();
  out["seed"] = index.seed;
  out["inertia"] = index.inertia;
  auto& centroids = out["centroids"] = nlohmann::json::array();
  for (std::size_t c = 0; c < index.k(); ++c) {
    nlohmann::json row = nlohmann::json::array();
    for (float v : index.centroid(c)) row.push_back(v);
    centroids.push_back(std::move(row));
  }
  auto& assignments = out["assignments"] = nlohmann::json::array();
  for (const auto& [id, cluster] : index.assignments) {
    assignments.push_back({id, cluster});
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) raise(ErrorKind::Io, "cannot write index file: " + path.string());
  file << out.dump() << '\n';
  if (!file) raise(ErrorKind::Io, "failed writing index file: " + path.string());
}

ClusterIndex load_index(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) raise(ErrorKind::Io, "cannot open index file: " + path.string());
  nlohmann::json in = nlohmann::json::parse(file, nullptr, false);
  if (in.is_discarded() || !in.is_object()) {
    raise(ErrorKind::Parse, path.string() + ": corrupt index file");
  }
  try {
    if (in.at("version").get<std::uint32_t>() != ClusterIndex::kVersion) {
      raise(ErrorKind::Parse, path.string() + ": unsupported index version");
    }
    ClusterIndex index;
    index.dim = in.at("dim").get<std::size_t>();
    index.seed = in.at("seed").get<std::uint64_t>();
    index.inertia = in.at("inertia").get<double>();
    const std::size_t k = in.at("k").get<std::size_t>();
    index.centroids.reserve(k * index.dim);
    for (const auto& row : in.at("centroids")) {
      if (row.size() != index.dim) {
        raise(ErrorKind::Parse, path.string() + ": centroid dimension mismatch");
      }
      for (const auto& v : row) index.centroids.push_back(v.get<float>());
    }
    if (index.k() != k) {
      raise(ErrorKind::Parse, path.string() + ": centroid count mismatch");
    }
    for (const auto& entry : in.at("assignments")) {
      const auto cluster = entry.at(1).get<std::uint32_t>();
      if (cluster >= k) raise(ErrorKind::Parse, path.string() + ": assignment out of range");
      index.assignments.emplace_back(entry.at(0).get<std::string>(), cluster);
    }
    index.rebuild_postings();
    return index;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::Parse, path.string() + ": corrupt index file: " + e.what());
  }
}

}  // namespace promptloom
