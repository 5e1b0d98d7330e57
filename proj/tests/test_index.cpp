#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "promptloom/cluster_index.hpp"
#include "promptloom/error.hpp"
#include "promptloom/hashing.hpp"
#include "test_util.hpp"

using namespace promptloom;

namespace {

EmbeddingTable random_table(std::size_t count, std::size_t dim, std::uint64_t seed,
                            bool unit = true) {
  EmbeddingTable table(dim);
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    EmbeddingVector v(dim);
    for (float& x : v) x = static_cast<float>(rng.gaussian());
    if (unit) normalize(v);
    table.add("v" + std::to_string(i), std::move(v), false);
  }
  return table;
}

// Two well-separated blobs around ±center.
EmbeddingTable blob_table(std::size_t per_blob, std::size_t dim, std::uint64_t seed,
                          std::vector<std::vector<double>>* points_out = nullptr) {
  EmbeddingTable table(dim);
  Rng rng(seed);
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    const double center = i < per_blob ? 4.0 : -4.0;
    EmbeddingVector v(dim);
    std::vector<double> p(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      p[d] = center + 0.3 * rng.gaussian();
      v[d] = static_cast<float>(p[d]);
    }
    // Store the float-rounded coordinates so the oracle sees the same data.
    for (std::size_t d = 0; d < dim; ++d) p[d] = v[d];
    if (points_out) points_out->push_back(p);
    table.add("b" + std::to_string(i), std::move(v), false);
  }
  return table;
}

std::vector<std::string> result_ids(const RetrievalResult& r) {
  std::vector<std::string> ids;
  for (const Neighbor& n : r.neighbors) ids.push_back(n.id);
  return ids;
}

}  // namespace

TEST_CASE("kmeans separates two blobs and matches the brute-force optimum") {
  std::vector<std::vector<double>> points;
  const EmbeddingTable table = blob_table(5, 3, 71, &points);
  const ClusterIndex index = kmeans_fit(table, 2, 25, 7);

  // Each blob lands in one cluster.
  const std::uint32_t first = index.assignments[0].second;
  for (std::size_t i = 0; i < 5; ++i) CHECK(index.assignments[i].second == first);
  for (std::size_t i = 5; i < 10; ++i) CHECK(index.assignments[i].second == 1 - first);

  // Inertia equals the enumerated global optimum (within fp tolerance).
  const double best = oracle::best_two_means_inertia(points);
  CHECK(index.inertia == doctest::Approx(best).epsilon(1e-6));
}

TEST_CASE("kmeans with k = n drives inertia to zero") {
  const EmbeddingTable table = random_table(6, 4, 3);
  const ClusterIndex index = kmeans_fit(table, 6, 10, 1);
  CHECK(index.inertia == doctest::Approx(0.0));
}

TEST_CASE("kmeans is deterministic for fixed seed and rejects bad k") {
  const EmbeddingTable table = random_table(20, 8, 5);
  const ClusterIndex a = kmeans_fit(table, 4, 25, 9);
  const ClusterIndex b = kmeans_fit(table, 4, 25, 9);
  CHECK(a.centroids == b.centroids);
  CHECK(a.assignments == b.assignments);
  CHECK(a.inertia == b.inertia);

  CHECK_THROWS_AS(kmeans_fit(table, 21, 25, 9), Error);
  CHECK_THROWS_AS(kmeans_fit(table, 0, 25, 9), Error);
}

TEST_CASE("inertia is non-increasing across Lloyd iterations") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const EmbeddingTable table = random_table(40, 6, seed + 1000, false);
    const ClusterIndex index = kmeans_fit(table, 5, 30, seed);
    REQUIRE(!index.inertia_history.empty());
    for (std::size_t i = 1; i < index.inertia_history.size(); ++i) {
      CHECK(index.inertia_history[i] <= index.inertia_history[i - 1] + 1e-9);
    }
  }
}

TEST_CASE("at convergence no point prefers another centroid") {
  const EmbeddingTable table = random_table(60, 5, 123, false);
  const ClusterIndex index = kmeans_fit(table, 6, 100, 4);
  for (const auto& [id, cluster] : index.assignments) {
    const auto row = table.find(id).value();
    const double assigned = distance(table.vec(row), index.centroid(cluster));
    for (std::size_t c = 0; c < index.k(); ++c) {
      CHECK(assigned <= distance(table.vec(row), index.centroid(c)) + 1e-9);
    }
  }
}

TEST_CASE("brute_force_topM ordering and truncation") {
  const EmbeddingTable table = random_table(1, 4, 2);
  const RetrievalResult single = brute_force_topM(table.vec(0), table, 10);
  REQUIRE(single.size() == 1);
  CHECK(single.neighbors[0].id == "v0");

  const EmbeddingTable more = random_table(200, 8, 77);
  const EmbeddingVector query = hash_embed("some query text", 8, 1);
  const RetrievalResult all = brute_force_topM(query, more, 500);
  CHECK(all.size() == 200);  // M larger than the table returns everything
  // Ordering oracle: independent re-sort of the (distance, id) pairs.
  auto sorted = all.neighbors;
  std::sort(sorted.begin(), sorted.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    CHECK(sorted[i].id == all.neighbors[i].id);
  }
  for (std::size_t i = 1; i < all.size(); ++i) {
    CHECK(all.neighbors[i - 1].distance <= all.neighbors[i].distance);
  }
}

TEST_CASE("self-retrieval returns the stored vector first at distance 0") {
  const EmbeddingTable table = random_table(50, 16, 8);
  const ClusterIndex index = kmeans_fit(table, 7, 25, 3);
  const RetrievalResult hits = retrieve_topM(table.vec(13), index, table, 5, 7);
  REQUIRE(hits.size() == 5);
  CHECK(hits.neighbors[0].id == "v13");
  CHECK(hits.neighbors[0].distance == 0.0);
}

TEST_CASE("retrieve_topM with nprobe = k equals brute force exactly") {
  const EmbeddingTable table = random_table(500, 24, 15);
  const ClusterIndex index = kmeans_fit(table, 22, 25, 5);
  Rng rng(2);
  for (int q = 0; q < 20; ++q) {
    EmbeddingVector query(24);
    for (float& x : query) x = static_cast<float>(rng.gaussian());
    normalize(query);
    for (const std::size_t M : {1u, 10u, 50u}) {
      const auto approx = retrieve_topM(query, index, table, M, index.k());
      const auto exact = brute_force_topM(query, table, M);
      CHECK(result_ids(approx) == result_ids(exact));
    }
  }
  // Exhaustive: every stored vector as a query.
  std::size_t mismatches = 0;
  for (std::size_t row = 0; row < table.size(); ++row) {
    const auto approx = result_ids(retrieve_topM(table.vec(row), index, table, 10, index.k()));
    const auto exact = result_ids(brute_force_topM(table.vec(row), table, 10));
    if (approx != exact) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("retrieve_topM validates inputs and reports empty pools") {
  const EmbeddingTable table = random_table(10, 4, 5);
  const ClusterIndex index = kmeans_fit(table, 3, 25, 5);
  EmbeddingVector query(4, 0.5f);
  CHECK_THROWS_AS(retrieve_topM(query, index, table, 5, 0), Error);
  CHECK_THROWS_AS(retrieve_topM(query, index, table, 5, 4), Error);  // nprobe > k
  EmbeddingVector wrong_dim(3, 0.5f);
  CHECK_THROWS_AS(retrieve_topM(wrong_dim, index, table, 5, 2), Error);
}

TEST_CASE("clustered data reaches high recall with few probes") {
  // 20 tight blobs of 50 points; queries perturb stored points.
  const std::size_t dim = 32;
  EmbeddingTable table(dim);
  Rng rng(99);
  std::vector<EmbeddingVector> centers;
  for (int c = 0; c < 20; ++c) {
    EmbeddingVector center(dim);
    for (float& x : center) x = static_cast<float>(rng.gaussian());
    normalize(center);
    centers.push_back(center);
  }
  for (int i = 0; i < 1000; ++i) {
    const EmbeddingVector& center = centers[i % 20];
    EmbeddingVector v(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      v[d] = center[d] + 0.05f * static_cast<float>(rng.gaussian());
    }
    normalize(v);
    table.add("c" + std::to_string(i), std::move(v), false);
  }
  const ClusterIndex index = kmeans_fit(table, 32, 25, 17);

  double recall_sum = 0.0;
  const int queries = 50;
  for (int q = 0; q < queries; ++q) {
    const auto base = table.vec(rng.below(table.size()));
    EmbeddingVector query(base.begin(), base.end());
    for (float& x : query) x += 0.02f * static_cast<float>(rng.gaussian());
    normalize(query);
    const auto approx = result_ids(retrieve_topM(query, index, table, 10, 4));
    const auto exact = result_ids(brute_force_topM(query, table, 10));
    std::size_t hit = 0;
    for (const auto& id : approx) {
      if (std::find(exact.begin(), exact.end(), id) != exact.end()) ++hit;
    }
    recall_sum += static_cast<double>(hit) / 10.0;
  }
  CHECK(recall_sum / queries >= 0.9);
}

TEST_CASE("index save/load round-trip") {
  TempDir dir;
  const EmbeddingTable table = random_table(30, 6, 44);
  const ClusterIndex index = kmeans_fit(table, 5, 25, 21);
  save_index(index, dir.file("index.json"));
  const ClusterIndex loaded = load_index(dir.file("index.json"));
  CHECK(loaded.dim == index.dim);
  CHECK(loaded.seed == index.seed);
  CHECK(loaded.inertia == index.inertia);
  CHECK(loaded.centroids == index.centroids);
  CHECK(loaded.assignments == index.assignments);

  // Saving twice is byte-identical.
  save_index(index, dir.file("a.json"));
  save_index(loaded, dir.file("b.json"));
  CHECK(read_file(dir.file("a.json")) == read_file(dir.file("b.json")));

  // A loaded index serves queries identically.
  const EmbeddingVector query = hash_embed("query words", 6, 2);
  CHECK(result_ids(retrieve_topM(query, index, table, 5, 3)) ==
        result_ids(retrieve_topM(query, loaded, table, 5, 3)));
}

TEST_CASE("index load rejects corrupt and mismatched files") {
  TempDir dir;
  const EmbeddingTable table = random_table(10, 4, 4);
  const ClusterIndex index = kmeans_fit(table, 2, 10, 1);
  save_index(index, dir.file("good.json"));

  const std::string good = read_file(dir.file("good.json"));
  write_file(dir.file("trunc.json"), good.substr(0, good.size() / 2));
  CHECK_THROWS_AS(load_index(dir.file("trunc.json")), Error);

  std::string wrong_version = good;
  const auto pos = wrong_version.find("\"version\":1");
  REQUIRE(pos != std::string::npos);
  wrong_version.replace(pos, 11, "\"version\":9");
  write_file(dir.file("version.json"), wrong_version);
  CHECK_THROWS_AS(load_index(dir.file("version.json")), Error);

  CHECK_THROWS_AS(load_index(dir.file("missing.json")), Error);
}
