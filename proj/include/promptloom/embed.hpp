#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace promptloom {

using EmbeddingVector = std::vector<float>;

// Fixed-dimension embedding store keyed by prompt id, kept in insertion
// order. Vectors are L2-normalized unless added with normalize=false.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim);

  void add(std::string id, EmbeddingVector vec, bool normalize = true);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::size_t row) const { return ids_[row]; }
  std::span<const float> vec(std::size_t row) const;
  std::optional<std::size_t> find(std::string_view id) const;

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<float> data_;  // flat, size() * dim_
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Text embedding file format, bit-exact:
//   EMB1 <dim> <count>\n
//   <id>\t<f32 f32 ... f32>\n   (count lines, ASCII decimal floats)
// Vectors are dimension-checked against expected_dim and L2-normalized on
// load; already-unit vectors are left untouched so load∘save is identity.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::size_t expected_dim);
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

// Deterministic fallback embedder: hashed uni+bigram counts folded into dim
// buckets with ±1 signed hashing, L2-normalized. Rejects texts that are
// empty after tokenization.
EmbeddingVector hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

class Corpus;  // corpus.hpp

// hash_embed applied to every prompt in the corpus, keyed by prompt id.
EmbeddingTable hash_embed_corpus(const Corpus& corpus, std::size_t dim,
                                 std::uint64_t seed);

// Euclidean distance; on unit vectors this is monotone with cosine distance.
double distance(std::span<const float> a, std::span<const float> b);

// In-place L2 normalization. Vectors already within 1e-6 of unit norm are
// left untouched (keeps save/load round-trips bitwise stable). Zero vectors
// are rejected.
void normalize(EmbeddingVector& v);

}  // namespace promptloom
