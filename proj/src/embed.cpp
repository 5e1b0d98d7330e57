#include "promptloom/embed.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "promptloom/corpus.hpp"
#include "promptloom/error.hpp"
#include "promptloom/hashing.hpp"

namespace promptloom {

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim < 1) raise(ErrorKind::Invalid, "embedding dim must be >= 1");
}

void EmbeddingTable::add(std::string id, EmbeddingVector vec, bool do_normalize) {
  if (vec.size() != dim_) {
    raise(ErrorKind::Invalid, "embedding for '" + id + "' has dimension " +
                                  std::to_string(vec.size()) + ", expected " +
                                  std::to_string(dim_));
  }
  for (float v : vec) {
    if (!std::isfinite(v)) {
      raise(ErrorKind::Invalid, "embedding for '" + id + "' has non-finite entries");
    }
  }
  if (do_normalize) normalize(vec);
  auto [it, inserted] = by_id_.emplace(id, ids_.size());
  if (!inserted) raise(ErrorKind::Invalid, "duplicate embedding id '" + id + "'");
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), vec.begin(), vec.end());
}

std::span<const float> EmbeddingTable::vec(std::size_t row) const {
  return {data_.data() + row * dim_, dim_};
}

std::optional<std::size_t> EmbeddingTable::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

void normalize(EmbeddingVector& v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * static_cast<double>(x);
  const double norm = std::sqrt(sq);
  if (norm == 0.0) raise(ErrorKind::Invalid, "cannot normalize a zero vector");
  if (std::abs(norm - 1.0) <= 1e-6) return;
  for (float& x : v) x = static_cast<float>(x / norm);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::size_t expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open embedding file: " + path.string());

  std::string header;
  if (!std::getline(in, header)) {
    raise(ErrorKind::Parse, path.string() + ": missing EMB1 header");
  }
  std::istringstream hs(header);
  std::string magic;
  std::size_t dim = 0, count = 0;
  if (!(hs >> magic >> dim >> count) || magic != "EMB1") {
    raise(ErrorKind::Parse, path.string() + ": malformed header, expected 'EMB1 <dim> <count>'");
  }
  if (dim != expected_dim) {
    raise(ErrorKind::Invalid, path.string() + ": file dimension " + std::to_string(dim) +
                                  " does not match expected " + std::to_string(expected_dim));
  }

  EmbeddingTable table(dim);
  std::string line;
  for (std::size_t row = 0; row < count; ++row) {
    if (!std::getline(in, line)) {
      raise(ErrorKind::Parse, path.string() + ": truncated, expected " +
                                  std::to_string(count) + " rows, got " + std::to_string(row));
    }
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      raise(ErrorKind::Parse, path.string() + ": row " + std::to_string(row + 1) +
                                  " is missing the <id>\\t<values> separator");
    }
    std::string id = line.substr(0, tab);
    EmbeddingVector vec;
    vec.reserve(dim);
    const char* p = line.data() + tab + 1;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      float value = 0.0f;
      auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc()) {
        raise(ErrorKind::Parse,
              path.string() + ": row '" + id + "' has a malformed float");
      }
      vec.push_back(value);
      p = next;
    }
    if (vec.size() != dim) {
      raise(ErrorKind::Invalid, path.string() + ": row '" + id + "' has " +
                                    std::to_string(vec.size()) + " values, expected " +
                                    std::to_string(dim));
    }
    table.add(std::move(id), std::move(vec));
  }
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::Io, "cannot write embedding file: " + path.string());
  out << "EMB1 " << table.dim() << ' ' << table.size() << '\n';
  char buf[64];
  for (std::size_t row = 0; row < table.size(); ++row) {
    out << table.id(row) << '\t';
    const auto vec = table.vec(row);
    for (std::size_t i = 0; i < vec.size(); ++i) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), vec[i]);
      if (ec != std::errc()) raise(ErrorKind::Internal, "float formatting failed");
      if (i) out << ' ';
      out.write(buf, end - buf);
    }
    out << '\n';
  }
  if (!out) raise(ErrorKind::Io, "failed writing embedding file: " + path.string());
}

EmbeddingVector hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim < 2) raise(ErrorKind::Invalid, "hash_embed dim must be >= 2");
  const TokenSequence tokens = tokenize(text);
  if (tokens.empty()) {
    raise(ErrorKind::Invalid, "hash_embed: text is empty after tokenization");
  }

  EmbeddingVector vec(dim, 0.0f);
  auto fold = [&](const std::string& gram) {
    const std::uint64_t h = hash64(gram, seed);
    const std::size_t bucket = h % dim;
    // Sign comes from the top bit; the bucket uses the low bits.
    vec[bucket] += (h >> 63) ? 1.0f : -1.0f;
  };
  for (const std::string& t : tokens) fold(t);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    fold(tokens[i] + ' ' + tokens[i + 1]);
  }
  normalize(vec);
  return vec;
}

EmbeddingTable hash_embed_corpus(const Corpus& corpus, std::size_t dim,
                                 std::uint64_t seed) {
  EmbeddingTable table(dim);
  for (const Prompt& p : corpus.prompts()) {
    table.add(p.id, hash_embed(p.text, dim, seed), false);
  }
  return table;
}

double distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) raise(ErrorKind::Invalid, "distance: dimension mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sq += d * d;
  }
  return std::sqrt(sq);
}

}  // namespace promptloom
