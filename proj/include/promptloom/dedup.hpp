#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "promptloom/corpus.hpp"

namespace promptloom {

struct MinHashSignature {
  std::vector<std::uint64_t> values;  // length = num_hashes
  std::uint64_t seed = 0;

  std::size_t size() const { return values.size(); }
};

// values[i] = min over members of hash_i(member), where hash_i is the seeded
// base hash salted per position. Deterministic; empty sets are rejected.
MinHashSignature minhash_signature(const NgramSet& set, std::size_t num_hashes,
                                   std::uint64_t seed);

// |a ∩ b| / |a ∪ b|. Both sets empty is undefined and rejected.
double exact_jaccard(const NgramSet& a, const NgramSet& b);

// Fraction of agreeing signature positions. Signatures must share length
// and seed.
double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);

// LSH banding: a pair (i, j), i < j, is emitted iff the two signatures agree
// on every row of at least one band. bands * rows must equal the signature
// length. Result is sorted and free of self-pairs.
std::vector<std::pair<std::size_t, std::size_t>> lsh_candidates(
    std::span<const MinHashSignature> signatures, std::size_t bands, std::size_t rows);

struct DedupParams {
  std::size_t num_hashes = 128;
  std::size_t bands = 16;
  std::size_t rows = 8;
  double threshold = 0.8;
  std::size_t ngram_n = 3;
  // Re-confirm candidate pairs with exact Jaccard instead of the sketch
  // estimate before removing.
  bool exact_confirm = false;
  std::uint64_t seed = 0;
};

struct RemovedPair {
  std::string kept_id;
  std::string removed_id;
  double jaccard = 0.0;
};

struct DedupReport {
  Corpus kept;
  std::vector<RemovedPair> removed_pairs;
};

// Word n-grams with a short-text fallback: texts with fewer than n tokens
// shingle at the largest order that yields a non-empty set, so near-identical
// short prompts still collide. Zero-token texts produce the empty set.
NgramSet shingle_set(const TokenSequence& tokens, std::size_t n);

// Removes near-duplicate train prompts: every LSH candidate pair whose
// confirmed similarity exceeds the threshold drops the later-ordered prompt.
// Removed prompts cannot cause further removals. User prompts pass through.
DedupReport deduplicate(const Corpus& corpus, const DedupParams& params);

// {"kept_ids":[...], "removed":[{"kept":..,"removed":..,"jaccard":..}]}
std::string dedup_report_to_json(const DedupReport& report);

}  // namespace promptloom
