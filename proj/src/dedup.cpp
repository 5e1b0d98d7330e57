#include "promptloom/dedup.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <set>

#include "json.hpp"
#include "promptloom/error.hpp"
#include "promptloom/hashing.hpp"

namespace promptloom {

MinHashSignature minhash_signature(const NgramSet& set, std::size_t num_hashes,
                                   std::uint64_t seed) {
  if (set.empty()) raise(ErrorKind::Invalid, "minhash of an empty set is undefined");
  if (num_hashes == 0) raise(ErrorKind::Invalid, "num_hashes must be >= 1");

  // Per-position salts drawn once from the seed; hash_i(x) = mix64(H(x) ^ salt_i).
  std::vector<std::uint64_t> salts(num_hashes);
  Rng rng(seed);
  for (auto& s : salts) s = rng.next();

  MinHashSignature sig;
  sig.seed = seed;
  sig.values.assign(num_hashes, std::numeric_limits<std::uint64_t>::max());
  for (const std::string& member : set.items) {
    const std::uint64_t base = hash64(member, seed);
    for (std::size_t i = 0; i < num_hashes; ++i) {
      const std::uint64_t h = mix64(base ^ salts[i]);
      if (h < sig.values[i]) sig.values[i] = h;
    }
  }
  return sig;
}

double exact_jaccard(const NgramSet& a, const NgramSet& b) {
  if (a.empty() && b.empty()) {
    raise(ErrorKind::Invalid, "jaccard of two empty sets is undefined");
  }
  const NgramSet& small = a.size() <= b.size() ? a : b;
  const NgramSet& large = a.size() <= b.size() ? b : a;
  std::size_t intersection = 0;
  for (const std::string& item : small.items) {
    if (large.items.count(item)) ++intersection;
  }
  const std::size_t unions = a.size() + b.size() - intersection;
  return static_cast<double>(intersection) / static_cast<double>(unions);
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
  if (a.size() != b.size() || a.size() == 0) {
    raise(ErrorKind::Invalid, "signature length mismatch");
  }
  if (a.seed != b.seed) raise(ErrorKind::Invalid, "signature seed mismatch");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.values[i] == b.values[i]) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(a.size());
}

std::vector<std::pair<std::size_t, std::size_t>> lsh_candidates(
    std::span<const MinHashSignature> signatures, std::size_t bands, std::size_t rows) {
  if (bands == 0 || rows == 0) raise(ErrorKind::Invalid, "bands and rows must be >= 1");
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  if (signatures.empty()) return {};
  const std::size_t num_hashes = signatures[0].size();
  if (bands * rows != num_hashes) {
    raise(ErrorKind::Invalid, "bands * rows must equal the signature length");
  }

  std::vector<std::unordered_map<std::uint64_t, std::vector<std::size_t>>> buckets(bands);
  for (std::size_t idx = 0; idx < signatures.size(); ++idx) {
    const MinHashSignature& sig = signatures[idx];
    if (sig.size() != num_hashes) {
      raise(ErrorKind::Invalid, "signature length mismatch in lsh_candidates");
    }
    for (std::size_t b = 0; b < bands; ++b) {
      const char* data = reinterpret_cast<const char*>(sig.values.data() + b * rows);
      const std::uint64_t key = hash64({data, rows * sizeof(std::uint64_t)}, b);
      buckets[b][key].push_back(idx);
    }
  }
  for (std::size_t b = 0; b < bands; ++b) {
    for (const auto& [key, members] : buckets[b]) {
      for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
          auto lo = members[i];
          auto hi = members[j];
          if (lo > hi) std::swap(lo, hi);
          // Band-key collisions of unequal rows are possible in principle;
          // confirm the band actually agrees before emitting.
          const auto& sa = signatures[lo].values;
          const auto& sb = signatures[hi].values;
          if (std::memcmp(sa.data() + b * rows, sb.data() + b * rows,
                          rows * sizeof(std::uint64_t)) == 0) {
            pairs.emplace(lo, hi);
          }
        }
      }
    }
  }
  return {pairs.begin(), pairs.end()};
}

NgramSet shingle_set(const TokenSequence& tokens, std::size_t n) {
  if (n == 0) raise(ErrorKind::Invalid, "n-gram order must be >= 1");
  if (tokens.empty()) return {};
  const std::size_t order = std::min(n, tokens.size());
  return word_ngrams(tokens, order);
}

DedupReport deduplicate(const Corpus& corpus, const DedupParams& params) {
  if (corpus.train_count() == 0) {
    raise(ErrorKind::Invalid, "deduplicate requires at least one train prompt");
  }
  if (!(params.threshold > 0.0 && params.threshold < 1.0)) {
    raise(ErrorKind::Invalid, "dedup threshold must be in (0, 1)");
  }

  // Sketch the train prompts; prompts whose texts produce no shingles cannot
  // be compared and are kept unconditionally.
  struct Entry {
    std::size_t corpus_pos;
    NgramSet shingles;
    MinHashSignature sig;
  };
  std::vector<Entry> entries;
  const auto& prompts = corpus.prompts();
  for (std::size_t pos = 0; pos < prompts.size(); ++pos) {
    if (prompts[pos].source != Source::Train) continue;
    NgramSet shingles = shingle_set(tokenize(prompts[pos].text), params.ngram_n);
    if (shingles.empty()) continue;
    MinHashSignature sig = minhash_signature(shingles, params.num_hashes, params.seed);
    entries.push_back({pos, std::move(shingles), std::move(sig)});
  }

  std::vector<MinHashSignature> sigs;
  sigs.reserve(entries.size());
  for (const Entry& e : entries) sigs.push_back(e.sig);
  const auto candidates = lsh_candidates(sigs, params.bands, params.rows);

  // partners[j] lists candidate partners i < j in ascending order.
  std::vector<std::vector<std::size_t>> partners(entries.size());
  for (const auto& [i, j] : candidates) partners[j].push_back(i);

  std::vector<bool> removed(entries.size(), false);
  DedupReport report;
  for (std::size_t j = 0; j < entries.size(); ++j) {
    for (std::size_t i : partners[j]) {
      if (removed[i]) continue;
      const double jac = params.exact_confirm
                             ? exact_jaccard(entries[i].shingles, entries[j].shingles)
                             : estimate_jaccard(entries[i].sig, entries[j].sig);
      if (jac > params.threshold) {
        removed[j] = true;
        report.removed_pairs.push_back({prompts[entries[i].corpus_pos].id,
                                        prompts[entries[j].corpus_pos].id, jac});
        break;
      }
    }
  }

  std::vector<bool> drop(prompts.size(), false);
  for (std::size_t e = 0; e < entries.size(); ++e) {
    if (removed[e]) drop[entries[e].corpus_pos] = true;
  }
  for (std::size_t pos = 0; pos < prompts.size(); ++pos) {
    if (!drop[pos]) report.kept.add(prompts[pos]);
  }
  return report;
}

std::string dedup_report_to_json(const DedupReport& report) {
  nlohmann::json out;
  auto& kept_ids = out["kept_ids"] = nlohmann::json::array();
  for (const Prompt& p : report.kept.prompts()) kept_ids.push_back(p.id);
  auto& removed = out["removed"] = nlohmann::json::array();
  for (const RemovedPair& pair : report.removed_pairs) {
    removed.push_back({{"kept", pair.kept_id},
                       {"removed", pair.removed_id},
                       {"jaccard", pair.jaccard}});
  }
  return out.dump();
}

}  // namespace promptloom
