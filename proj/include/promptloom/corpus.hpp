#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace promptloom {

enum class Source { Train, User };

const char* source_name(Source s);
Source source_from_name(std::string_view name);

struct Prompt {
  std::string id;
  std::string text;
  Source source = Source::Train;
  std::map<std::string, std::string> meta;
};

// Ordered prompt collection holding both pools; ids are unique and texts are
// non-empty after whitespace trim. Immutable once built (readers may share).
class Corpus {
 public:
  // Validates the prompt invariants and id uniqueness.
  void add(Prompt p);
  void extend(const Corpus& other);

  const std::vector<Prompt>& prompts() const { return prompts_; }
  std::size_t size() const { return prompts_.size(); }
  std::size_t train_count() const { return train_count_; }
  std::size_t user_count() const { return user_count_; }

  const Prompt* find(std::string_view id) const;

  std::vector<const Prompt*> by_source(Source s) const;
  std::vector<std::string> texts(Source s) const;

 private:
  std::vector<Prompt> prompts_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::size_t train_count_ = 0;
  std::size_t user_count_ = 0;
};

// Reads a raw JSONL file (one object per line, required "text", optional
// "id" and "meta") and stamps every prompt with the given source. Missing
// ids are generated sequentially: "t<ordinal>" for train, "u<ordinal>" for
// user, following file order. Malformed lines fail with their line number.
Corpus ingest(const std::filesystem::path& path, Source source);

// Canonical persistence: JSONL with "id", "source", "text" and, when
// non-empty, "meta" on every line. save followed by load is the identity and
// re-saving is byte-identical.
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(const Corpus& corpus);

using TokenSequence = std::vector<std::string>;

// Lowercases (ASCII), splits on Unicode whitespace, strips leading/trailing
// ASCII punctuation from each token and drops empties. Idempotent on its own
// space-joined output.
TokenSequence tokenize(std::string_view text);

struct NgramSet {
  std::unordered_set<std::string> items;

  bool empty() const { return items.empty(); }
  std::size_t size() const { return items.size(); }
};

// All contiguous n-token windows joined by single spaces, duplicates
// collapsed. Empty set when fewer than n tokens. n must be >= 1.
NgramSet word_ngrams(const TokenSequence& tokens, std::size_t n);

}  // namespace promptloom
