#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "promptloom/corpus.hpp"
#include "promptloom/error.hpp"
#include "test_util.hpp"

using namespace promptloom;

TEST_CASE("ingest builds a corpus with generated ids in file order") {
  TempDir dir;
  write_file(dir.file("train.jsonl"),
             "{\"text\":\"a dog barks\"}\n{\"text\":\"rain on a tin roof\"}\n");
  const Corpus corpus = ingest(dir.file("train.jsonl"), Source::Train);
  REQUIRE(corpus.size() == 2);
  CHECK(corpus.train_count() == 2);
  CHECK(corpus.user_count() == 0);
  CHECK(corpus.prompts()[0].id == "t0");
  CHECK(corpus.prompts()[1].id == "t1");
  CHECK(corpus.prompts()[0].text == "a dog barks");
}

TEST_CASE("ingest reports malformed and empty lines with line numbers") {
  TempDir dir;
  SUBCASE("empty text") {
    write_file(dir.file("bad.jsonl"), "{\"text\":\"ok\"}\n{\"text\":\"  \"}\n");
    CHECK_THROWS_WITH_AS(ingest(dir.file("bad.jsonl"), Source::Train),
                         doctest::Contains(":2:"), Error);
  }
  SUBCASE("malformed json") {
    write_file(dir.file("bad.jsonl"), "{\"text\":\"ok\"}\nnot json\n");
    CHECK_THROWS_WITH_AS(ingest(dir.file("bad.jsonl"), Source::Train),
                         doctest::Contains(":2:"), Error);
  }
  SUBCASE("missing text field") {
    write_file(dir.file("bad.jsonl"), "{\"id\":\"x\"}\n");
    CHECK_THROWS_AS(ingest(dir.file("bad.jsonl"), Source::Train), Error);
  }
  SUBCASE("empty file") {
    write_file(dir.file("empty.jsonl"), "");
    CHECK_THROWS_AS(ingest(dir.file("empty.jsonl"), Source::Train), Error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(ingest(dir.file("nope.jsonl"), Source::Train), Error);
  }
}

TEST_CASE("ingest keeps explicit ids and meta, rejects duplicates") {
  TempDir dir;
  write_file(dir.file("in.jsonl"),
             "{\"id\":\"a\",\"text\":\"one\",\"meta\":{\"lang\":\"en\"}}\n"
             "{\"text\":\"two\"}\n");
  const Corpus corpus = ingest(dir.file("in.jsonl"), Source::User);
  CHECK(corpus.prompts()[0].id == "a");
  CHECK(corpus.prompts()[0].meta.at("lang") == "en");
  CHECK(corpus.prompts()[1].id == "u1");

  write_file(dir.file("dup.jsonl"),
             "{\"id\":\"a\",\"text\":\"one\"}\n{\"id\":\"a\",\"text\":\"two\"}\n");
  CHECK_THROWS_WITH_AS(ingest(dir.file("dup.jsonl"), Source::Train),
                       doctest::Contains("duplicate"), Error);
}

TEST_CASE("ingest → save → ingest round-trips to an identical corpus") {
  TempDir dir;
  write_file(dir.file("raw.jsonl"),
             "{\"text\":\"a dog barks\"}\n"
             "{\"id\":\"keep\",\"text\":\"thunder rolls\",\"meta\":{\"k\":\"v\"}}\n");
  const Corpus first = ingest(dir.file("raw.jsonl"), Source::Train);
  save_corpus(first, dir.file("saved.jsonl"));
  const Corpus second = ingest(dir.file("saved.jsonl"), Source::Train);
  // Oracle: compare canonical serialized bytes.
  CHECK(serialize_corpus(first) == serialize_corpus(second));
}

TEST_CASE("save/load round-trip is byte-identical") {
  TempDir dir;
  write_file(dir.file("train.jsonl"), "{\"text\":\"a dog barks\"}\n");
  write_file(dir.file("user.jsonl"), "{\"text\":\"doggy sound\"}\n");
  Corpus corpus = ingest(dir.file("train.jsonl"), Source::Train);
  corpus.extend(ingest(dir.file("user.jsonl"), Source::User));

  save_corpus(corpus, dir.file("c1.jsonl"));
  const Corpus loaded = load_corpus(dir.file("c1.jsonl"));
  CHECK(loaded.train_count() == 1);
  CHECK(loaded.user_count() == 1);
  save_corpus(loaded, dir.file("c2.jsonl"));
  CHECK(read_file(dir.file("c1.jsonl")) == read_file(dir.file("c2.jsonl")));
}

TEST_CASE("canonical load requires the source field") {
  TempDir dir;
  write_file(dir.file("raw.jsonl"), "{\"id\":\"a\",\"text\":\"no source here\"}\n");
  CHECK_THROWS_WITH_AS(load_corpus(dir.file("raw.jsonl")), doctest::Contains("source"),
                       Error);
}

TEST_CASE("tokenize applies lowercase, whitespace split, edge punctuation strip") {
  CHECK(tokenize("A dog barks.") == TokenSequence{"a", "dog", "barks"});
  CHECK(tokenize("") == TokenSequence{});
  CHECK(tokenize("Dog,  dog!") == TokenSequence{"dog", "dog"});
  CHECK(tokenize("  \t\n ") == TokenSequence{});
  CHECK(tokenize("don't stop") == TokenSequence{"don't", "stop"});
  CHECK(tokenize("--- ---") == TokenSequence{});
  // Unicode whitespace (no-break space, ideographic space) splits too.
  CHECK(tokenize("a\xc2\xa0" "快\xe3\x80\x80" "b") == TokenSequence{"a", "快", "b"});
}

TEST_CASE("tokenize is idempotent on its own joined output") {
  const std::vector<std::string> samples = {
      "A dog barks.", "Dog,  dog!", "thunder; and LIGHTNING...", "(a) [b] {c}",
      "mixed\tseparators\nhere", "don't re-tokenize 'quoted'"};
  for (const auto& text : samples) {
    const TokenSequence once = tokenize(text);
    std::string joined;
    for (const auto& t : once) {
      if (!joined.empty()) joined += ' ';
      joined += t;
    }
    CHECK(tokenize(joined) == once);
  }
}

TEST_CASE("word_ngrams enumerates windows and collapses duplicates") {
  CHECK(word_ngrams({"a", "dog", "barks"}, 2).items ==
        std::unordered_set<std::string>{"a dog", "dog barks"});
  CHECK(word_ngrams({"a"}, 2).empty());
  // Hand enumeration: windows "a b","b a","a b" collapse to two members.
  CHECK(word_ngrams({"a", "b", "a", "b"}, 2).items ==
        std::unordered_set<std::string>{"a b", "b a"});
  CHECK_THROWS_AS(word_ngrams({"a"}, 0), Error);
}

TEST_CASE("word_ngrams size bound holds for arbitrary inputs") {
  for (std::size_t len = 0; len <= 6; ++len) {
    TokenSequence tokens;
    for (std::size_t i = 0; i < len; ++i) tokens.push_back("w" + std::to_string(i % 3));
    for (std::size_t n = 1; n <= 4; ++n) {
      const std::size_t bound = tokens.size() >= n ? tokens.size() - n + 1 : 0;
      CHECK(word_ngrams(tokens, n).size() <= bound);
    }
  }
}
