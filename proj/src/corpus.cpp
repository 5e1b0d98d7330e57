#include "promptloom/corpus.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "promptloom/error.hpp"

namespace promptloom {

using nlohmann::json;

const char* source_name(Source s) {
  return s == Source::Train ? "train" : "user";
}

Source source_from_name(std::string_view name) {
  if (name == "train") return Source::Train;
  if (name == "user") return Source::User;
  raise(ErrorKind::Invalid, "unknown source '" + std::string(name) + "' (expected train|user)");
}

namespace {

bool is_blank(std::string_view s) {
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

void Corpus::add(Prompt p) {
  if (p.id.empty()) raise(ErrorKind::Invalid, "prompt id must be non-empty");
  if (is_blank(p.text)) {
    raise(ErrorKind::Invalid, "prompt '" + p.id + "' has empty text");
  }
  auto [it, inserted] = by_id_.emplace(p.id, prompts_.size());
  if (!inserted) raise(ErrorKind::Invalid, "duplicate prompt id '" + p.id + "'");
  if (p.source == Source::Train) {
    ++train_count_;
  } else {
    ++user_count_;
  }
  prompts_.push_back(std::move(p));
}

void Corpus::extend(const Corpus& other) {
  for (const Prompt& p : other.prompts_) add(p);
}

const Prompt* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &prompts_[it->second];
}

std::vector<const Prompt*> Corpus::by_source(Source s) const {
  std::vector<const Prompt*> out;
  for (const Prompt& p : prompts_) {
    if (p.source == s) out.push_back(&p);
  }
  return out;
}

std::vector<std::string> Corpus::texts(Source s) const {
  std::vector<std::string> out;
  for (const Prompt& p : prompts_) {
    if (p.source == s) out.push_back(p.text);
  }
  return out;
}

namespace {

// Shared JSONL reader. `forced_source` stamps every record (raw ingest);
// without it the "source" field is required (canonical load).
Corpus read_jsonl(const std::filesystem::path& path, const Source* forced_source) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open corpus file: " + path.string());

  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  std::size_t ordinal = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;

    const std::string where = path.string() + ":" + std::to_string(line_no);
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      raise(ErrorKind::Parse, where + ": malformed JSON object");
    }
    if (!obj.contains("text") || !obj["text"].is_string()) {
      raise(ErrorKind::Parse, where + ": missing string field \"text\"");
    }

    Prompt p;
    p.text = obj["text"].get<std::string>();
    if (is_blank(p.text)) raise(ErrorKind::Parse, where + ": empty \"text\"");

    if (forced_source) {
      p.source = *forced_source;
    } else {
      if (!obj.contains("source") || !obj["source"].is_string()) {
        raise(ErrorKind::Parse, where + ": missing string field \"source\"");
      }
      p.source = source_from_name(obj["source"].get<std::string>());
    }

    if (obj.contains("id")) {
      if (!obj["id"].is_string()) raise(ErrorKind::Parse, where + ": \"id\" must be a string");
      p.id = obj["id"].get<std::string>();
    } else {
      p.id = (p.source == Source::Train ? "t" : "u") + std::to_string(ordinal);
    }

    if (obj.contains("meta")) {
      if (!obj["meta"].is_object()) raise(ErrorKind::Parse, where + ": \"meta\" must be an object");
      for (const auto& [k, v] : obj["meta"].items()) {
        if (!v.is_string()) {
          raise(ErrorKind::Parse, where + ": meta value for \"" + k + "\" must be a string");
        }
        p.meta[k] = v.get<std::string>();
      }
    }

    try {
      corpus.add(std::move(p));
    } catch (const Error& e) {
      raise(e.kind(), where + ": " + e.what());
    }
    ++ordinal;
  }
  if (corpus.size() == 0) {
    raise(ErrorKind::Parse, path.string() + ": no prompts found");
  }
  return corpus;
}

}  // namespace

Corpus ingest(const std::filesystem::path& path, Source source) {
  return read_jsonl(path, &source);
}

Corpus load_corpus(const std::filesystem::path& path) {
  return read_jsonl(path, nullptr);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const Prompt& p : corpus.prompts()) {
    json obj;
    obj["id"] = p.id;
    obj["source"] = source_name(p.source);
    obj["text"] = p.text;
    if (!p.meta.empty()) obj["meta"] = p.meta;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::Io, "cannot write corpus file: " + path.string());
  out << serialize_corpus(corpus);
  if (!out) raise(ErrorKind::Io, "failed writing corpus file: " + path.string());
}

namespace {

// Code points treated as whitespace when splitting. Covers the Unicode
// White_Space property as of Unicode 15.
bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Decodes one UTF-8 code point starting at `i`, advancing `i` past it.
// Invalid bytes are consumed one at a time and returned verbatim so the
// tokenizer is total on arbitrary byte strings.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  char32_t cp = b0;
  if (b0 >= 0xF0) {
    len = 4;
    cp = b0 & 0x07u;
  } else if (b0 >= 0xE0) {
    len = 3;
    cp = b0 & 0x0Fu;
  } else if (b0 >= 0xC0) {
    len = 2;
    cp = b0 & 0x1Fu;
  } else if (b0 >= 0x80) {
    ++i;
    return b0;  // stray continuation byte
  } else {
    ++i;
    return cp;
  }
  if (i + len > s.size()) {
    ++i;
    return b0;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const unsigned char b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0u) != 0x80u) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (b & 0x3Fu);
  }
  i += len;
  return cp;
}

bool is_ascii_punct(unsigned char c) {
  return c < 0x80 && std::ispunct(c);
}

void strip_edge_punct(std::string& token) {
  std::size_t begin = 0;
  std::size_t end = token.size();
  while (begin < end && is_ascii_punct(static_cast<unsigned char>(token[begin]))) ++begin;
  while (end > begin && is_ascii_punct(static_cast<unsigned char>(token[end - 1]))) --end;
  token = token.substr(begin, end - begin);
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  TokenSequence tokens;
  std::string current;
  std::size_t i = 0;
  auto flush = [&] {
    strip_edge_punct(current);
    if (!current.empty()) tokens.push_back(current);
    current.clear();
  };
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = next_code_point(text, i);
    if (is_unicode_space(cp)) {
      flush();
      continue;
    }
    for (std::size_t k = start; k < i; ++k) {
      char c = text[k];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

NgramSet word_ngrams(const TokenSequence& tokens, std::size_t n) {
  if (n == 0) raise(ErrorKind::Invalid, "n-gram order must be >= 1");
  NgramSet set;
  if (tokens.size() < n) return set;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string gram = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      gram += ' ';
      gram += tokens[i + k];
    }
    set.items.insert(std::move(gram));
  }
  return set;
}

}  // namespace promptloom
