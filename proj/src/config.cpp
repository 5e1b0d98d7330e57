#include "promptloom/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "promptloom/error.hpp"

namespace promptloom {

namespace {

enum class ValueKind { Integer, Float, Boolean, String, IntArray };

struct KeyEntry {
  const char* key;
  ValueKind kind;
  std::function<std::string(const PipelineConfig&)> get;  // raw lexical value
  std::function<void(PipelineConfig&, const std::string&)> set;
};

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) raise(ErrorKind::Internal, "double formatting failed");
  return std::string(buf, end);
}

std::uint64_t parse_u64(const std::string& key, const std::string& raw) {
  std::uint64_t value = 0;
  auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
  if (ec != std::errc() || p != raw.data() + raw.size()) {
    raise(ErrorKind::Parse, "config key '" + key + "': expected an integer, got '" + raw + "'");
  }
  return value;
}

std::int64_t parse_i64(const std::string& key, const std::string& raw) {
  std::int64_t value = 0;
  auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
  if (ec != std::errc() || p != raw.data() + raw.size()) {
    raise(ErrorKind::Parse, "config key '" + key + "': expected an integer, got '" + raw + "'");
  }
  return value;
}

double parse_double(const std::string& key, const std::string& raw) {
  double value = 0.0;
  auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
  if (ec != std::errc() || p != raw.data() + raw.size()) {
    raise(ErrorKind::Parse, "config key '" + key + "': expected a number, got '" + raw + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  if (raw == "true") return true;
  if (raw == "false") return false;
  raise(ErrorKind::Parse, "config key '" + key + "': expected true or false, got '" + raw + "'");
}

std::vector<int> parse_int_array(const std::string& key, const std::string& raw) {
  // Raw form: comma-separated integers, already stripped of brackets.
  std::vector<int> out;
  std::string token;
  std::istringstream in(raw);
  while (std::getline(in, token, ',')) {
    std::size_t b = token.find_first_not_of(" \t");
    std::size_t e = token.find_last_not_of(" \t");
    if (b == std::string::npos) {
      raise(ErrorKind::Parse, "config key '" + key + "': empty array element");
    }
    out.push_back(static_cast<int>(parse_i64(key, token.substr(b, e - b + 1))));
  }
  return out;
}

std::string format_int_array(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(values[i]);
  }
  return out;
}

const std::vector<KeyEntry>& key_table() {
  static const std::vector<KeyEntry> table = [] {
    std::vector<KeyEntry> t;
    auto add = [&t](const char* key, ValueKind kind, auto get, auto set) {
      t.push_back({key, kind, get, set});
    };

    add("seed", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.seed); },
        [](PipelineConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); });

    add("dedup.num_hashes", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.dedup.num_hashes); },
        [](PipelineConfig& c, const std::string& v) {
          c.dedup.num_hashes = parse_u64("dedup.num_hashes", v);
        });
    add("dedup.bands", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.dedup.bands); },
        [](PipelineConfig& c, const std::string& v) {
          c.dedup.bands = parse_u64("dedup.bands", v);
        });
    add("dedup.rows", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.dedup.rows); },
        [](PipelineConfig& c, const std::string& v) {
          c.dedup.rows = parse_u64("dedup.rows", v);
        });
    add("dedup.threshold", ValueKind::Float,
        [](const PipelineConfig& c) { return format_double(c.dedup.threshold); },
        [](PipelineConfig& c, const std::string& v) {
          const double t = parse_double("dedup.threshold", v);
          if (!(t > 0.0 && t < 1.0)) {
            raise(ErrorKind::Invalid, "dedup.threshold must be in (0, 1)");
          }
          c.dedup.threshold = t;
        });
    add("dedup.ngram_n", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.dedup.ngram_n); },
        [](PipelineConfig& c, const std::string& v) {
          const auto n = parse_u64("dedup.ngram_n", v);
          if (n == 0) raise(ErrorKind::Invalid, "dedup.ngram_n must be >= 1");
          c.dedup.ngram_n = n;
        });
    add("dedup.exact_confirm", ValueKind::Boolean,
        [](const PipelineConfig& c) { return std::string(c.dedup.exact_confirm ? "true" : "false"); },
        [](PipelineConfig& c, const std::string& v) {
          c.dedup.exact_confirm = parse_bool("dedup.exact_confirm", v);
        });

    add("features.n_orders", ValueKind::IntArray,
        [](const PipelineConfig& c) { return format_int_array(c.features.n_orders); },
        [](PipelineConfig& c, const std::string& v) {
          auto orders = parse_int_array("features.n_orders", v);
          if (orders.empty()) raise(ErrorKind::Invalid, "features.n_orders must be non-empty");
          for (int n : orders) {
            if (n < 1 || n > 3) {
              raise(ErrorKind::Invalid, "features.n_orders must be a subset of {1,2,3}");
            }
          }
          c.features.n_orders = std::move(orders);
        });
    add("features.feature_dim", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.features.feature_dim); },
        [](PipelineConfig& c, const std::string& v) {
          const auto d = parse_u64("features.feature_dim", v);
          if (d == 0) raise(ErrorKind::Invalid, "features.feature_dim must be >= 1");
          c.features.feature_dim = d;
        });
    add("features.alpha", ValueKind::Float,
        [](const PipelineConfig& c) { return format_double(c.features.alpha); },
        [](PipelineConfig& c, const std::string& v) {
          const double a = parse_double("features.alpha", v);
          if (!(a > 0.0)) raise(ErrorKind::Invalid, "features.alpha must be > 0");
          c.features.alpha = a;
        });
    add("features.bootstrap_count", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.features.bootstrap_count); },
        [](PipelineConfig& c, const std::string& v) {
          const auto b = parse_u64("features.bootstrap_count", v);
          if (b == 0) raise(ErrorKind::Invalid, "features.bootstrap_count must be >= 1");
          c.features.bootstrap_count = b;
        });

    add("embedding.dim", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.embedding.dim); },
        [](PipelineConfig& c, const std::string& v) {
          const auto d = parse_u64("embedding.dim", v);
          if (d < 2) raise(ErrorKind::Invalid, "embedding.dim must be >= 2");
          c.embedding.dim = d;
        });

    add("index.k_clusters", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.index.k_clusters); },
        [](PipelineConfig& c, const std::string& v) {
          c.index.k_clusters = parse_u64("index.k_clusters", v);
        });
    add("index.max_iters", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.index.max_iters); },
        [](PipelineConfig& c, const std::string& v) {
          const auto m = parse_u64("index.max_iters", v);
          if (m == 0) raise(ErrorKind::Invalid, "index.max_iters must be >= 1");
          c.index.max_iters = m;
        });
    add("index.n_init", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.index.n_init); },
        [](PipelineConfig& c, const std::string& v) {
          const auto n = parse_u64("index.n_init", v);
          if (n == 0) raise(ErrorKind::Invalid, "index.n_init must be >= 1");
          c.index.n_init = n;
        });
    add("index.nprobe", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.index.nprobe); },
        [](PipelineConfig& c, const std::string& v) {
          const auto p = parse_u64("index.nprobe", v);
          if (p == 0) raise(ErrorKind::Invalid, "index.nprobe must be >= 1");
          c.index.nprobe = p;
        });

    add("editor.pool_size", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.editor.pool_size); },
        [](PipelineConfig& c, const std::string& v) {
          const auto m = parse_u64("editor.pool_size", v);
          if (m == 0) raise(ErrorKind::Invalid, "editor.pool_size must be >= 1");
          c.editor.pool_size = m;
        });
    add("editor.k_exemplars", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.editor.k_exemplars); },
        [](PipelineConfig& c, const std::string& v) {
          const auto k = parse_u64("editor.k_exemplars", v);
          if (k == 0) raise(ErrorKind::Invalid, "editor.k_exemplars must be >= 1");
          c.editor.k_exemplars = k;
        });
    add("editor.strategy", ValueKind::String,
        [](const PipelineConfig& c) { return c.editor.strategy; },
        [](PipelineConfig& c, const std::string& v) {
          if (v != "closest" && v != "farthest" && v != "random") {
            raise(ErrorKind::Invalid,
                  "editor.strategy must be one of closest|farthest|random");
          }
          c.editor.strategy = v;
        });
    add("editor.instruction", ValueKind::String,
        [](const PipelineConfig& c) { return c.editor.instruction; },
        [](PipelineConfig& c, const std::string& v) {
          if (v.empty()) raise(ErrorKind::Invalid, "editor.instruction must be non-empty");
          c.editor.instruction = v;
        });

    add("llm.endpoint", ValueKind::String,
        [](const PipelineConfig& c) { return c.llm.endpoint; },
        [](PipelineConfig& c, const std::string& v) { c.llm.endpoint = v; });
    add("llm.model", ValueKind::String,
        [](const PipelineConfig& c) { return c.llm.model; },
        [](PipelineConfig& c, const std::string& v) { c.llm.model = v; });
    add("llm.api_key", ValueKind::String,
        [](const PipelineConfig& c) { return c.llm.api_key; },
        [](PipelineConfig& c, const std::string& v) { c.llm.api_key = v; });
    add("llm.timeout_ms", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.llm.timeout_ms); },
        [](PipelineConfig& c, const std::string& v) {
          c.llm.timeout_ms = static_cast<int>(parse_i64("llm.timeout_ms", v));
        });
    add("llm.max_retries", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.llm.max_retries); },
        [](PipelineConfig& c, const std::string& v) {
          const auto r = parse_i64("llm.max_retries", v);
          if (r < 0) raise(ErrorKind::Invalid, "llm.max_retries must be >= 0");
          c.llm.max_retries = static_cast<int>(r);
        });
    add("llm.backoff_ms", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.llm.backoff_ms); },
        [](PipelineConfig& c, const std::string& v) {
          const auto b = parse_i64("llm.backoff_ms", v);
          if (b < 0) raise(ErrorKind::Invalid, "llm.backoff_ms must be >= 0");
          c.llm.backoff_ms = static_cast<int>(b);
        });
    add("llm.max_tokens", ValueKind::Integer,
        [](const PipelineConfig& c) { return std::to_string(c.llm.max_tokens); },
        [](PipelineConfig& c, const std::string& v) {
          const auto m = parse_i64("llm.max_tokens", v);
          if (m <= 0) raise(ErrorKind::Invalid, "llm.max_tokens must be >= 1");
          c.llm.max_tokens = static_cast<int>(m);
        });
    return t;
  }();
  return table;
}

const KeyEntry* find_key(const std::string& key) {
  for (const KeyEntry& entry : key_table()) {
    if (key == entry.key) return &entry;
  }
  return nullptr;
}

std::string escape_string(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace

void set_config_key(PipelineConfig& config, const std::string& key,
                    const std::string& value) {
  const KeyEntry* entry = find_key(key);
  if (!entry) raise(ErrorKind::Invalid, "unknown config key '" + key + "'");
  // Accept the file-lexical bracketed form for arrays and quoted strings.
  std::string raw = value;
  if (entry->kind == ValueKind::IntArray && raw.size() >= 2 && raw.front() == '[' &&
      raw.back() == ']') {
    raw = raw.substr(1, raw.size() - 2);
  }
  if (entry->kind == ValueKind::String && raw.size() >= 2 && raw.front() == '"' &&
      raw.back() == '"') {
    raw = raw.substr(1, raw.size() - 2);
  }
  entry->set(config, raw);
}

std::string get_config_key(const PipelineConfig& config, const std::string& key) {
  const KeyEntry* entry = find_key(key);
  if (!entry) raise(ErrorKind::Invalid, "unknown config key '" + key + "'");
  return entry->get(config);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const KeyEntry& entry : key_table()) keys.push_back(entry.key);
  return keys;
}

namespace {

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  std::size_t line = 1;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  void next() {
    if (text[pos] == '\n') ++line;
    ++pos;
  }
  [[noreturn]] void fail(const std::string& message) const {
    raise(ErrorKind::Parse, "config line " + std::to_string(line) + ": " + message);
  }
};

void skip_inline_ws(Cursor& c) {
  while (!c.done() && (c.peek() == ' ' || c.peek() == '\t')) c.next();
}

void skip_to_eol(Cursor& c) {
  skip_inline_ws(c);
  if (!c.done() && c.peek() == '#') {
    while (!c.done() && c.peek() != '\n') c.next();
  }
  if (!c.done()) {
    if (c.peek() != '\n') c.fail("unexpected trailing characters");
    c.next();
  }
}

std::string read_quoted(Cursor& c) {
  c.next();  // opening quote
  std::string out;
  while (!c.done() && c.peek() != '"') {
    char ch = c.peek();
    if (ch == '\n') c.fail("unterminated string");
    if (ch == '\\') {
      c.next();
      if (c.done()) c.fail("unterminated escape");
      switch (c.peek()) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: c.fail("unsupported escape sequence");
      }
      c.next();
      continue;
    }
    out += ch;
    c.next();
  }
  if (c.done()) c.fail("unterminated string");
  c.next();  // closing quote
  return out;
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig config;
  Cursor c{text};
  std::string section;
  while (!c.done()) {
    skip_inline_ws(c);
    if (c.done()) break;
    const char ch = c.peek();
    if (ch == '\n') {
      c.next();
      continue;
    }
    if (ch == '#') {
      skip_to_eol(c);
      continue;
    }
    if (ch == '[') {
      c.next();
      section.clear();
      while (!c.done() && c.peek() != ']' && c.peek() != '\n') {
        section += c.peek();
        c.next();
      }
      if (c.done() || c.peek() != ']') c.fail("unterminated section header");
      c.next();
      skip_to_eol(c);
      continue;
    }

    std::string key;
    while (!c.done() && c.peek() != '=' && c.peek() != ' ' && c.peek() != '\t' &&
           c.peek() != '\n') {
      key += c.peek();
      c.next();
    }
    if (key.empty()) c.fail("expected a key");
    skip_inline_ws(c);
    if (c.done() || c.peek() != '=') c.fail("expected '=' after key '" + key + "'");
    c.next();
    skip_inline_ws(c);
    if (c.done() || c.peek() == '\n') c.fail("missing value for key '" + key + "'");

    const std::string full_key = section.empty() ? key : section + "." + key;
    const std::size_t err_line = c.line;
    std::string raw;
    if (c.peek() == '"') {
      raw = read_quoted(c);
    } else if (c.peek() == '[') {
      c.next();
      while (!c.done() && c.peek() != ']') {
        if (c.peek() == '\n') c.fail("unterminated array");
        raw += c.peek();
        c.next();
      }
      if (c.done()) c.fail("unterminated array");
      c.next();
    } else {
      while (!c.done() && c.peek() != '\n' && c.peek() != '#' && c.peek() != ' ' &&
             c.peek() != '\t') {
        raw += c.peek();
        c.next();
      }
    }
    skip_to_eol(c);

    const KeyEntry* entry = find_key(full_key);
    if (!entry) {
      raise(ErrorKind::Parse,
            "config line " + std::to_string(err_line) + ": unknown key '" + full_key + "'");
    }
    entry->set(config, raw);
  }
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open config file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const PipelineConfig& config) {
  std::string out;
  std::string current_section;
  for (const KeyEntry& entry : key_table()) {
    const std::string key = entry.key;
    const std::size_t dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (section != current_section) {
      if (!out.empty()) out += '\n';
      out += '[' + section + "]\n";
      current_section = section;
    }
    out += name;
    out += " = ";
    switch (entry.kind) {
      case ValueKind::String: out += escape_string(entry.get(config)); break;
      case ValueKind::IntArray: out += '[' + entry.get(config) + ']'; break;
      default: out += entry.get(config);
    }
    out += '\n';
  }
  return out;
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::Io, "cannot write config file: " + path.string());
  out << serialize_config(config);
  if (!out) raise(ErrorKind::Io, "failed writing config file: " + path.string());
}

}  // namespace promptloom
