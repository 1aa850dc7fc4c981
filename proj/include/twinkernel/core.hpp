#pragma once
// Core time, value, event and trace types shared by every executor, plus the
// canonical one-record-per-line trace encoding that determinism checks diff.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace twinkernel {

// ---------------------------------------------------------------------------
// Error taxonomy. Hard contract violations throw; recoverable analysis
// results (parse/validate problems) travel as Diagnostic values instead.

class KernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EncodeError : public KernelError {
 public:
  using KernelError::KernelError;
};

class DecodeError : public KernelError {
 public:
  using KernelError::KernelError;
};

class ContractError : public KernelError {
 public:
  using KernelError::KernelError;
};

// A hybrid automaton exceeded its discrete-jump budget inside one macro step.
class ZenoError : public KernelError {
 public:
  using KernelError::KernelError;
};

// A Petri-Net kept firing past the micro-iteration cap.
class NonQuiescenceError : public KernelError {
 public:
  using KernelError::KernelError;
};

// The intra-component micro phase failed to reach a fixed point.
class CausalityError : public KernelError {
 public:
  using KernelError::KernelError;
};

class NumericDivergenceError : public KernelError {
 public:
  using KernelError::KernelError;
};

// A zero-crossing query could not be answered soundly.
class AmbiguityError : public KernelError {
 public:
  using KernelError::KernelError;
};

class InvariantViolationError : public KernelError {
 public:
  using KernelError::KernelError;
};

class OracleOverflowError : public KernelError {
 public:
  using KernelError::KernelError;
};

class LoadError : public KernelError {
 public:
  using KernelError::KernelError;
};

class ComparisonError : public KernelError {
 public:
  using KernelError::KernelError;
};

class CalibrationError : public KernelError {
 public:
  using KernelError::KernelError;
};

// ---------------------------------------------------------------------------
// Simulation time: integer nanoseconds. Macro-step boundaries, message
// delivery times and crossing brackets all live on this grid, which is what
// makes runs bit-reproducible; only continuous states are floating point.

struct SimTime {
  std::int64_t nanos = 0;

  static constexpr SimTime zero() noexcept { return {}; }
  static constexpr SimTime from_nanos(std::int64_t n) noexcept { return {n}; }
  static constexpr SimTime from_millis(std::int64_t ms) noexcept { return {ms * 1'000'000}; }
  static constexpr SimTime from_secs(std::int64_t s) noexcept { return {s * 1'000'000'000}; }

  // Rounds to the nearest nanosecond.
  static SimTime from_seconds(double s) {
    if (!std::isfinite(s)) throw ContractError("SimTime::from_seconds: non-finite seconds");
    const double ns = s * 1e9;
    if (ns < -9.0e18 || ns > 9.0e18) throw ContractError("SimTime::from_seconds: out of range");
    return {std::llround(ns)};
  }

  double to_seconds() const noexcept { return static_cast<double>(nanos) * 1e-9; }

  friend constexpr SimTime operator+(SimTime a, SimTime b) noexcept { return {a.nanos + b.nanos}; }
  friend constexpr SimTime operator-(SimTime a, SimTime b) noexcept { return {a.nanos - b.nanos}; }
  friend constexpr auto operator<=>(SimTime a, SimTime b) noexcept = default;
};

// Shortest decimal form that still survives a text round trip. Reals always
// carry a '.' or exponent so the integer/real distinction is visible in the
// encoded byte stream.
inline std::string format_real(double v) {
  if (!std::isfinite(v)) throw EncodeError("non-finite real cannot be encoded");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) s += ".0";
  return s;
}

inline std::string format_int(std::int64_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Shortest round-trip digits without the forced kind marker; display contexts
// (markings, CSV) where the value kind is fixed by the schema use this form.
inline std::string format_real_bare(double v) {
  if (!std::isfinite(v)) throw EncodeError("non-finite real cannot be formatted");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Canonical duration text: seconds with the trailing fraction trimmed,
// e.g. 10s, 0.1s, 0.005s.
inline std::string format_duration(SimTime t) {
  const std::int64_t secs = t.nanos / 1'000'000'000;
  std::int64_t frac = t.nanos % 1'000'000'000;
  std::string s = format_int(secs);
  if (frac != 0) {
    if (frac < 0) frac = -frac;
    char digits[16];
    std::snprintf(digits, sizeof(digits), "%09lld", static_cast<long long>(frac));
    std::string f(digits);
    while (!f.empty() && f.back() == '0') f.pop_back();
    s += "." + f;
  }
  return s + "s";
}

// ---------------------------------------------------------------------------
// Value: the single scalar type flowing through signals, tokens and events.

class Value {
 public:
  enum class Kind : std::uint8_t { Bool, Int, Real, Label };

  Value() : v_(false) {}

  static Value boolean(bool b) { return Value(Storage(b)); }
  static Value integer(std::int64_t i) { return Value(Storage(i)); }
  static Value real(double r) { return Value(Storage(r)); }
  static Value label(std::string s) { return Value(Storage(std::move(s))); }

  Kind kind() const noexcept { return static_cast<Kind>(v_.index()); }

  bool is_bool() const noexcept { return kind() == Kind::Bool; }
  bool is_int() const noexcept { return kind() == Kind::Int; }
  bool is_real() const noexcept { return kind() == Kind::Real; }
  bool is_label() const noexcept { return kind() == Kind::Label; }
  bool is_numeric() const noexcept { return is_int() || is_real(); }

  bool as_bool() const {
    if (!is_bool()) throw ContractError("Value: expected bool, got " + to_text());
    return std::get<bool>(v_);
  }
  std::int64_t as_int() const {
    if (!is_int()) throw ContractError("Value: expected int, got " + to_text());
    return std::get<std::int64_t>(v_);
  }
  double as_real() const {
    if (!is_real()) throw ContractError("Value: expected real, got " + to_text());
    return std::get<double>(v_);
  }
  const std::string& as_label() const {
    if (!is_label()) throw ContractError("Value: expected label, got " + to_text());
    return std::get<std::string>(v_);
  }

  // Int promotes to real; anything else is an error.
  double numeric() const {
    if (is_int()) return static_cast<double>(std::get<std::int64_t>(v_));
    return as_real();
  }

  friend bool operator==(const Value& a, const Value& b) { return a.v_ == b.v_; }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

  // Total order used for canonical multiset/token ordering: by kind, then by
  // payload. Deliberately not numeric-promoting so it stays a strict weak
  // ordering over mixed kinds.
  static bool less(const Value& a, const Value& b) {
    if (a.v_.index() != b.v_.index()) return a.v_.index() < b.v_.index();
    switch (a.kind()) {
      case Kind::Bool: return std::get<bool>(a.v_) < std::get<bool>(b.v_);
      case Kind::Int: return std::get<std::int64_t>(a.v_) < std::get<std::int64_t>(b.v_);
      case Kind::Real: return std::get<double>(a.v_) < std::get<double>(b.v_);
      case Kind::Label: return std::get<std::string>(a.v_) < std::get<std::string>(b.v_);
    }
    return false;
  }

  bool finite() const noexcept { return !is_real() || std::isfinite(std::get<double>(v_)); }

  // Bare scalar text (labels unquoted); used by marking serialization and CSV.
  std::string to_text() const {
    switch (kind()) {
      case Kind::Bool: return std::get<bool>(v_) ? "true" : "false";
      case Kind::Int: return format_int(std::get<std::int64_t>(v_));
      case Kind::Real: return format_real(std::get<double>(v_));
      case Kind::Label: return std::get<std::string>(v_);
    }
    return {};
  }

 private:
  using Storage = std::variant<bool, std::int64_t, double, std::string>;
  explicit Value(Storage v) : v_(std::move(v)) {}
  Storage v_;
};

struct ValueLess {
  bool operator()(const Value& a, const Value& b) const { return Value::less(a, b); }
};

// ---------------------------------------------------------------------------
// Events

struct Event {
  std::string name;
  std::optional<Value> payload;
  SimTime stamp;

  friend bool operator==(const Event&, const Event&) = default;
};

// ---------------------------------------------------------------------------
// Trace records

enum class RecordKind : std::uint8_t { Signal, Event, Location, Marking };

inline std::string_view record_kind_name(RecordKind k) {
  switch (k) {
    case RecordKind::Signal: return "signal";
    case RecordKind::Event: return "event";
    case RecordKind::Location: return "location";
    case RecordKind::Marking: return "marking";
  }
  return "?";
}

inline std::optional<RecordKind> record_kind_from(std::string_view s) {
  if (s == "signal") return RecordKind::Signal;
  if (s == "event") return RecordKind::Event;
  if (s == "location") return RecordKind::Location;
  if (s == "marking") return RecordKind::Marking;
  return std::nullopt;
}

struct TraceRecord {
  SimTime t;
  std::string source;  // model-instance id, e.g. "station.arm_x"
  RecordKind kind = RecordKind::Signal;
  std::string name;     // signal/event name; "location" / "marking" for those kinds
  Value value;          // scalar payload (unused for kind == Marking)
  std::string marking;  // serialized marking (kind == Marking only)

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct Trace {
  std::vector<TraceRecord> records;
};

namespace detail {

inline void append_json_string(std::string& out, std::string_view s) {
  out += '"';
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

inline std::string json_value_text(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Bool: return v.as_bool() ? "true" : "false";
    case Value::Kind::Int: return format_int(v.as_int());
    case Value::Kind::Real: return format_real(v.as_real());
    case Value::Kind::Label: {
      std::string out;
      append_json_string(out, v.as_label());
      return out;
    }
  }
  return {};
}

}  // namespace detail

// One canonical line per record: a flat JSON object whose keys are sorted
// bytewise. Fixed keys are kind/source/t; the record's own name keys its
// value, so a speed sample reads {"kind":"signal","source":"cv","t":0,"v":0.0}.
inline std::string encode_trace_record(const TraceRecord& r) {
  if (r.name.empty()) throw EncodeError("trace record name must be non-empty");
  if (r.name == "kind" || r.name == "source" || r.name == "t")
    throw EncodeError("trace record name collides with a fixed key: " + r.name);
  if (r.t.nanos < 0) throw EncodeError("trace record stamp must be non-negative");
  if (r.kind != RecordKind::Marking && !r.value.finite())
    throw EncodeError("non-finite real in trace record " + r.source + "." + r.name);

  std::vector<std::pair<std::string, std::string>> fields;
  fields.reserve(4);
  {
    std::string kv;
    detail::append_json_string(kv, record_kind_name(r.kind));
    fields.emplace_back("kind", std::move(kv));
  }
  {
    std::string sv;
    detail::append_json_string(sv, r.source);
    fields.emplace_back("source", std::move(sv));
  }
  fields.emplace_back("t", format_int(r.t.nanos));
  if (r.kind == RecordKind::Marking) {
    std::string mv;
    detail::append_json_string(mv, r.marking);
    fields.emplace_back(r.name, std::move(mv));
  } else {
    fields.emplace_back(r.name, detail::json_value_text(r.value));
  }

  std::sort(fields.begin(), fields.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::string line = "{";
  bool first = true;
  for (const auto& [k, v] : fields) {
    if (!first) line += ',';
    first = false;
    detail::append_json_string(line, k);
    line += ':';
    line += v;
  }
  line += '}';
  return line;
}

namespace detail {

// Strict scanner for the canonical record subset; anything else is rejected.
class RecordScanner {
 public:
  explicit RecordScanner(std::string_view text) : text_(text) {}

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  bool eof() const { return pos_ >= text_.size(); }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof()) fail("unterminated string");
      char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("bad escape");
        char e = text_[pos_++];
        switch (e) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 'r': out += '\r'; break;
          case 't': out += '\t'; break;
          case 'u': {
            if (pos_ + 4 > text_.size()) fail("bad \\u escape");
            unsigned code = 0;
            for (int i = 0; i < 4; ++i) {
              char h = text_[pos_++];
              code <<= 4;
              if (h >= '0' && h <= '9') code |= static_cast<unsigned>(h - '0');
              else if (h >= 'a' && h <= 'f') code |= static_cast<unsigned>(h - 'a' + 10);
              else if (h >= 'A' && h <= 'F') code |= static_cast<unsigned>(h - 'A' + 10);
              else fail("bad \\u escape");
            }
            if (code > 0x7f) fail("non-ascii \\u escape not supported");
            out += static_cast<char>(code);
            break;
          }
          default: fail("unknown escape");
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  // true/false, integer, or real (real iff '.' or 'e' present).
  Value parse_scalar() {
    if (peek() == 't') { expect_word("true"); return Value::boolean(true); }
    if (peek() == 'f') { expect_word("false"); return Value::boolean(false); }
    if (peek() == '"') return Value::label(parse_string());
    const std::size_t start = pos_;
    if (peek() == '-') ++pos_;
    bool is_real = false;
    while (!eof()) {
      char c = text_[pos_];
      if ((c >= '0' && c <= '9') || c == '+' || c == '-') { ++pos_; continue; }
      if (c == '.' || c == 'e' || c == 'E') { is_real = true; ++pos_; continue; }
      break;
    }
    const std::string_view num = text_.substr(start, pos_ - start);
    if (num.empty()) fail("expected a value");
    if (is_real) {
      double d = 0;
      const auto res = std::from_chars(num.data(), num.data() + num.size(), d);
      if (res.ec != std::errc() || res.ptr != num.data() + num.size()) fail("bad real");
      return Value::real(d);
    }
    std::int64_t i = 0;
    const auto res = std::from_chars(num.data(), num.data() + num.size(), i);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size()) fail("bad integer");
    return Value::integer(i);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DecodeError("trace record: " + msg + " at byte " + std::to_string(pos_));
  }

 private:
  void expect_word(std::string_view w) {
    if (text_.substr(pos_, w.size()) != w) fail("bad literal");
    pos_ += w.size();
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline TraceRecord decode_trace_record(std::string_view line) {
  detail::RecordScanner sc(line);
  sc.expect('{');
  std::map<std::string, Value> scalars;
  std::vector<std::string> order;
  bool first = true;
  while (sc.peek() != '}') {
    if (!first) sc.expect(',');
    first = false;
    std::string key = sc.parse_string();
    sc.expect(':');
    Value v = sc.parse_scalar();
    if (scalars.count(key)) sc.fail("duplicate key " + key);
    scalars.emplace(key, std::move(v));
    order.push_back(key);
  }
  sc.expect('}');
  if (!sc.eof()) sc.fail("trailing bytes after record");
  if (!std::is_sorted(order.begin(), order.end())) sc.fail("keys not in canonical order");

  TraceRecord r;
  auto take = [&](const char* key) {
    auto it = scalars.find(key);
    if (it == scalars.end()) sc.fail(std::string("missing key ") + key);
    Value v = it->second;
    scalars.erase(it);
    return v;
  };
  const Value kind_v = take("kind");
  const Value source_v = take("source");
  const Value t_v = take("t");
  if (!kind_v.is_label() || !source_v.is_label() || !t_v.is_int()) sc.fail("bad fixed fields");
  const auto kind = record_kind_from(kind_v.as_label());
  if (!kind) sc.fail("unknown record kind " + kind_v.as_label());
  r.kind = *kind;
  r.source = source_v.as_label();
  r.t = SimTime::from_nanos(t_v.as_int());
  if (scalars.size() != 1) sc.fail("expected exactly one value field");
  r.name = scalars.begin()->first;
  if (r.kind == RecordKind::Marking) {
    if (!scalars.begin()->second.is_label()) sc.fail("marking value must be a string");
    r.marking = scalars.begin()->second.as_label();
  } else {
    r.value = scalars.begin()->second;
  }
  // Round-trip check keeps only canonical lines decodable.
  if (encode_trace_record(r) != line) sc.fail("line is not in canonical form");
  return r;
}

inline std::string encode_trace(const Trace& tr) {
  std::string out;
  for (const auto& r : tr.records) {
    out += encode_trace_record(r);
    out += '\n';
  }
  return out;
}

inline Trace decode_trace(std::string_view text) {
  Trace tr;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty()) tr.records.push_back(decode_trace_record(line));
    pos = nl + 1;
  }
  return tr;
}

// First index at which the canonical encodings differ; nullopt means the
// traces are byte-identical.
inline std::optional<std::size_t> diff_traces(const Trace& a, const Trace& b) {
  const std::size_t n = std::min(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (encode_trace_record(a.records[i]) != encode_trace_record(b.records[i])) return i;
  }
  if (a.records.size() != b.records.size()) return n;
  return std::nullopt;
}

// (t, source, name) is the canonical sort key; the kernel never produces two
// records with the same key, so this is a total order on its traces.
inline bool record_key_less(const TraceRecord& a, const TraceRecord& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.source != b.source) return a.source < b.source;
  return a.name < b.name;
}

inline bool trace_is_sorted(const Trace& tr) {
  for (std::size_t i = 1; i < tr.records.size(); ++i) {
    const auto& p = tr.records[i - 1];
    const auto& c = tr.records[i];
    if (record_key_less(c, p)) return false;
    if (!record_key_less(p, c)) return false;  // duplicate key
  }
  return true;
}

// ---------------------------------------------------------------------------
// CSV export of signal columns: t_seconds first, one column per
// (source, name), forward-filled between samples.

inline std::string trace_to_signal_csv(const Trace& tr) {
  std::vector<std::pair<std::string, std::string>> columns;
  for (const auto& r : tr.records) {
    if (r.kind != RecordKind::Signal) continue;
    const auto col = std::make_pair(r.source, r.name);
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
  }
  std::sort(columns.begin(), columns.end());

  std::map<SimTime, std::map<std::size_t, const TraceRecord*>> rows;
  for (const auto& r : tr.records) {
    if (r.kind != RecordKind::Signal) continue;
    const auto it = std::find(columns.begin(), columns.end(), std::make_pair(r.source, r.name));
    rows[r.t][static_cast<std::size_t>(it - columns.begin())] = &r;
  }

  auto csv_cell = [](const Value& v) -> std::string {
    switch (v.kind()) {
      case Value::Kind::Bool: return v.as_bool() ? "1" : "0";
      default: return v.to_text();
    }
  };

  std::string out = "t_seconds";
  for (const auto& [src, name] : columns) out += "," + src + "." + name;
  out += '\n';

  std::vector<std::string> last(columns.size());
  for (const auto& [t, cells] : rows) {
    out += format_real(t.to_seconds());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto it = cells.find(c);
      if (it != cells.end()) last[c] = csv_cell(it->second->value);
      out += ",";
      out += last[c];
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small file helpers (all kernel outputs are written atomically).

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw LoadError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace twinkernel
