#pragma once
// Diagnostics with source spans, shared by the parser and all validators.

#include <string>
#include <string_view>
#include <vector>

namespace twinkernel {

struct SourcePos {
  int line = 0;    // 1-based; 0 means "no source location"
  int column = 0;  // 1-based byte column
};

struct SourceSpan {
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
  SourcePos start;
  SourcePos stop;

  bool known() const noexcept { return start.line > 0; }
};

struct Diagnostic {
  enum class Severity { Error, Warning };

  Severity severity = Severity::Error;
  std::string message;
  SourceSpan span;
  std::string where;  // logical location, e.g. "fsm conveyor, transition 2"

  std::string format(std::string_view filename = "") const {
    std::string out;
    if (!filename.empty()) out += std::string(filename) + ":";
    if (span.known()) {
      out += std::to_string(span.start.line) + ":" + std::to_string(span.start.column) + ":";
    }
    if (!out.empty()) out += " ";
    out += severity == Severity::Error ? "error: " : "warning: ";
    out += message;
    if (!where.empty()) out += " [" + where + "]";
    return out;
  }
};

inline Diagnostic make_error(std::string message, SourceSpan span = {}, std::string where = {}) {
  return Diagnostic{Diagnostic::Severity::Error, std::move(message), span, std::move(where)};
}

inline Diagnostic make_warning(std::string message, SourceSpan span = {}, std::string where = {}) {
  return Diagnostic{Diagnostic::Severity::Warning, std::move(message), span, std::move(where)};
}

inline bool has_errors(const std::vector<Diagnostic>& ds) {
  for (const auto& d : ds)
    if (d.severity == Diagnostic::Severity::Error) return true;
  return false;
}

inline std::string format_diagnostics(const std::vector<Diagnostic>& ds,
                                      std::string_view filename = "") {
  std::string out;
  for (const auto& d : ds) {
    out += d.format(filename);
    out += '\n';
  }
  return out;
}

}  // namespace twinkernel
