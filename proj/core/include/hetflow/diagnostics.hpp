#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hetflow {

enum class Severity { Warning, Error };

/// A finding produced by validation, constraint checks or requirement gates.
/// `code` is a stable kebab-case identifier (e.g. "cycle", "buffer-overflow"),
/// `subject` names the node, edge or tile the finding refers to.
struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  std::string subject;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

using Diagnostics = std::vector<Diagnostic>;

inline bool has_errors(const Diagnostics& diags) {
  for (const auto& d : diags)
    if (d.severity == Severity::Error) return true;
  return false;
}

inline std::size_t count_code(const Diagnostics& diags, const std::string& code) {
  std::size_t n = 0;
  for (const auto& d : diags)
    if (d.code == code) ++n;
  return n;
}

std::string to_string(const Diagnostic& d);

/// Exception carrying a stable error code. Module-qualified codes are formed by
/// the CLI as "<module>: <code>".
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace hetflow
