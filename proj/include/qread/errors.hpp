#ifndef QREAD_ERRORS_HPP
#define QREAD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qread {

enum class ErrorKind {
  InvalidInput,
  NumericalFailure,
  InternalConsistency,
  CutoffTooSmall,
  OracleAccuracy,
  ModelRegime,
  UndefinedThreshold,
  UnsupportedRange,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::InternalConsistency: return "internal-consistency";
    case ErrorKind::CutoffTooSmall: return "cutoff-too-small";
    case ErrorKind::OracleAccuracy: return "oracle-accuracy-failure";
    case ErrorKind::ModelRegime: return "model-regime";
    case ErrorKind::UndefinedThreshold: return "undefined-threshold";
    case ErrorKind::UnsupportedRange: return "unsupported-range";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` carries the category.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace qread

#endif  // QREAD_ERRORS_HPP
