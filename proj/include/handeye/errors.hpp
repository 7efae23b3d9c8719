#ifndef HANDEYE_ERRORS_HPP
#define HANDEYE_ERRORS_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace handeye {

enum class ErrorKind {
  InvalidRotation,
  RankDeficient,
  InfeasibleConfiguration,
  ZeroScalar,
  ZeroDenominator,
  DegenerateEigenvalue,
  RankDeficientC,
  InitializationFailed,
  ImproperRotation,
  ParseError,
  ValidationError,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidRotation: return "InvalidRotation";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::InfeasibleConfiguration: return "InfeasibleConfiguration";
    case ErrorKind::ZeroScalar: return "ZeroScalar";
    case ErrorKind::ZeroDenominator: return "ZeroDenominator";
    case ErrorKind::DegenerateEigenvalue: return "DegenerateEigenvalue";
    case ErrorKind::RankDeficientC: return "RankDeficientC";
    case ErrorKind::InitializationFailed: return "InitializationFailed";
    case ErrorKind::ImproperRotation: return "ImproperRotation";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

inline bool is_input_error(ErrorKind kind) {
  return kind == ErrorKind::ParseError || kind == ErrorKind::ValidationError ||
         kind == ErrorKind::IoError;
}

/// Every failure raised by the library. `pair_index` is set when the failure
/// can be attributed to one observation of a dataset.
class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(ErrorKind kind, const std::string& what,
                   std::optional<std::size_t> pair_index = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        pair_index_(pair_index) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> pair_index() const noexcept { return pair_index_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> pair_index_;
};

}  // namespace handeye

#endif  // HANDEYE_ERRORS_HPP
