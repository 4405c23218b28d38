#pragma once

#include <stdexcept>
#include <string>

namespace eopr {

enum class errc {
  missing_value,
  unknown_treated,
  bad_t0,
  insufficient_history,
  degenerate_scale,
  non_finite,
  empty_grid,
  too_short_pre,
  singular_phi,
  degenerate_spectrum,
  empty_range,
  invalid_argument,
  io_error,
};

const char* to_string(errc code);

// All library failures funnel through this type so callers can dispatch on
// code() instead of parsing messages.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
  throw Error(code, what);
}

inline const char* to_string(errc code) {
  switch (code) {
    case errc::missing_value: return "MissingValue";
    case errc::unknown_treated: return "UnknownTreated";
    case errc::bad_t0: return "BadT0";
    case errc::insufficient_history: return "InsufficientHistory";
    case errc::degenerate_scale: return "DegenerateScale";
    case errc::non_finite: return "NonFinite";
    case errc::empty_grid: return "EmptyGrid";
    case errc::too_short_pre: return "TooShortPre";
    case errc::singular_phi: return "SingularPhi";
    case errc::degenerate_spectrum: return "DegenerateSpectrum";
    case errc::empty_range: return "EmptyRange";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::io_error: return "IoError";
  }
  return "UnknownError";
}

}  // namespace eopr
