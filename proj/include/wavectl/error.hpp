#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wavectl {

enum class ErrorCode {
  invalid_size,
  degenerate_extent,
  invalid_argument,
  non_finite,
  no_convergence,
  boundary_leakage,
  node_detected,
  density_underflow,
  trajectory_escape,
  collapse,
  expectation_window,
  time_out_of_range,
  packet_off_grid,
  leakage_exceeded,
  norm_drift,
  time_span_exceeded,
  particle_escape,
  parse_error,
  validation_error,
  io_error,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the error-code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace wavectl
