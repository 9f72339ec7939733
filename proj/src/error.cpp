#include "wavectl/error.hpp"

namespace wavectl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_size: return "invalid-size";
    case ErrorCode::degenerate_extent: return "degenerate-extent";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::non_finite: return "non-finite";
    case ErrorCode::no_convergence: return "no-convergence";
    case ErrorCode::boundary_leakage: return "boundary-leakage";
    case ErrorCode::node_detected: return "node-detected";
    case ErrorCode::density_underflow: return "density-underflow";
    case ErrorCode::trajectory_escape: return "trajectory-escape";
    case ErrorCode::collapse: return "collapse";
    case ErrorCode::expectation_window: return "expectation-window";
    case ErrorCode::time_out_of_range: return "time-out-of-range";
    case ErrorCode::packet_off_grid: return "packet-off-grid";
    case ErrorCode::leakage_exceeded: return "leakage-exceeded";
    case ErrorCode::norm_drift: return "norm-drift";
    case ErrorCode::time_span_exceeded: return "time-span-exceeded";
    case ErrorCode::particle_escape: return "particle-escape";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::validation_error: return "validation-error";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

}  // namespace wavectl
