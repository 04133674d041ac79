#include "s2opt/error.hpp"

namespace s2opt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_bandlimit: return "invalid-bandlimit";
    case ErrorCode::spin_exceeds_bandlimit: return "spin-exceeds-bandlimit";
    case ErrorCode::dimension_error: return "dimension-error";
    case ErrorCode::invalid_dilation: return "invalid-dilation";
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::composition_error: return "composition-error";
    case ErrorCode::nonconvex_order: return "nonconvex-order";
    case ErrorCode::unsupported_spin: return "unsupported-spin";
    case ErrorCode::invalid_radius: return "invalid-radius";
    case ErrorCode::stability_error: return "stability-error";
    case ErrorCode::invalid_alpha: return "invalid-alpha";
    case ErrorCode::invalid_region: return "invalid-region";
    case ErrorCode::unbounded_interval: return "unbounded-interval";
    case ErrorCode::empty_interval: return "empty-interval";
    case ErrorCode::overlap_error: return "overlap-error";
    case ErrorCode::config_error: return "config-error";
    case ErrorCode::format_error: return "format-error";
    case ErrorCode::numerical_failure: return "numerical-failure";
  }
  return "unknown-error";
}

}  // namespace s2opt
