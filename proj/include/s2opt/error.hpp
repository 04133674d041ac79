#pragma once

#include <stdexcept>
#include <string>

namespace s2opt {

enum class ErrorCode {
  invalid_bandlimit,
  spin_exceeds_bandlimit,
  dimension_error,
  invalid_dilation,
  invalid_parameter,
  composition_error,
  nonconvex_order,
  unsupported_spin,
  invalid_radius,
  stability_error,
  invalid_alpha,
  invalid_region,
  unbounded_interval,
  empty_interval,
  overlap_error,
  config_error,
  format_error,
  numerical_failure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace s2opt
