#pragma once

#include <stdexcept>
#include <string>

namespace comono {

enum class errc {
  missing_column,
  non_numeric_cell,
  non_binary_treatment,
  empty_group,
  degenerate_covariate,
  insufficient_support,
  no_frontier_units,
  empty_frontier_sample,
  all_candidates_failed,
  no_identified_units,
  too_few_points,
  invalid_covariance,
  bootstrap_aborted,
  invalid_argument,
  io_error,
};

const char* errc_name(errc code);

/// Process exit code the CLI uses for this error class:
/// 3 for data/input problems, 4 for estimation failures.
int errc_exit_code(errc code);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace comono
