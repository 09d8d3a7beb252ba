#pragma once

#include <stdexcept>
#include <string>

namespace conifold {

enum class ErrorCode {
  invalid_argument,
  malformed_input,
  range_too_small,
  exceptional_weight,
  ordering_violated,
  link_mismatch,
  boundary_order,
  weight_mismatch,
  asymptotics,
  t_too_large,
  weight_condition,
  precondition_unknown,
  not_compact,
  io_failure,
  config,
};

const char* to_string(ErrorCode code);

// Every failure the library raises carries a machine-readable code so the CLI
// and tests can distinguish, say, a weight mismatch from an ordering error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace conifold
