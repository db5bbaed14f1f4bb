#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tgpo {

enum class ErrorKind {
  malformed_record,
  duplicate_trajectory_id,
  unknown_task,
  schema_mismatch,
  unparsable_url,
  empty_task_group,
  mixed_task,
  unresolved_flag,
  unknown_state_or_action,
  verifier_failure,
  infeasible_parameters,
  divergence_detected,
  invariant_violation,
};

std::string_view to_string(ErrorKind kind);

/// Base of every error the pipeline raises. Everything except
/// invariant_violation is caused by the input data or parameters.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  bool is_data_error() const noexcept { return kind_ != ErrorKind::invariant_violation; }

 private:
  ErrorKind kind_;
};

/// A corpus or dump line that violates its record format. Line numbers are 1-based.
class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line, const std::string& reason);

  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace tgpo
