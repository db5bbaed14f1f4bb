#include "tgpo/errors.hpp"

namespace tgpo {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::malformed_record: return "MalformedRecord";
    case ErrorKind::duplicate_trajectory_id: return "DuplicateTrajectoryId";
    case ErrorKind::unknown_task: return "UnknownTask";
    case ErrorKind::schema_mismatch: return "SchemaMismatch";
    case ErrorKind::unparsable_url: return "UnparsableUrl";
    case ErrorKind::empty_task_group: return "EmptyTaskGroup";
    case ErrorKind::mixed_task: return "MixedTask";
    case ErrorKind::unresolved_flag: return "UnresolvedFlag";
    case ErrorKind::unknown_state_or_action: return "UnknownStateOrAction";
    case ErrorKind::verifier_failure: return "VerifierFailure";
    case ErrorKind::infeasible_parameters: return "InfeasibleParameters";
    case ErrorKind::divergence_detected: return "DivergenceDetected";
    case ErrorKind::invariant_violation: return "InvariantViolation";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

MalformedRecord::MalformedRecord(std::size_t line, const std::string& reason)
    : Error(ErrorKind::malformed_record, "line " + std::to_string(line) + ": " + reason),
      line_(line),
      reason_(reason) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace tgpo
