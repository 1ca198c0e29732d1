#pragma once

#include <stdexcept>
#include <string>

namespace pgc {

/// Failure categories. The CLI maps them to exit codes: solver
/// non-convergence -> 1, configuration / hypothesis / input errors -> 2.
enum class ErrorCode {
  InvalidSpec,      // bad domain or bubble parameters
  InvalidPoint,     // point not on the unit sphere
  InvalidArgument,  // bad weights, reversed grids, mesh mismatch, ...
  MeshIntegrity,    // degenerate triangle, non-manifold edge, bad import
  Compatibility,    // Neumann compatibility violated
  NotInX,           // int K e^u <= 0 where positivity is required
  H1Violation,      // K <= 0 everywhere
  H2Violation,      // K vanishes (or changes sign) on a boundary loop
  WrongRegime,      // min-max outside (4pi, 8pi) or empty positive boundary
  Resolution,       // mesh does not resolve a requested bubble
  NoConvergence,    // iteration budget exhausted or stagnation
  PathRepair,       // min-max path node left X and could not be repaired
  ConfigParse,      // TOML syntax, unknown key, bad type
  Io,               // file read/write failure
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

  /// true for errors that mean "the solve did not converge" rather than
  /// "the problem statement is invalid".
  bool is_nonconvergence() const {
    return code_ == ErrorCode::NoConvergence || code_ == ErrorCode::PathRepair;
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace pgc
