#pragma once

#include <stdexcept>
#include <string>

namespace glq {

// Exit codes used by the CLI; library errors map onto these 1:1.
enum class ExitCode : int {
  Ok = 0,
  VerdictFailure = 1,   // a hard diagnostic verdict failed
  ConfigError = 2,      // schema/validation problem in a config or input table
  Divergence = 3,       // NaN/Inf during a solve
  GeometryError = 4,    // probe ball/radius leaves the domain
  MissingArtifact = 5,  // bundle incomplete
  CorruptArtifact = 6,  // size/checksum mismatch
};

struct Error : std::runtime_error {
  explicit Error(const std::string& msg, ExitCode code = ExitCode::VerdictFailure)
      : std::runtime_error(msg), exit_code(code) {}
  ExitCode exit_code;
};

// Malformed algebraic input (non-associative table, foreign class id, ...).
struct StructuralError : Error {
  explicit StructuralError(const std::string& msg) : Error(msg, ExitCode::ConfigError) {}
};

// Invalid numeric table (negative E_min entry, asymmetric values, ...).
struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(msg, ExitCode::ConfigError) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg, ExitCode::ConfigError) {}
};

// Point outside the nearest-point projection reach of the manifold.
struct ReachError : Error {
  explicit ReachError(const std::string& msg) : Error(msg, ExitCode::GeometryError) {}
};

// Loop sampling too coarse for a well-defined homotopy class.
struct ClassSafetyError : Error {
  explicit ClassSafetyError(const std::string& msg) : Error(msg, ExitCode::GeometryError) {}
};

struct GeometryError : Error {
  explicit GeometryError(const std::string& msg) : Error(msg, ExitCode::GeometryError) {}
};

struct DivergenceError : Error {
  DivergenceError(const std::string& msg, long iteration)
      : Error(msg, ExitCode::Divergence), iteration(iteration) {}
  long iteration;
};

// Test vector field not compactly supported, or similar contract breach.
struct InterfaceError : Error {
  explicit InterfaceError(const std::string& msg) : Error(msg, ExitCode::ConfigError) {}
};

struct MissingArtifactError : Error {
  explicit MissingArtifactError(const std::string& msg) : Error(msg, ExitCode::MissingArtifact) {}
};

struct CorruptArtifactError : Error {
  explicit CorruptArtifactError(const std::string& msg) : Error(msg, ExitCode::CorruptArtifact) {}
};

}  // namespace glq
