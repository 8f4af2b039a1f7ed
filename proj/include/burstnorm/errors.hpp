#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace burstnorm {

enum class ErrorKind {
  kShape,        // dimension mismatch
  kDomain,       // argument outside its admissible set
  kConvergence,  // iterative method hit its iteration cap
  kSingularity,  // singular or ill-conditioned linear system
  kStability,    // model is not mean-square stable
  kUnbounded,    // norm bound search ran past its cap
  kSize,         // problem exceeds the supported size
  kSolver,       // numerical breakdown inside the feasibility solver
  kIo,           // malformed input document
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kConvergence: return "convergence error";
    case ErrorKind::kSingularity: return "singularity error";
    case ErrorKind::kStability: return "stability error";
    case ErrorKind::kUnbounded: return "unbounded-norm error";
    case ErrorKind::kSize: return "size error";
    case ErrorKind::kSolver: return "solver error";
    case ErrorKind::kIo: return "input error";
  }
  return "error";
}

/// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown when an iterative method stops early; carries its last estimate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double last_estimate)
      : Error(ErrorKind::kConvergence, message), last_estimate_(last_estimate) {}

  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace burstnorm
