#pragma once

#include <stdexcept>
#include <string>

namespace plasmon {

enum class ErrorKind {
  invalid_index,
  invalid_argument,
  range,
  unsupported_degree,
  invariant_violation,
  invalid_multiplier,
  empty_kernel,
  validation,
  pole,
  singularity,
  domain,
  accuracy,
  zero_mean,
  singular_system,
  divergent_integral,
  undefined_dissipation,
  witness_degeneracy,
  invalid_witness,
  invalid_geometry,
  hypothesis_violation,
  io,
  empty_result,
};

inline const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_index: return "invalid_index";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::range: return "range";
    case ErrorKind::unsupported_degree: return "unsupported_degree";
    case ErrorKind::invariant_violation: return "invariant_violation";
    case ErrorKind::invalid_multiplier: return "invalid_multiplier";
    case ErrorKind::empty_kernel: return "empty_kernel";
    case ErrorKind::validation: return "validation";
    case ErrorKind::pole: return "pole";
    case ErrorKind::singularity: return "singularity";
    case ErrorKind::domain: return "domain";
    case ErrorKind::accuracy: return "accuracy";
    case ErrorKind::zero_mean: return "zero_mean";
    case ErrorKind::singular_system: return "singular_system";
    case ErrorKind::divergent_integral: return "divergent_integral";
    case ErrorKind::undefined_dissipation: return "undefined_dissipation";
    case ErrorKind::witness_degeneracy: return "witness_degeneracy";
    case ErrorKind::invalid_witness: return "invalid_witness";
    case ErrorKind::invalid_geometry: return "invalid_geometry";
    case ErrorKind::hypothesis_violation: return "hypothesis_violation";
    case ErrorKind::io: return "io";
    case ErrorKind::empty_result: return "empty_result";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double value = 0.0)
      : std::runtime_error(what), kind_(kind), value_(value) {}
  ErrorKind kind() const { return kind_; }
  // Condition number, residual singular value, etc. when relevant.
  double value() const { return value_; }

 private:
  ErrorKind kind_;
  double value_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what, double value = 0.0) {
  throw Error(kind, what, value);
}

}  // namespace plasmon
