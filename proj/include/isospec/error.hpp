#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace isospec {

enum class ErrorKind {
  DimensionTooSmall,
  Parse,
  Topology,
  UnsupportedExpression,
  DegenerateTriangle,
  SurfaceMismatch,
  PositivityViolation,
  NumericalBreakdown,
  ModeCountMismatch,
  DivisionGuard,
  SymmetryViolation,
  RankDeficientBasis,
  NotApplicable,
  InsufficientModes,
  InvalidArgument,
  Config,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionTooSmall: return "dimension_too_small";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Topology: return "topology";
    case ErrorKind::UnsupportedExpression: return "unsupported_expression";
    case ErrorKind::DegenerateTriangle: return "degenerate_triangle";
    case ErrorKind::SurfaceMismatch: return "surface_mismatch";
    case ErrorKind::PositivityViolation: return "positivity_violation";
    case ErrorKind::NumericalBreakdown: return "numerical_breakdown";
    case ErrorKind::ModeCountMismatch: return "mode_count_mismatch";
    case ErrorKind::DivisionGuard: return "division_guard";
    case ErrorKind::SymmetryViolation: return "symmetry_violation";
    case ErrorKind::RankDeficientBasis: return "rank_deficient_basis";
    case ErrorKind::NotApplicable: return "not_applicable";
    case ErrorKind::InsufficientModes: return "insufficient_modes";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

// Configuration-class errors are the caller's fault; everything else is
// raised by the numerical pipeline.
inline bool is_config_error(ErrorKind kind) {
  return kind == ErrorKind::Config || kind == ErrorKind::Io || kind == ErrorKind::Parse ||
         kind == ErrorKind::UnsupportedExpression || kind == ErrorKind::InvalidArgument ||
         kind == ErrorKind::DimensionTooSmall;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> node = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), node_(node) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Offending node index, when the failure is attributable to one node.
  std::optional<std::size_t> node() const noexcept { return node_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> node_;
};

}  // namespace isospec
