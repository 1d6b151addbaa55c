#include "sideband/error.hpp"

namespace sideband {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::UnstableSystem: return "unstable-system";
    case ErrorKind::NoConvergence: return "no-convergence";
    case ErrorKind::NearResonance: return "near-resonance";
    case ErrorKind::Accuracy: return "accuracy";
    case ErrorKind::PoorFit: return "poor-fit";
    case ErrorKind::Bracket: return "bracket";
    case ErrorKind::NonUniqueSteadyState: return "non-unique-steady-state";
    case ErrorKind::Identifiability: return "identifiability";
    case ErrorKind::Config: return "config";
    case ErrorKind::UnknownFigure: return "unknown-figure";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::vector<double> payload)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      payload_(std::move(payload)) {}

}  // namespace sideband
