#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sideband {

enum class ErrorKind {
  InvalidDimension,
  InvalidParameter,
  UnstableSystem,
  NoConvergence,
  NearResonance,
  Accuracy,
  PoorFit,
  Bracket,
  NonUniqueSteadyState,
  Identifiability,
  Config,
  UnknownFigure,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::vector<double> payload = {});

  ErrorKind kind() const { return kind_; }
  // Last residuals, fit residual or similar diagnostic numbers.
  const std::vector<double>& payload() const { return payload_; }

 private:
  ErrorKind kind_;
  std::vector<double> payload_;
};

}  // namespace sideband
