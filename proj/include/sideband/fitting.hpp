#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sideband/eit.hpp"
#include "sideband/least_squares.hpp"

namespace sideband {

struct FreeParameter {
  std::string name;
  double initial = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> scale;

  // Bounds at initial * (1 -+ rel) for positive quantities.
  static FreeParameter around(const std::string& name, double initial, double rel = 0.5);
  // Symmetric absolute bounds initial -+ half_width.
  static FreeParameter within(const std::string& name, double initial, double half_width,
                              double scale);
};

enum class FitTarget { Complex, Magnitude };

struct FitProblem {
  Spectrum data;
  std::vector<FreeParameter> free;
  std::map<std::string, double> fixed;  // overrides of template values
  EitParams model;
  FitTarget target = FitTarget::Complex;
  LeastSquaresOptions solver;
  SpectrumOptions spectrum_options;

  void validate() const;
};

struct ParameterEstimate {
  std::string name;
  double value = 0.0;
  double stderr_value = 0.0;
};

struct FitResult {
  std::vector<ParameterEstimate> estimates;  // free parameters, then nuisance terms
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> accepted_costs;
  EitParams fitted;

  const ParameterEstimate& at(const std::string& name) const;
  double value(const std::string& name) const { return at(name).value; }
  double stderr_of(const std::string& name) const { return at(name).stderr_value; }
};

FitResult fit_spectrum(const FitProblem& problem);

struct CalibrationOptions {
  std::vector<std::string> stage1_free{"omega_sb_hz", "delta_omega_mat_hz", "omega_r_hz",
                                       "kappa_hz", "gamma_hz"};
  double linear_probe_hz = 10e3;
  double amp_p_guess_hz = 3e6;
  double A_tr_guess_hz = 300e3;
  FitTarget target = FitTarget::Complex;
  LeastSquaresOptions solver;
  SpectrumOptions spectrum_options;
};

struct Calibration {
  FitResult stage1;
  FitResult stage2;
};

Calibration calibrate_cross_anharmonicity(const Spectrum& linear_data,
                                          const Spectrum& nonlinear_data,
                                          const EitParams& template_params,
                                          const CalibrationOptions& options = {});

struct RateShiftPoint {
  double delta_omega_t = 0.0;
  double omega_sb = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double slope_error = 0.0;
  std::optional<double> analytic_slope;
  std::optional<double> relative_deviation;
};

// Least-squares line through the origin of omega_sb against |delta_omega_t|.
LineFit rate_shift_line_fit(const std::vector<RateShiftPoint>& points,
                            std::optional<double> analytic_slope = std::nullopt);

// Adds complex Gaussian noise of standard deviation sigma per quadrature (fixed seed).
Spectrum with_noise(const Spectrum& s, double sigma, unsigned seed);

}  // namespace sideband
