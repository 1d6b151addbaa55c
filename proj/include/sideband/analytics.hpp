#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sideband/model.hpp"

namespace sideband {

enum class DriveVariant { Full, RwaOnly, CrOnly };
enum class Interaction { BeamSplitter, TwoModeSqueezing };
enum class ParameterBasis { Chi, Anharmonicity };

std::string to_string(DriveVariant v);
std::string to_string(Interaction i);
std::string to_string(ParameterBasis b);
DriveVariant parse_variant(const std::string& s);
Interaction parse_interaction(const std::string& s);

struct DriveConfig {
  double omega_d = 0.0;
  double amp_d = 0.0;

  void validate() const;
};

// Everything the perturbative formulas need. In the Chi basis the nonlinearities are
// chi_t, chi_r and the detunings use omega_t1 + chi_t; in the Anharmonicity basis they are
// A_t, A_r = A_tr^2 / A_t and the detunings use the observed omega_t.
struct SidebandModel {
  ParameterBasis basis = ParameterBasis::Chi;
  double omega_t = 0.0;     // observed transmon frequency (matching conditions)
  double omega_r = 0.0;     // observed resonator frequency
  double detuning_ref = 0.0;
  double k_t = 0.0;
  double k_r = 0.0;

  double k_tr() const;
  // Omega_sb / |delta_omega_t|
  double rate_shift_slope() const;

  static SidebandModel from_normal_modes(const NormalModeParams& p, double omega_t, double omega_r);
  static SidebandModel from_observed(const ObservedParams& obs);
};

struct Detunings {
  double delta = 0.0;
  double sigma = 0.0;
};

struct AnalyticsOptions {
  // |Delta| must exceed floor_factor * max(nonlinearity, amp_d).
  double floor_factor = 2.0;
  double perturbative_fraction = 0.2;
  int max_iterations = 100;
  double tolerance_hz = 1.0;
};

Detunings detunings(double omega_t1, double chi_t, double omega_d, double floor_hz = 0.0);
double bracket(double delta, double sigma, DriveVariant variant);

struct FrequencyShift {
  double delta_omega_t = 0.0;  // signed; the drive lowers the transmon frequency
  double delta_omega_r = 0.0;
  std::vector<std::string> warnings;
};

// Shifts with the detunings of `m` at drive `d`, optionally offset by `detuning_shift`
// (the self-consistent replacement Delta -> Delta + shift, Sigma -> Sigma + shift).
FrequencyShift frequency_shift(const SidebandModel& m, const DriveConfig& d, DriveVariant variant,
                               double detuning_shift = 0.0, const AnalyticsOptions& options = {});
double sideband_rate(const SidebandModel& m, const DriveConfig& d, DriveVariant variant,
                     double detuning_shift = 0.0, const AnalyticsOptions& options = {});

struct SidebandPrediction {
  Interaction interaction = Interaction::BeamSplitter;
  DriveVariant variant = DriveVariant::Full;
  ParameterBasis basis = ParameterBasis::Chi;
  double amp_d = 0.0;
  double omega_d = 0.0;  // drive frequency the prediction was evaluated at
  double delta = 0.0;
  double sigma = 0.0;
  double delta_omega_t = 0.0;
  double delta_omega_r = 0.0;
  double omega_sb = 0.0;
  double omega_mat_prime = 0.0;
  int iterations = 0;
  std::vector<std::string> warnings;

  double delta_omega_mat() const { return omega_mat_prime - omega_d; }
};

double unshifted_matching(const SidebandModel& m, Interaction interaction);

SidebandPrediction self_consistent_matching(const SidebandModel& m, double amp_d,
                                            Interaction interaction, DriveVariant variant,
                                            const AnalyticsOptions& options = {});

struct TermCatalogEntry {
  std::string label;
  double prefactor = 0.0;
  std::optional<double> matching_frequency;
  std::string matching_condition;
  int order = 1;
};

std::vector<TermCatalogEntry> term_catalog(const SidebandModel& m, const DriveConfig& d,
                                           const AnalyticsOptions& options = {});
std::vector<TermCatalogEntry> nearest_interactions(const SidebandModel& m, double omega_d,
                                                   double window, double amp_d = 0.0,
                                                   const AnalyticsOptions& options = {});

}  // namespace sideband
