#include "sideband/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sideband/error.hpp"

namespace sideband {

std::string to_string(DriveVariant v) {
  switch (v) {
    case DriveVariant::Full: return "full";
    case DriveVariant::RwaOnly: return "rwa";
    case DriveVariant::CrOnly: return "cr";
  }
  return "full";
}

std::string to_string(Interaction i) {
  return i == Interaction::BeamSplitter ? "bs" : "tms";
}

std::string to_string(ParameterBasis b) { return b == ParameterBasis::Chi ? "chi" : "A"; }

DriveVariant parse_variant(const std::string& s) {
  if (s == "full") return DriveVariant::Full;
  if (s == "rwa") return DriveVariant::RwaOnly;
  if (s == "cr") return DriveVariant::CrOnly;
  throw Error(ErrorKind::Config, "unknown variant '" + s + "' (expected full|rwa|cr)");
}

Interaction parse_interaction(const std::string& s) {
  if (s == "bs") return Interaction::BeamSplitter;
  if (s == "tms") return Interaction::TwoModeSqueezing;
  throw Error(ErrorKind::Config, "unknown interaction '" + s + "' (expected bs|tms)");
}

void DriveConfig::validate() const {
  if (!(omega_d > 0.0)) throw Error(ErrorKind::InvalidParameter, "omega_d must be positive");
  if (!(amp_d >= 0.0)) throw Error(ErrorKind::InvalidParameter, "amp_d must be non-negative");
}

double SidebandModel::k_tr() const { return std::sqrt(k_t * k_r); }

double SidebandModel::rate_shift_slope() const {
  return k_t > 0 ? std::pow(k_r / k_t, 0.25) : 0.0;
}

SidebandModel SidebandModel::from_normal_modes(const NormalModeParams& p, double omega_t,
                                               double omega_r) {
  p.validate();
  SidebandModel m;
  m.basis = ParameterBasis::Chi;
  m.omega_t = omega_t;
  m.omega_r = omega_r;
  m.detuning_ref = p.omega_t1 + p.chi_t;
  m.k_t = p.chi_t;
  m.k_r = p.chi_r;
  return m;
}

SidebandModel SidebandModel::from_observed(const ObservedParams& obs) {
  obs.validate();
  SidebandModel m;
  m.basis = ParameterBasis::Anharmonicity;
  m.omega_t = obs.omega_t;
  m.omega_r = obs.omega_r;
  m.detuning_ref = obs.omega_t;
  m.k_t = obs.A_t;
  m.k_r = obs.A_t > 0 ? obs.A_tr * obs.A_tr / obs.A_t : 0.0;
  return m;
}

Detunings detunings(double omega_t1, double chi_t, double omega_d, double floor_hz) {
  Detunings d{omega_t1 + chi_t - omega_d, omega_t1 + chi_t + omega_d};
  if (std::abs(d.delta) <= floor_hz || d.delta == 0.0) {
    std::ostringstream os;
    os << "|Delta| = " << std::abs(d.delta) << " Hz is below the near-resonance floor " << floor_hz
       << " Hz";
    throw Error(ErrorKind::NearResonance, os.str());
  }
  return d;
}

double bracket(double delta, double sigma, DriveVariant variant) {
  if (delta == 0.0 || sigma == 0.0)
    throw Error(ErrorKind::NearResonance, "zero detuning in bracket");
  switch (variant) {
    case DriveVariant::Full: return std::pow(1.0 / delta + 1.0 / sigma, 2);
    case DriveVariant::RwaOnly: return 1.0 / (delta * delta);
    case DriveVariant::CrOnly: return 1.0 / (sigma * sigma);
  }
  return 0.0;
}

namespace {

Detunings shifted_detunings(const SidebandModel& m, const DriveConfig& d, double shift,
                            const AnalyticsOptions& options) {
  d.validate();
  double floor = options.floor_factor * std::max(m.k_t, d.amp_d);
  Detunings det = detunings(m.detuning_ref, 0.0, d.omega_d, floor);
  det.delta += shift;
  det.sigma += shift;
  if (std::abs(det.delta) <= floor)
    throw Error(ErrorKind::NearResonance, "shifted detuning is below the near-resonance floor");
  return det;
}

}  // namespace

FrequencyShift frequency_shift(const SidebandModel& m, const DriveConfig& d, DriveVariant variant,
                               double detuning_shift, const AnalyticsOptions& options) {
  Detunings det = shifted_detunings(m, d, detuning_shift, options);
  double b = bracket(det.delta, det.sigma, variant);
  FrequencyShift out;
  out.delta_omega_t = -0.5 * d.amp_d * d.amp_d * m.k_t * b;
  out.delta_omega_r = -0.5 * d.amp_d * d.amp_d * m.k_tr() * b;
  if (std::abs(out.delta_omega_t) > options.perturbative_fraction * std::abs(det.delta)) {
    std::ostringstream os;
    os << "shift " << out.delta_omega_t << " Hz exceeds " << options.perturbative_fraction
       << " of Delta; perturbative estimate unreliable";
    out.warnings.push_back(os.str());
  }
  return out;
}

double sideband_rate(const SidebandModel& m, const DriveConfig& d, DriveVariant variant,
                     double detuning_shift, const AnalyticsOptions& options) {
  Detunings det = shifted_detunings(m, d, detuning_shift, options);
  return 0.5 * d.amp_d * d.amp_d * std::pow(m.k_t, 0.75) * std::pow(m.k_r, 0.25) *
         bracket(det.delta, det.sigma, variant);
}

double unshifted_matching(const SidebandModel& m, Interaction interaction) {
  return interaction == Interaction::BeamSplitter ? 0.5 * std::abs(m.omega_t - m.omega_r)
                                                  : 0.5 * std::abs(m.omega_t + m.omega_r);
}

namespace {

double matching_with_shift(const SidebandModel& m, Interaction interaction, double shift) {
  double wt = m.omega_t + shift;
  return interaction == Interaction::BeamSplitter ? 0.5 * std::abs(wt - m.omega_r)
                                                  : 0.5 * std::abs(wt + m.omega_r);
}

}  // namespace

SidebandPrediction self_consistent_matching(const SidebandModel& m, double amp_d,
                                            Interaction interaction, DriveVariant variant,
                                            const AnalyticsOptions& options) {
  SidebandPrediction out;
  out.interaction = interaction;
  out.variant = variant;
  out.basis = m.basis;
  out.amp_d = amp_d;

  double omega_d = unshifted_matching(m, interaction);
  double shift = 0.0;
  bool converged = false;
  for (int it = 1; it <= options.max_iterations; ++it) {
    DriveConfig d{omega_d, amp_d};
    FrequencyShift fs = frequency_shift(m, d, variant, shift, options);
    shift = fs.delta_omega_t;
    double next = matching_with_shift(m, interaction, shift);
    out.iterations = it;
    double change = std::abs(next - omega_d);
    omega_d = next;
    if (change < options.tolerance_hz) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorKind::NoConvergence, "self-consistent matching did not converge",
                {omega_d, shift});
  }

  DriveConfig d{omega_d, amp_d};
  FrequencyShift fs = frequency_shift(m, d, variant, shift, options);
  Detunings det = shifted_detunings(m, d, shift, options);
  out.omega_d = omega_d;
  out.omega_mat_prime = omega_d;
  out.delta = det.delta;
  out.sigma = det.sigma;
  out.delta_omega_t = fs.delta_omega_t;
  out.delta_omega_r = fs.delta_omega_r;
  out.omega_sb = sideband_rate(m, d, variant, shift, options);
  out.warnings = fs.warnings;
  return out;
}

std::vector<TermCatalogEntry> term_catalog(const SidebandModel& m, const DriveConfig& d,
                                           const AnalyticsOptions& options) {
  Detunings det = shifted_detunings(m, d, 0.0, options);
  const double amp2 = d.amp_d * d.amp_d / 4.0;
  const double b = bracket(det.delta, det.sigma, DriveVariant::Full);
  const double first = 1.0 / det.delta + 1.0 / det.sigma;
  const double kt = m.k_t, kr = m.k_r;
  const double t34 = std::pow(kt, 0.75) * std::pow(kr, 0.25);
  const double t14 = std::pow(kt, 0.25) * std::pow(kr, 0.75);
  const double wt = m.omega_t, wr = m.omega_r;

  return {
      {"a† a", amp2 * kt * b, std::nullopt, "", 1},
      {"b† b", amp2 * m.k_tr() * b, std::nullopt, "", 1},
      {"a b†", amp2 * t34 * b, std::abs(wt - wr) / 2, "|ω_t−ω_r|/2", 1},
      {"a† b†", amp2 * t34 * b, std::abs(wt + wr) / 2, "|ω_t+ω_r|/2", 1},
      {"a b†²", amp2 * t14 * first, std::abs(2 * wr - wt), "|2ω_r−ω_t|", 2},
      {"a† b†²", amp2 * t14 * first, 2 * wr + wt, "2ω_r+ω_t", 2},
      {"a² b†", amp2 * t34 * first, std::abs(2 * wt - wr), "|2ω_t−ω_r|", 2},
      {"a†² b†", amp2 * t34 * first, std::abs(wt - wr), "|ω_t−ω_r|", 2},
  };
}

std::vector<TermCatalogEntry> nearest_interactions(const SidebandModel& m, double omega_d,
                                                   double window, double amp_d,
                                                   const AnalyticsOptions& options) {
  AnalyticsOptions relaxed = options;
  relaxed.floor_factor = 0.0;
  std::vector<TermCatalogEntry> all;
  try {
    all = term_catalog(m, DriveConfig{omega_d, amp_d}, relaxed);
  } catch (const Error&) {
    all = term_catalog(m, DriveConfig{omega_d, 0.0}, relaxed);
    for (auto& e : all) e.prefactor = 0.0;
  }
  std::vector<TermCatalogEntry> out;
  for (auto& e : all)
    if (e.matching_frequency && std::abs(*e.matching_frequency - omega_d) <= window)
      out.push_back(e);
  std::stable_sort(out.begin(), out.end(), [&](const auto& x, const auto& y) {
    return std::abs(*x.matching_frequency - omega_d) < std::abs(*y.matching_frequency - omega_d);
  });
  return out;
}

}  // namespace sideband
