#pragma once

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sideband/analytics.hpp"
#include "sideband/model.hpp"

namespace sideband {

// Gaussian ramp (sigma = rise/4, offset so it starts exactly at 0), flat top, mirrored fall.
struct PulseEnvelope {
  double rise_s = 10e-9;
  double flat_s = 0.0;

  double duration() const { return 2.0 * rise_s + flat_s; }
  double value(double t) const;
  static double ramp(double t, double rise_s);
};

// Coefficients multiplying a and a^dag (Hz).
struct DriveCoefficients {
  std::complex<double> a{0.0, 0.0};
  std::complex<double> a_dag{0.0, 0.0};
};

DriveCoefficients drive_term(DriveVariant variant, double amp_d, double omega_d, double t);

struct DriveTone {
  DriveVariant variant = DriveVariant::Full;
  double amp_d = 0.0;
  double omega_d = 0.0;
};

struct DriveSpec {
  std::vector<DriveTone> tones;
  std::optional<PulseEnvelope> envelope;

  DriveCoefficients at(double t) const;
  double peak_amplitude() const;
};

using StateLabel = std::pair<int, int>;

// Static Hamiltonian, drive operator and labelled dressed states of a driven circuit.
class DrivenSystem {
 public:
  DrivenSystem(FockOperator h_static, FockOperator drive_operator);
  static DrivenSystem from_normal_modes(const NormalModeParams& p, Dims dims);

  const FockOperator& hamiltonian() const { return h_; }
  const LabelledSpectrum& spectrum() const { return spectrum_; }
  // Static Hamiltonian in Hz and the drive operator, as dense matrices.
  const Eigen::MatrixXcd& h_hz() const { return h_hz_; }
  const Eigen::MatrixXcd& a() const { return a_; }
  Dims dims() const { return h_.dims; }

  Eigen::VectorXcd state(StateLabel s) const { return spectrum_.state(s.first, s.second); }
  double energy(StateLabel s) const { return spectrum_.energy(s.first, s.second); }
  double spectral_radius_hz(double offset_hz) const;
  SidebandModel anharmonicity_model() const;

 private:
  FockOperator h_;
  FockOperator drive_;
  LabelledSpectrum spectrum_;
  Eigen::MatrixXcd h_hz_, a_;
};

struct SimTrajectory {
  std::vector<double> times;
  std::vector<StateLabel> labels;
  std::vector<std::vector<double>> populations;  // [time][label]
  Eigen::VectorXcd final_state;
  double max_norm_drift = 0.0;
};

struct PropagateOptions {
  double dt = 0.2e-12;
  int output_every = 100;  // steps between stored samples
  std::vector<StateLabel> labels{{1, 0}, {0, 1}, {1, 1}, {0, 0}};
  std::optional<double> energy_offset_hz;  // default: <psi0|H|psi0>
  double max_norm_drift = 1e-6;
  double t_start = 0.0;
};

SimTrajectory propagate(const DrivenSystem& system, const DriveSpec& drive,
                        const Eigen::VectorXcd& psi0, double t_end,
                        const PropagateOptions& options = {});

// Propagates the columns of `state` from t0 to t1 (t1 < t0 runs backwards) with fixed-step RK4.
void rk4_evolve(const DrivenSystem& system, const DriveSpec& drive, double offset_hz, double t0,
                double t1, double dt, Eigen::MatrixXcd& state);

struct TransferStates {
  StateLabel initial;
  StateLabel target;
};

// BS: |e0> -> |g1> (or |g1> -> |e0> with from_resonator); TMS: |e1> -> |g0>.
TransferStates default_transfer(Interaction interaction, bool from_resonator = false);

struct PulseOptions {
  double rise_s = 10e-9;
  double dt = 0.2e-12;
  bool from_resonator = false;
};

// Pulse propagator split as U_fall * U_T^n * U_rise, valid for flat tops of n drive periods.
class StroboscopicPulse {
 public:
  StroboscopicPulse(const DrivenSystem& system, const DriveTone& tone, const TransferStates& states,
                    const PulseOptions& options, long long max_periods);

  double period() const { return period_; }
  // (P_initial, P_target) after a pulse with n flat periods.
  std::pair<double, double> populations(long long n) const;
  double max_norm_drift() const { return norm_drift_; }
  double period_unitarity_error() const { return unitarity_error_; }

 private:
  double period_ = 0.0;
  double norm_drift_ = 0.0;
  double unitarity_error_ = 0.0;
  Eigen::VectorXcd after_rise_;
  Eigen::VectorXcd initial_back_, target_back_;
  std::vector<Eigen::MatrixXcd> powers_;
};

struct PulseLengthSeries {
  DriveTone tone;
  TransferStates states;
  std::vector<double> flat_lengths;  // snapped to whole drive periods
  std::vector<double> p_initial;
  std::vector<double> p_target;
  double max_norm_drift = 0.0;

  std::vector<double> difference() const;
};

PulseLengthSeries pulse_length_sweep(const DrivenSystem& system, const DriveTone& tone,
                                     Interaction interaction, const std::vector<double>& lengths,
                                     const PulseOptions& options = {});

struct SinusoidFit {
  double amplitude = 0.0;  // >= 0
  double frequency = 0.0;
  double phase = 0.0;
  double offset = 0.0;
  double rms_residual = 0.0;
};

SinusoidFit fit_sinusoid(const std::vector<double>& t, const std::vector<double>& y);

struct RabiEstimate {
  double omega_sb = 0.0;
  double contrast = 0.0;
  double fit_residual = 0.0;
  double transfer_fidelity = 0.0;
  bool frequency_valid = false;
};

struct RabiOptions {
  double contrast_threshold = 0.2;
  double residual_threshold = 0.1;  // rms residual relative to the fitted amplitude
};

RabiEstimate extract_rabi(const std::vector<double>& lengths, const std::vector<double>& values,
                          const RabiOptions& options = {});

struct DriveSweepPoint {
  PulseLengthSeries series;
  SinusoidFit fit;
  double contrast = 0.0;
};

struct DriveSweep {
  std::vector<DriveSweepPoint> points;
  double omega_opt = 0.0;
  double contrast_opt = 0.0;
  bool optimum_on_edge = false;
};

// Scans omega_d; the pulse-length grid is shared by all points. Throws a bracket error when the
// optimum sits on the grid edge unless allow_edge is set.
DriveSweep drive_frequency_sweep(const DrivenSystem& system, DriveVariant variant, double amp_d,
                                 Interaction interaction, const std::vector<double>& omega_grid,
                                 const std::vector<double>& lengths,
                                 const PulseOptions& options = {}, int threads = 1,
                                 bool allow_edge = false);

struct MatchedTransfer {
  double amp_d = 0.0;
  double omega_d_opt = 0.0;
  double delta_omega_t = 0.0;
  double omega_sb = 0.0;
  double contrast = 0.0;
  double transfer_fidelity = 0.0;
  double best_flat_s = 0.0;  // flat length reaching transfer_fidelity
  double static_transition = 0.0;
  double max_norm_drift = 0.0;
  int evaluations = 0;
  PulseLengthSeries series;  // at the optimum
  std::vector<DriveSweepPoint> scanned;
};

struct SearchOptions {
  PulseOptions pulse;
  int coarse_points = 9;
  int zoom_points = 7;
  int length_samples = 48;
  double window_periods = 1.3;
  int max_recentres = 8;
  int threads = 1;
};

// Locates the contrast-maximising drive frequency around the analytic estimate and extracts
// Omega_sb and the drive-induced shift at that point.
MatchedTransfer find_matched_transfer(const DrivenSystem& system, Interaction interaction,
                                      DriveVariant variant, double amp_d,
                                      const SearchOptions& options = {});

double static_transition(const DrivenSystem& system, Interaction interaction);

// Drive frequency where the search starts: half the static transition plus the self-consistent
// anharmonicity-basis shift.
double predicted_drive_frequency(const DrivenSystem& system, Interaction interaction,
                                 DriveVariant variant, double amp_d);

struct RateShiftRow {
  double amp_d = 0.0;
  double delta_omega_t = 0.0;
  double omega_sb = 0.0;
  double omega_d_opt = 0.0;
  double contrast = 0.0;
  double transfer_fidelity = 0.0;
  bool ok = true;
  std::string error;
};

std::vector<RateShiftRow> rate_vs_shift_run(const DrivenSystem& system, Interaction interaction,
                                            DriveVariant variant,
                                            const std::vector<double>& amp_ladder,
                                            const SearchOptions& options = {});

}  // namespace sideband
