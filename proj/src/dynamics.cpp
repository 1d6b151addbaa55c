#include "sideband/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sideband/error.hpp"
#include "sideband/parallel.hpp"

namespace sideband {

namespace {

const std::complex<double> kMinusI2Pi(0.0, -kTwoPi);

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

}  // namespace

double PulseEnvelope::ramp(double t, double rise_s) {
  if (t <= 0.0) return 0.0;
  if (t >= rise_s) return 1.0;
  const double sigma = rise_s / 4.0;
  const double floor = std::exp(-8.0);
  double u = t - rise_s;
  return (std::exp(-u * u / (2.0 * sigma * sigma)) - floor) / (1.0 - floor);
}

double PulseEnvelope::value(double t) const {
  if (t <= 0.0 || t >= duration()) return 0.0;
  if (t < rise_s) return ramp(t, rise_s);
  if (t <= rise_s + flat_s) return 1.0;
  return ramp(duration() - t, rise_s);
}

DriveCoefficients drive_term(DriveVariant variant, double amp_d, double omega_d, double t) {
  const double phase = kTwoPi * omega_d * t;
  const std::complex<double> co = std::polar(0.5 * amp_d, phase);
  switch (variant) {
    case DriveVariant::Full: {
      double c = amp_d * std::cos(phase);
      return {c, c};
    }
    case DriveVariant::RwaOnly: return {co, std::conj(co)};
    case DriveVariant::CrOnly: return {std::conj(co), co};
  }
  return {};
}

DriveCoefficients DriveSpec::at(double t) const {
  DriveCoefficients sum;
  double env = envelope ? envelope->value(t) : 1.0;
  if (env == 0.0) return sum;
  for (const auto& tone : tones) {
    DriveCoefficients c = drive_term(tone.variant, tone.amp_d, tone.omega_d, t);
    sum.a += env * c.a;
    sum.a_dag += env * c.a_dag;
  }
  return sum;
}

double DriveSpec::peak_amplitude() const {
  double s = 0.0;
  for (const auto& tone : tones) s += tone.amp_d;
  return s;
}

DrivenSystem::DrivenSystem(FockOperator h_static, FockOperator drive_operator)
    : h_(std::move(h_static)), drive_(std::move(drive_operator)), spectrum_(h_) {
  if (!(h_.dims == drive_.dims))
    throw Error(ErrorKind::InvalidDimension, "drive operator dims differ from Hamiltonian dims");
  h_hz_ = h_.data / kTwoPi;
  a_ = drive_.data;
}

DrivenSystem DrivenSystem::from_normal_modes(const NormalModeParams& p, Dims dims) {
  return DrivenSystem(build_h_normal(p, dims), ladder(dims, Mode::Transmon));
}

double DrivenSystem::spectral_radius_hz(double offset_hz) const {
  const Eigen::VectorXd& e = spectrum_.energies();
  return std::max(std::abs(e.maxCoeff() - offset_hz), std::abs(e.minCoeff() - offset_hz));
}

SidebandModel DrivenSystem::anharmonicity_model() const {
  return SidebandModel::from_observed(spectrum_.observed());
}

void rk4_evolve(const DrivenSystem& system, const DriveSpec& drive, double offset_hz, double t0,
                double t1, double dt, Eigen::MatrixXcd& state) {
  const double span = t1 - t0;
  if (span == 0.0) return;
  const long long steps = std::max(1LL, static_cast<long long>(std::ceil(std::abs(span) / dt - 1e-9)));
  const double h = span / static_cast<double>(steps);
  const Eigen::Index n = state.rows(), m = state.cols();
  Eigen::MatrixXcd h0 = kMinusI2Pi * (system.h_hz() - offset_hz * Eigen::MatrixXcd::Identity(n, n));
  Eigen::MatrixXcd a = kMinusI2Pi * system.a();
  Eigen::MatrixXcd ad = kMinusI2Pi * system.a().adjoint();
  Eigen::MatrixXcd gen(n, n);
  Eigen::MatrixXcd k1(n, m), k2(n, m), k3(n, m), k4(n, m), tmp(n, m);

  auto deriv = [&](double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& out) {
    DriveCoefficients c = drive.at(t);
    gen = h0;
    if (c.a != 0.0) gen += c.a * a;
    if (c.a_dag != 0.0) gen += c.a_dag * ad;
    out.noalias() = gen * y;
  };

  double t = t0;
  for (long long s = 0; s < steps; ++s) {
    deriv(t, state, k1);
    tmp = state + (0.5 * h) * k1;
    deriv(t + 0.5 * h, tmp, k2);
    tmp = state + (0.5 * h) * k2;
    deriv(t + 0.5 * h, tmp, k3);
    tmp = state + h * k3;
    deriv(t + h, tmp, k4);
    state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t0 + h * static_cast<double>(s + 1);
  }
}

SimTrajectory propagate(const DrivenSystem& system, const DriveSpec& drive,
                        const Eigen::VectorXcd& psi0, double t_end,
                        const PropagateOptions& options) {
  if (psi0.size() != system.dims().size())
    throw Error(ErrorKind::InvalidDimension, "initial state has the wrong dimension");
  if (std::abs(psi0.norm() - 1.0) > 1e-10)
    throw Error(ErrorKind::InvalidParameter, "initial state is not normalised");
  if (!(t_end >= options.t_start))
    throw Error(ErrorKind::InvalidParameter, "t_end precedes t_start");

  double offset = options.energy_offset_hz
                      ? *options.energy_offset_hz
                      : (psi0.adjoint() * (system.h_hz() * psi0)).value().real();
  double radius = system.spectral_radius_hz(offset) +
                  2.0 * drive.peak_amplitude() * std::sqrt(static_cast<double>(system.dims().n_t));
  if (kTwoPi * radius * options.dt >= 0.1) {
    std::ostringstream os;
    os << "dt = " << options.dt << " s gives spectral-radius step " << kTwoPi * radius * options.dt
       << " >= 0.1 rad; reduce dt";
    throw Error(ErrorKind::Accuracy, os.str());
  }

  std::vector<Eigen::VectorXcd> probes;
  for (const auto& l : options.labels) probes.push_back(system.state(l));

  SimTrajectory traj;
  traj.labels = options.labels;
  Eigen::MatrixXcd psi = psi0;
  auto record = [&](double t) {
    traj.times.push_back(t);
    std::vector<double> pops;
    for (const auto& p : probes) pops.push_back(std::norm(p.dot(psi.col(0))));
    traj.populations.push_back(std::move(pops));
    traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(psi.col(0).norm() - 1.0));
  };

  const double total = t_end - options.t_start;
  const long long steps = total > 0 ? static_cast<long long>(std::ceil(total / options.dt - 1e-9)) : 0;
  const double h = steps > 0 ? total / static_cast<double>(steps) : 0.0;
  const long long every = std::max(1, options.output_every);
  record(options.t_start);
  for (long long s = 0; s < steps; s += every) {
    long long chunk = std::min(every, steps - s);
    double ta = options.t_start + h * static_cast<double>(s);
    double tb = options.t_start + h * static_cast<double>(s + chunk);
    rk4_evolve(system, drive, offset, ta, tb, h * (1.0 + 1e-12), psi);
    record(tb);
  }
  traj.final_state = psi.col(0);
  if (traj.max_norm_drift > options.max_norm_drift) {
    std::ostringstream os;
    os << "norm drift " << traj.max_norm_drift << " exceeds " << options.max_norm_drift
       << "; use a smaller dt";
    throw Error(ErrorKind::Accuracy, os.str(), {traj.max_norm_drift});
  }
  return traj;
}

TransferStates default_transfer(Interaction interaction, bool from_resonator) {
  if (interaction == Interaction::TwoModeSqueezing) return {{1, 1}, {0, 0}};
  if (from_resonator) return {{0, 1}, {1, 0}};
  return {{1, 0}, {0, 1}};
}

StroboscopicPulse::StroboscopicPulse(const DrivenSystem& system, const DriveTone& tone,
                                     const TransferStates& states, const PulseOptions& options,
                                     long long max_periods) {
  if (!(tone.omega_d > 0.0))
    throw Error(ErrorKind::InvalidParameter, "drive frequency must be positive");
  period_ = 1.0 / tone.omega_d;
  const double rise = options.rise_s;
  DriveSpec edges{{tone}, PulseEnvelope{rise, 0.0}};
  DriveSpec flat{{tone}, std::nullopt};

  const double e_i = system.energy(states.initial);
  const double e_t = system.energy(states.target);

  Eigen::MatrixXcd v = system.state(states.initial);
  rk4_evolve(system, edges, e_i, 0.0, rise, options.dt, v);
  after_rise_ = v.col(0);

  v = system.state(states.initial);
  rk4_evolve(system, edges, e_i, 2.0 * rise, rise, options.dt, v);
  initial_back_ = v.col(0);

  v = system.state(states.target);
  rk4_evolve(system, edges, e_t, 2.0 * rise, rise, options.dt, v);
  target_back_ = v.col(0);

  norm_drift_ = std::max({std::abs(after_rise_.norm() - 1.0), std::abs(initial_back_.norm() - 1.0),
                          std::abs(target_back_.norm() - 1.0)});

  const Eigen::Index n = system.dims().size();
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(n, n);
  rk4_evolve(system, flat, 0.5 * (e_i + e_t), rise, rise + period_, options.dt, u);
  unitarity_error_ =
      (u.adjoint() * u - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
  u = svd.matrixU() * svd.matrixV().adjoint();

  powers_.push_back(u);
  for (long long p = 2; p <= max_periods; p *= 2) powers_.push_back(powers_.back() * powers_.back());
}

std::pair<double, double> StroboscopicPulse::populations(long long n) const {
  if (n < 0) throw Error(ErrorKind::InvalidParameter, "negative period count");
  Eigen::VectorXcd psi = after_rise_;
  for (std::size_t bit = 0; n > 0; ++bit, n >>= 1) {
    if (!(n & 1)) continue;
    if (bit >= powers_.size())
      throw Error(ErrorKind::InvalidParameter, "period count exceeds the prepared range");
    psi = powers_[bit] * psi;
  }
  return {std::norm(initial_back_.dot(psi)), std::norm(target_back_.dot(psi))};
}

std::vector<double> PulseLengthSeries::difference() const {
  std::vector<double> d(p_initial.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = p_initial[i] - p_target[i];
  return d;
}

PulseLengthSeries pulse_length_sweep(const DrivenSystem& system, const DriveTone& tone,
                                     Interaction interaction, const std::vector<double>& lengths,
                                     const PulseOptions& options) {
  if (lengths.empty()) throw Error(ErrorKind::InvalidParameter, "empty pulse-length grid");
  PulseLengthSeries out;
  out.tone = tone;
  out.states = default_transfer(interaction, options.from_resonator);
  const double period = 1.0 / tone.omega_d;
  std::vector<long long> counts;
  long long max_n = 1;
  for (double l : lengths) {
    if (l < 0.0) throw Error(ErrorKind::InvalidParameter, "negative flat length");
    counts.push_back(std::llround(l / period));
    max_n = std::max(max_n, counts.back());
  }
  StroboscopicPulse pulse(system, tone, out.states, options, max_n);
  out.max_norm_drift = pulse.max_norm_drift();
  for (long long n : counts) {
    auto [pi, pt] = pulse.populations(n);
    out.flat_lengths.push_back(static_cast<double>(n) * period);
    out.p_initial.push_back(pi);
    out.p_target.push_back(pt);
  }
  return out;
}

SinusoidFit fit_sinusoid(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  if (n < 4 || y.size() != n)
    throw Error(ErrorKind::InvalidParameter, "sinusoid fit needs at least 4 matching samples");
  SinusoidFit fit;
  double lo = *std::min_element(y.begin(), y.end()), hi = *std::max_element(y.begin(), y.end());
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  fit.offset = mean;
  if (hi - lo < 1e-12) return fit;

  const double t0 = t.front();
  const double span = t.back() - t.front();
  if (!(span > 0.0)) throw Error(ErrorKind::InvalidParameter, "sample times must increase");
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));

  auto solve = [&](double f, Eigen::Vector3d& coef) {
    Eigen::MatrixXd m(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
      double ph = kTwoPi * f * (t[i] - t0);
      m(i, 0) = std::cos(ph);
      m(i, 1) = std::sin(ph);
      m(i, 2) = 1.0;
    }
    coef = m.colPivHouseholderQr().solve(yv);
    return (m * coef - yv).squaredNorm();
  };

  const double f_lo = 0.25 / span;
  const double f_hi = 0.5 * static_cast<double>(n - 1) / span;
  const double df = 0.02 / span;
  double best_f = f_lo, best_r = std::numeric_limits<double>::infinity();
  Eigen::Vector3d coef;
  for (double f = f_lo; f <= f_hi; f += df) {
    double r = solve(f, coef);
    if (r < best_r) {
      best_r = r;
      best_f = f;
    }
  }
  // Golden-section refinement of the projected residual.
  double a = std::max(f_lo * 0.5, best_f - df), b = best_f + df;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = solve(c, coef), fd = solve(d, coef);
  for (int it = 0; it < 80 && (b - a) > 1e-12 * best_f; ++it) {
    if (fc < fd) {
      b = d; d = c; fd = fc; c = b - g * (b - a); fc = solve(c, coef);
    } else {
      a = c; c = d; fc = fd; d = a + g * (b - a); fd = solve(d, coef);
    }
  }
  fit.frequency = 0.5 * (a + b);
  double r = solve(fit.frequency, coef);
  fit.amplitude = std::hypot(coef[0], coef[1]);
  fit.phase = std::atan2(-coef[1], coef[0]) - kTwoPi * fit.frequency * t0;
  fit.offset = coef[2];
  fit.rms_residual = std::sqrt(r / static_cast<double>(n));
  return fit;
}

RabiEstimate extract_rabi(const std::vector<double>& lengths, const std::vector<double>& values,
                          const RabiOptions& options) {
  SinusoidFit fit = fit_sinusoid(lengths, values);
  RabiEstimate est;
  est.contrast = std::clamp(2.0 * fit.amplitude, 0.0, 1.0);
  est.fit_residual = fit.amplitude > 0 ? fit.rms_residual / fit.amplitude : 0.0;
  est.transfer_fidelity = std::clamp(fit.offset + fit.amplitude, 0.0, 1.0);
  if (est.contrast < options.contrast_threshold) return est;
  if (est.fit_residual > options.residual_threshold) {
    std::ostringstream os;
    os << "oscillation fit residual " << est.fit_residual << " exceeds "
       << options.residual_threshold;
    throw Error(ErrorKind::PoorFit, os.str(), {est.fit_residual});
  }
  est.omega_sb = fit.frequency;
  est.frequency_valid = true;
  return est;
}

namespace {

DriveSweep scan(const DrivenSystem& system, DriveVariant variant, double amp_d,
                Interaction interaction, const std::vector<double>& grid,
                const std::vector<double>& lengths, const PulseOptions& options, int threads) {
  if (grid.size() < 3) throw Error(ErrorKind::InvalidParameter, "drive grid needs >= 3 points");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw Error(ErrorKind::InvalidParameter, "drive grid must be sorted");
  DriveSweep sweep;
  sweep.points.resize(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    DriveSweepPoint& p = sweep.points[i];
    p.series = pulse_length_sweep(system, DriveTone{variant, amp_d, grid[i]}, interaction, lengths,
                                  options);
    p.fit = fit_sinusoid(p.series.flat_lengths, p.series.p_target);
    p.contrast = std::clamp(2.0 * p.fit.amplitude, 0.0, 1.0);
  });

  std::size_t k = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (sweep.points[i].contrast > sweep.points[k].contrast) k = i;
  sweep.omega_opt = grid[k];
  sweep.contrast_opt = sweep.points[k].contrast;
  if (k == 0 || k + 1 == grid.size()) {
    sweep.optimum_on_edge = true;
    return sweep;
  }
  // The inverse contrast of a resonance is quadratic in the detuning.
  double x0 = grid[k - 1], x1 = grid[k], x2 = grid[k + 1];
  double c0 = sweep.points[k - 1].contrast, c1 = sweep.points[k].contrast,
         c2 = sweep.points[k + 1].contrast;
  auto vertex = [&](double y0, double y1, double y2, double& xv, double& yv) {
    double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
    double curv = (d12 - d01) / (x2 - x0);
    if (curv == 0.0) return false;
    double slope = d01 - curv * (x0 + x1);
    xv = -slope / (2.0 * curv);
    yv = y1 + (xv - x1) * (d01 + curv * (xv - x0));
    return std::isfinite(xv);
  };
  double xv = x1, yv = c1;
  if (c0 > 0 && c1 > 0 && c2 > 0 && vertex(1.0 / c0, 1.0 / c1, 1.0 / c2, xv, yv) && yv > 0) {
    yv = 1.0 / yv;
  } else if (!vertex(c0, c1, c2, xv, yv)) {
    xv = x1;
    yv = c1;
  }
  sweep.omega_opt = std::clamp(xv, x0, x2);
  sweep.contrast_opt = std::clamp(std::max(yv, c1), 0.0, 1.0);
  return sweep;
}

}  // namespace

DriveSweep drive_frequency_sweep(const DrivenSystem& system, DriveVariant variant, double amp_d,
                                 Interaction interaction, const std::vector<double>& omega_grid,
                                 const std::vector<double>& lengths, const PulseOptions& options,
                                 int threads, bool allow_edge) {
  DriveSweep sweep = scan(system, variant, amp_d, interaction, omega_grid, lengths, options, threads);
  if (sweep.optimum_on_edge && !allow_edge) {
    std::ostringstream os;
    os << "contrast maximum at grid edge omega_d = " << sweep.omega_opt << " Hz";
    throw Error(ErrorKind::Bracket, os.str(), {sweep.omega_opt});
  }
  return sweep;
}

double static_transition(const DrivenSystem& system, Interaction interaction) {
  if (interaction == Interaction::BeamSplitter)
    return std::abs(system.energy({1, 0}) - system.energy({0, 1}));
  return system.energy({1, 1}) - system.energy({0, 0});
}

double predicted_drive_frequency(const DrivenSystem& system, Interaction interaction,
                                 DriveVariant variant, double amp_d) {
  SidebandPrediction pred =
      self_consistent_matching(system.anharmonicity_model(), amp_d, interaction, variant);
  return 0.5 * (static_transition(system, interaction) + pred.delta_omega_t);
}

MatchedTransfer find_matched_transfer(const DrivenSystem& system, Interaction interaction,
                                      DriveVariant variant, double amp_d,
                                      const SearchOptions& options) {
  MatchedTransfer out;
  out.amp_d = amp_d;
  out.static_transition = static_transition(system, interaction);
  if (amp_d == 0.0) {
    out.omega_d_opt = 0.5 * out.static_transition;
    return out;
  }

  SidebandPrediction pred =
      self_consistent_matching(system.anharmonicity_model(), amp_d, interaction, variant);
  double rate = pred.omega_sb;
  double center = 0.5 * (out.static_transition + pred.delta_omega_t);
  double half = 2.0 * rate + 0.1 * std::abs(pred.delta_omega_t);

  auto lengths_for = [&](double r, double periods, int samples) {
    return linspace(0.0, periods / r, samples);
  };
  auto run = [&](const std::vector<double>& grid, const std::vector<double>& lengths) {
    DriveSweep s = scan(system, variant, amp_d, interaction, grid, lengths, options.pulse,
                        options.threads);
    out.evaluations += static_cast<int>(grid.size());
    for (auto& p : s.points) {
      out.max_norm_drift = std::max(out.max_norm_drift, p.series.max_norm_drift);
      out.scanned.push_back(p);
    }
    return s;
  };

  // Coarse scan, re-centred until the maximum is bracketed.
  std::vector<double> lengths = lengths_for(rate, options.window_periods, options.length_samples);
  DriveSweep s = run(linspace(center - half, center + half, options.coarse_points), lengths);
  for (int r = 0; s.optimum_on_edge; ++r) {
    if (r >= options.max_recentres)
      throw Error(ErrorKind::Bracket, "resonance not bracketed after re-centring", {s.omega_opt});
    center = s.omega_opt;
    s = run(linspace(center - half, center + half, options.coarse_points), lengths);
  }

  auto best_point = [&](const DriveSweep& sw) {
    const DriveSweepPoint* b = &sw.points.front();
    for (const auto& p : sw.points)
      if (p.contrast > b->contrast) b = &p;
    return b;
  };
  const DriveSweepPoint* bp = best_point(s);
  if (bp->contrast > 0.3 && bp->fit.frequency > 0) rate = bp->fit.frequency;

  // Two zoom rounds around the interpolated optimum.
  for (double step : {rate / 4.0, rate / 12.0}) {
    int half_n = options.zoom_points / 2;
    lengths = lengths_for(rate, options.window_periods, options.length_samples);
    DriveSweep z = run(linspace(s.omega_opt - half_n * step, s.omega_opt + half_n * step,
                                2 * half_n + 1),
                       lengths);
    for (int r = 0; z.optimum_on_edge && r < options.max_recentres; ++r)
      z = run(linspace(z.omega_opt - half_n * step, z.omega_opt + half_n * step, 2 * half_n + 1),
              lengths);
    if (z.optimum_on_edge) throw Error(ErrorKind::Bracket, "zoom failed to bracket the optimum");
    s = z;
    bp = best_point(s);
    if (bp->contrast > 0.3 && bp->fit.frequency > 0) rate = bp->fit.frequency;
  }

  out.omega_d_opt = s.omega_opt;
  out.series = pulse_length_sweep(system, DriveTone{variant, amp_d, out.omega_d_opt}, interaction,
                                  lengths_for(rate, 1.5, 64), options.pulse);
  out.max_norm_drift = std::max(out.max_norm_drift, out.series.max_norm_drift);
  RabiEstimate est = extract_rabi(out.series.flat_lengths, out.series.p_target);
  out.omega_sb = est.omega_sb;
  out.contrast = est.contrast;
  out.delta_omega_t = 2.0 * out.omega_d_opt - out.static_transition;

  // Pulse-length optimisation around the fitted maximum of P_target.
  SinusoidFit fit = fit_sinusoid(out.series.flat_lengths, out.series.p_target);
  double period = 1.0 / out.omega_d_opt;
  double tau = -fit.phase / (kTwoPi * fit.frequency);
  double rabi_period = 1.0 / fit.frequency;
  tau -= std::floor(tau / rabi_period) * rabi_period;
  long long n0 = std::llround(tau / period);
  long long spread = std::max(2LL, std::llround(0.01 * rabi_period / period));
  long long n_lo = std::max(0LL, n0 - spread), n_hi = n0 + spread;
  StroboscopicPulse pulse(system, DriveTone{variant, amp_d, out.omega_d_opt},
                          default_transfer(interaction, options.pulse.from_resonator),
                          options.pulse, n_hi);
  auto top = std::max_element(out.series.p_target.begin(), out.series.p_target.end());
  double best = *top;
  out.best_flat_s = out.series.flat_lengths[top - out.series.p_target.begin()];
  long long stride = std::max(1LL, (n_hi - n_lo) / 40);
  for (long long n = n_lo; n <= n_hi; n += stride) {
    double p = pulse.populations(n).second;
    if (p > best) {
      best = p;
      out.best_flat_s = static_cast<double>(n) * period;
    }
  }
  out.transfer_fidelity = best;
  return out;
}

std::vector<RateShiftRow> rate_vs_shift_run(const DrivenSystem& system, Interaction interaction,
                                            DriveVariant variant,
                                            const std::vector<double>& amp_ladder,
                                            const SearchOptions& options) {
  std::vector<RateShiftRow> rows;
  for (double amp : amp_ladder) {
    RateShiftRow row;
    row.amp_d = amp;
    try {
      MatchedTransfer m = find_matched_transfer(system, interaction, variant, amp, options);
      row.omega_d_opt = m.omega_d_opt;
      if (amp > 0.0) {
        row.delta_omega_t = m.delta_omega_t;
        row.omega_sb = m.omega_sb;
        row.contrast = m.contrast;
        row.transfer_fidelity = m.transfer_fidelity;
      }
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sideband
