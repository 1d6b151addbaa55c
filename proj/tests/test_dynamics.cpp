#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "sideband/dynamics.hpp"
#include "sideband/error.hpp"

using namespace sideband;

namespace {

const NormalModeParams kNormal = normal_mode_transform({6.8131e9, 4.0823e9, 0.1207e9, 137.4e6});

const DrivenSystem& small_system() {
  static const DrivenSystem sys = DrivenSystem::from_normal_modes(kNormal, {4, 4});
  return sys;
}

Eigen::MatrixXcd expm_hermitian(const Eigen::MatrixXcd& h_hz, double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h_hz);
  Eigen::VectorXcd phases =
      (es.eigenvalues() * (-kTwoPi * t)).unaryExpr([](double p) { return std::polar(1.0, p); });
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// Exponential midpoint rule with step h.
Eigen::VectorXcd midpoint_evolve(const DrivenSystem& sys, const DriveSpec& drive,
                                 Eigen::VectorXcd psi, double t_end, double h) {
  const long long steps = std::llround(t_end / h);
  for (long long s = 0; s < steps; ++s) {
    DriveCoefficients c = drive.at((s + 0.5) * h);
    Eigen::MatrixXcd hm = sys.h_hz() + c.a * sys.a() + c.a_dag * sys.a().adjoint();
    psi = expm_hermitian(0.5 * (hm + hm.adjoint()), h) * psi;
  }
  return psi;
}

Eigen::VectorXcd rk4(const DrivenSystem& sys, const DriveSpec& drive, const Eigen::VectorXcd& psi0,
                     double t_end, double dt) {
  Eigen::MatrixXcd psi = psi0;
  rk4_evolve(sys, drive, 0.0, 0.0, t_end, dt, psi);
  return psi.col(0);
}

}  // namespace

TEST_CASE("pulse envelope") {
  PulseEnvelope e{10e-9, 50e-9};
  CHECK(e.duration() == doctest::Approx(70e-9));
  CHECK(e.value(0.0) == 0.0);
  CHECK(e.value(1e-15) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(e.value(10e-9) == doctest::Approx(1.0));
  CHECK(e.value(35e-9) == 1.0);
  CHECK(e.value(70e-9) == 0.0);
  CHECK(e.value(5e-9) == doctest::Approx(e.value(65e-9)));
  double prev = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double v = PulseEnvelope::ramp(k * 1e-10, 10e-9);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("drive variants split into co- and counter-rotating parts") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t(0.0, 1e-6);
  for (int k = 0; k < 10; ++k) {
    double tk = t(rng);
    DriveCoefficients f = drive_term(DriveVariant::Full, 300e6, 5.44e9, tk);
    DriveCoefficients r = drive_term(DriveVariant::RwaOnly, 300e6, 5.44e9, tk);
    DriveCoefficients c = drive_term(DriveVariant::CrOnly, 300e6, 5.44e9, tk);
    CHECK(std::abs(f.a - r.a - c.a) < 1e-6);
    CHECK(std::abs(f.a_dag - r.a_dag - c.a_dag) < 1e-6);
    CHECK(std::abs(r.a_dag - std::conj(r.a)) < 1e-9);
  }
}

TEST_CASE("RK4 against the exact propagator of the static Hamiltonian") {
  const DrivenSystem& sys = small_system();
  DriveSpec none;
  Eigen::VectorXcd psi0 = (sys.state({1, 0}) + sys.state({0, 1})) / std::sqrt(2.0);
  Eigen::VectorXcd exact = expm_hermitian(sys.h_hz(), 1e-9) * psi0;
  Eigen::VectorXcd approx = rk4(sys, none, psi0, 1e-9, 0.1e-12);
  CHECK((exact - approx).norm() < 1e-8);
}

TEST_CASE("RK4 against a segment-wise exponential integrator under drive") {
  const DrivenSystem& sys = small_system();
  DriveSpec drive{{DriveTone{DriveVariant::Full, 300e6, 5.4417e9}}, std::nullopt};
  Eigen::VectorXcd psi0 = sys.state({1, 1});
  const double t = 0.5e-9;
  Eigen::VectorXcd coarse = midpoint_evolve(sys, drive, psi0, t, 0.02e-12);
  Eigen::VectorXcd fine = midpoint_evolve(sys, drive, psi0, t, 0.01e-12);
  Eigen::VectorXcd oracle = (4.0 * fine - coarse) / 3.0;
  CHECK((rk4(sys, drive, psi0, t, 0.1e-12) - oracle).norm() < 1e-6);
}

TEST_CASE("RK4 converges at fourth order") {
  const DrivenSystem& sys = small_system();
  DriveSpec drive{{DriveTone{DriveVariant::Full, 300e6, 5.4417e9}}, std::nullopt};
  Eigen::VectorXcd psi0 = sys.state({1, 1});
  const double t = 0.2e-9;
  Eigen::VectorXcd ref = rk4(sys, drive, psi0, t, 0.025e-12);
  double e1 = (rk4(sys, drive, psi0, t, 0.4e-12) - ref).norm();
  double e2 = (rk4(sys, drive, psi0, t, 0.2e-12) - ref).norm();
  CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.2));
}

TEST_CASE("propagation guards and norm conservation") {
  const DrivenSystem& sys = small_system();
  DriveSpec drive{{DriveTone{DriveVariant::Full, 300e6, 5.4417e9}}, PulseEnvelope{10e-9, 5e-9}};
  PropagateOptions big;
  big.dt = 5e-12;
  CHECK_THROWS_AS(propagate(sys, drive, sys.state({1, 1}), 25e-9, big), Error);
  CHECK_THROWS_AS(propagate(sys, drive, Eigen::VectorXcd::Zero(4), 25e-9), Error);

  SimTrajectory traj = propagate(sys, drive, sys.state({1, 1}), 25e-9);
  CHECK(traj.max_norm_drift < 1e-8);
  CHECK(traj.times.back() == doctest::Approx(25e-9));
  CHECK(traj.populations.front()[2] == doctest::Approx(1.0));
}

TEST_CASE("stroboscopic pulse matches direct integration") {
  const DrivenSystem& sys = small_system();
  DriveTone tone{DriveVariant::Full, 300e6, 5.4417e9};
  TransferStates states = default_transfer(Interaction::TwoModeSqueezing);
  PulseOptions opt;
  StroboscopicPulse pulse(sys, tone, states, opt, 300);
  CHECK(pulse.period_unitarity_error() < 1e-7);
  CHECK(pulse.max_norm_drift() < 1e-8);
  for (long long n : {0LL, 137LL, 300LL}) {
    DriveSpec spec{{tone}, PulseEnvelope{opt.rise_s, n * pulse.period()}};
    PropagateOptions po;
    po.labels = {states.initial, states.target};
    po.output_every = 1000000;
    SimTrajectory traj = propagate(sys, spec, sys.state(states.initial),
                                   spec.envelope->duration(), po);
    auto [pi, pt] = pulse.populations(n);
    CHECK(pi == doctest::Approx(traj.populations.back()[0]).epsilon(1e-6));
    CHECK(pt == doctest::Approx(traj.populations.back()[1]).epsilon(1e-6));
  }
  CHECK_THROWS_AS(pulse.populations(1000), Error);
}

TEST_CASE("sinusoid fit") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> amp(0.1, 0.5), freq(1e5, 5e5), ph(-3.0, 3.0);
  for (int k = 0; k < 10; ++k) {
    double a = amp(rng), f = freq(rng), p = ph(rng);
    std::vector<double> t, y;
    for (int i = 0; i < 48; ++i) {
      t.push_back(i * 2.5e-6 / 47);
      y.push_back(a * std::cos(kTwoPi * f * t.back() + p) + 0.5);
    }
    SinusoidFit fit = fit_sinusoid(t, y);
    CHECK(fit.frequency == doctest::Approx(f).epsilon(1e-7));
    CHECK(fit.amplitude == doctest::Approx(a).epsilon(1e-7));
    CHECK(fit.offset == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(fit.rms_residual < 1e-8);
  }
}

TEST_CASE("Rabi extraction") {
  std::vector<double> t, full, flat, noisy;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 0.3);
  for (int i = 0; i < 64; ++i) {
    t.push_back(i * 1e-7);
    full.push_back(0.5 - 0.5 * std::cos(kTwoPi * 2e5 * t.back()));
    flat.push_back(0.02 * std::cos(kTwoPi * 2e5 * t.back()));
    noisy.push_back(full.back() + n(rng));
  }
  RabiEstimate e = extract_rabi(t, full);
  CHECK(e.frequency_valid);
  CHECK(e.omega_sb == doctest::Approx(2e5).epsilon(1e-6));
  CHECK(e.contrast == doctest::Approx(1.0));
  CHECK(e.transfer_fidelity == doctest::Approx(1.0));
  RabiEstimate low = extract_rabi(t, flat);
  CHECK_FALSE(low.frequency_valid);
  CHECK(low.omega_sb == 0.0);
  CHECK_THROWS_AS(extract_rabi(t, noisy), Error);
}

TEST_CASE("drive-frequency sweep is thread-count independent") {
  const DrivenSystem& sys = small_system();
  double centre = predicted_drive_frequency(sys, Interaction::TwoModeSqueezing, DriveVariant::Full, 300e6);
  std::vector<double> grid{centre - 2e5, centre, centre + 2e5};
  std::vector<double> lengths;
  for (int i = 0; i < 12; ++i) lengths.push_back(i * 4e-7);
  DriveSweep a = drive_frequency_sweep(sys, DriveVariant::Full, 300e6, Interaction::TwoModeSqueezing,
                                       grid, lengths, {}, 1, true);
  DriveSweep b = drive_frequency_sweep(sys, DriveVariant::Full, 300e6, Interaction::TwoModeSqueezing,
                                       grid, lengths, {}, 3, true);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(a.points[i].series.p_target == b.points[i].series.p_target);
    CHECK(a.points[i].series.flat_lengths == b.points[i].series.flat_lengths);
  }
  CHECK(a.omega_opt == b.omega_opt);
  std::vector<double> unsorted{centre + 1e5, centre, centre - 1e5};
  CHECK_THROWS_AS(drive_frequency_sweep(sys, DriveVariant::Full, 300e6,
                                        Interaction::TwoModeSqueezing, unsorted, lengths),
                  Error);
}

TEST_CASE("matched transfer on a small truncation") {
  const DrivenSystem& sys = small_system();
  MatchedTransfer m =
      find_matched_transfer(sys, Interaction::TwoModeSqueezing, DriveVariant::Full, 200e6);
  SidebandPrediction p = self_consistent_matching(sys.anharmonicity_model(), 200e6,
                                                  Interaction::TwoModeSqueezing, DriveVariant::Full);
  CHECK(m.transfer_fidelity > 0.99);
  CHECK(m.contrast > 0.99);
  CHECK(m.max_norm_drift < 1e-8);
  CHECK(m.delta_omega_t < 0.0);
  CHECK(m.omega_sb == doctest::Approx(p.omega_sb).epsilon(0.1));
  CHECK(m.delta_omega_t == doctest::Approx(p.delta_omega_t).epsilon(0.2));
  CHECK(m.series.flat_lengths.size() == 64);
}

TEST_CASE("transfer states and static transitions") {
  CHECK(default_transfer(Interaction::BeamSplitter).initial == StateLabel{1, 0});
  CHECK(default_transfer(Interaction::BeamSplitter, true).initial == StateLabel{0, 1});
  CHECK(default_transfer(Interaction::TwoModeSqueezing).target == StateLabel{0, 0});
  const DrivenSystem& sys = small_system();
  double tms = static_transition(sys, Interaction::TwoModeSqueezing);
  ObservedParams o = sys.spectrum().observed();
  CHECK(tms == doctest::Approx(o.omega_t + o.omega_r - 2.0 * o.A_tr));
  CHECK_THROWS_AS(DrivenSystem(build_h_normal(kNormal, {4, 4}), ladder({4, 5}, Mode::Transmon)),
                  Error);
}
