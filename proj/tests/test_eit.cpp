#include <doctest.h>

#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "sideband/eit.hpp"
#include "sideband/error.hpp"

using namespace sideband;

namespace {

using Complex = std::complex<double>;

EitParams device(Interaction it, double omega_sb) {
  EitParams p;
  p.omega_t_shifted = 6.8112e9;
  p.omega_r = 4.0755e9;
  p.A_t = 150e6;
  p.A_tr = 497e3;
  p.omega_sb = omega_sb;
  p.kappa = 10.2e6;
  p.gamma = 129e3;
  p.amp_p = 10e3;
  p.interaction = it;
  p.dims = {3, 4};
  return p;
}

// Linearised input-output response of the two coupled modes.
Complex linear_s21(const EitParams& p, double omega_p) {
  const Complex i(0.0, 1.0);
  const double delta_b = p.omega_r - omega_p;
  const double g2 = 0.25 * p.omega_sb * p.omega_sb;
  Complex denom;
  if (p.interaction == Interaction::BeamSplitter) {
    double delta_a = delta_b + 2.0 * p.delta_omega_mat;
    denom = delta_b - 0.5 * i * p.kappa - g2 / (delta_a - 0.5 * i * p.gamma);
  } else {
    double delta_a = 2.0 * p.delta_omega_mat - delta_b;
    denom = delta_b - 0.5 * i * p.kappa - g2 / (delta_a + 0.5 * i * p.gamma);
  }
  Complex b = -0.5 * p.amp_p / denom;
  return i * (0.5 * p.kappa) * b / (0.5 * p.amp_p);
}

Complex s21_at(const EitParams& p, double omega_p, const SteadyStateOptions& o = {}) {
  return transmission(steady_state(rotating_frame_hamiltonian(p, omega_p), p.kappa, p.gamma, o).rho, p);
}

// Quadratic two-mode system below the parametric threshold.
EitParams quadratic(Interaction it) {
  EitParams p = device(it, 1e6);
  p.A_t = 0.0;
  p.A_tr = 0.0;
  p.gamma = 3e6;
  p.dims = {5, 6};
  return p;
}

std::vector<double> grid(double centre, double half_span, int points) {
  std::vector<double> g;
  for (int k = 0; k < points; ++k) g.push_back(centre - half_span + 2.0 * half_span * k / (points - 1));
  return g;
}

double half_width(const EitParams& p) {
  // Distance from the window centre to the nearest transmission maximum.
  std::vector<double> g = grid(p.omega_r, 8e6, 321);
  Spectrum s = spectrum(p, g);
  std::size_t centre = g.size() / 2;
  std::size_t k = centre;
  while (k + 1 < g.size() && std::abs(s.s21[k + 1]) > std::abs(s.s21[k])) ++k;
  return g[k] - g[centre];
}

}  // namespace

TEST_CASE("rotating-frame Hamiltonian") {
  EitParams p = device(Interaction::BeamSplitter, 2e6);
  FockOperator h = rotating_frame_hamiltonian(p, p.omega_r + 1e6);
  CHECK((h.data - h.data.adjoint()).norm() == 0.0);
  p.omega_sb = 0.0;
  p.amp_p = 0.0;
  FockOperator d = rotating_frame_hamiltonian(p, p.omega_r + 1e6);
  Eigen::MatrixXcd off = d.data;
  off.diagonal().setZero();
  CHECK(off.norm() == 0.0);
  p.kappa = 0.0;
  CHECK_THROWS_AS(rotating_frame_hamiltonian(p, p.omega_r), Error);
}

TEST_CASE("bare cavity transmission") {
  EitParams p = device(Interaction::BeamSplitter, 0.0);
  CHECK(std::abs(s21_at(p, p.omega_r)) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(s21_at(p, p.omega_r + 0.5 * p.kappa)) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-5));
}

TEST_CASE("weak-probe spectra follow linear response") {
  for (Interaction it : {Interaction::BeamSplitter, Interaction::TwoModeSqueezing}) {
    EitParams p = quadratic(it);
    p.delta_omega_mat = 0.3e6;
    for (double dp : {-6e6, -1e6, 0.0, 0.4e6, 3e6}) {
      Complex s = s21_at(p, p.omega_r + dp);
      CHECK(std::abs(s - linear_s21(p, p.omega_r + dp)) < 1e-4);
    }
  }
  EitParams p = device(Interaction::BeamSplitter, 2e6);
  p.delta_omega_mat = 0.3e6;
  for (double dp : {-6e6, 0.0, 0.4e6})
    CHECK(std::abs(s21_at(p, p.omega_r + dp) - linear_s21(p, p.omega_r + dp)) < 1e-4);
}

TEST_CASE("steady-state properties") {
  EitParams p = device(Interaction::BeamSplitter, 4e6);
  p.amp_p = 3e6;
  p.dims = {3, 6};
  FockOperator h = rotating_frame_hamiltonian(p, p.omega_r - 0.7e6);
  SteadyState lu = steady_state(h, p.kappa, p.gamma);
  CHECK(std::abs(lu.rho.trace() - 1.0) < 1e-12);
  CHECK((lu.rho - lu.rho.adjoint()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(lu.rho);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);
  CHECK(lu.residual_norm < 1e-10 * lu.liouvillian_norm);

  SteadyStateOptions ns;
  ns.method = SteadyStateMethod::NullSpace;
  SteadyState svd = steady_state(h, p.kappa, p.gamma, ns);
  CHECK(trace_distance(lu.rho, svd.rho) < 1e-8);
  CHECK(svd.singular_gap < 1e-6);

  CHECK_THROWS_AS(steady_state(h, p.kappa, 0.0), Error);
}

TEST_CASE("steady state is the long-time limit of the master equation") {
  EitParams p = device(Interaction::BeamSplitter, 2e6);
  p.A_t = 20e6;
  p.gamma = 3e6;
  p.amp_p = 2e6;
  p.dims = {2, 4};
  FockOperator h = rotating_frame_hamiltonian(p, p.omega_r + 0.5e6);
  SteadyStateOptions ns;
  ns.method = SteadyStateMethod::NullSpace;
  SteadyState ss = steady_state(h, p.kappa, p.gamma, ns);
  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(8, 8);
  rho0(0, 0) = 1.0;
  Eigen::MatrixXcd rho = integrate_master_equation(h, p.kappa, p.gamma, rho0, 12e-6, 0.5e-9);
  CHECK(trace_distance(rho, ss.rho) < 1e-6);
}

TEST_CASE("vacuum without probe") {
  EitParams p = device(Interaction::BeamSplitter, 4e6);
  p.amp_p = 0.0;
  SteadyState ss = steady_state(rotating_frame_hamiltonian(p, p.omega_r), p.kappa, p.gamma);
  CHECK(std::abs(ss.rho(0, 0) - 1.0) < 1e-10);
  CHECK_THROWS_AS(transmission(ss.rho, p), Error);
}

TEST_CASE("transparency window") {
  for (Interaction it : {Interaction::BeamSplitter, Interaction::TwoModeSqueezing}) {
    double prev_width = 0.0, prev_depth = 1.0;
    for (double sb : {2e6, 4e6, 6e6}) {
      EitParams p = device(it, sb);
      double w = half_width(p);
      CHECK(w > prev_width);
      prev_width = w;
      double centre = std::abs(s21_at(p, p.omega_r));
      CHECK(centre < prev_depth);
      prev_depth = centre;
      CHECK(centre < std::abs(s21_at(p, p.omega_r + 0.5 * sb)));
    }
  }
}

TEST_CASE("cross-Kerr only matters beyond the linear response") {
  EitParams p = device(Interaction::BeamSplitter, 1.2e6);
  EitParams q = p;
  q.A_tr = 0.0;
  std::vector<double> g = grid(p.omega_r, 4e6, 9);
  Spectrum a = spectrum(p, g), b = spectrum(q, g);
  double weak = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) weak = std::max(weak, std::abs(a.s21[k] - b.s21[k]));
  CHECK(weak < 1e-3);
  p.amp_p = q.amp_p = 3e6;
  a = spectrum(p, g);
  b = spectrum(q, g);
  double strong = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) strong = std::max(strong, std::abs(a.s21[k] - b.s21[k]));
  CHECK(strong > 0.01);
}

TEST_CASE("transmission is linear in a weak probe") {
  EitParams p = device(Interaction::BeamSplitter, 4e6);
  EitParams q = p;
  q.amp_p = 1e3;
  for (double dp : {-3e6, 0.0, 1.5e6})
    CHECK(std::abs(s21_at(p, p.omega_r + dp) - s21_at(q, q.omega_r + dp)) < 1e-4);
}

TEST_CASE("spectrum symmetry at zero matching detuning") {
  for (Interaction it : {Interaction::BeamSplitter, Interaction::TwoModeSqueezing}) {
    EitParams p = it == Interaction::BeamSplitter ? device(it, 4e6) : quadratic(it);
    p.A_t = p.A_tr = 0.0;
    p.dims = {5, 6};
    for (double dp : {0.5e6, 2e6, 7e6})
      CHECK(std::abs(std::abs(s21_at(p, p.omega_r + dp)) - std::abs(s21_at(p, p.omega_r - dp))) <
            1e-6);
  }
}

TEST_CASE("truncation escalation") {
  EitParams p = device(Interaction::BeamSplitter, 2e6);
  p.amp_p = 5e6;
  p.dims = {3, 4};
  std::vector<double> g = grid(p.omega_r, 2e6, 5);
  Spectrum s = spectrum(p, g);
  CHECK(s.dims.n_r > 4);
  CHECK(s.failures.empty());
  Dims d = adequate_dims(p, g);
  CHECK(d == s.dims);
  EitParams q = p;
  q.dims = s.dims;
  SteadyState ss = steady_state(rotating_frame_hamiltonian(q, p.omega_r), q.kappa, q.gamma);
  CHECK(top_resonator_population(ss.rho, q.dims) < 1e-4);
  SpectrumOptions fixed;
  fixed.auto_escalate = false;
  CHECK(spectrum(p, g, fixed).dims == p.dims);
}

TEST_CASE("passive response and determinism") {
  EitParams p = device(Interaction::BeamSplitter, 6e6);
  p.amp_p = 1e6;
  std::vector<double> g = grid(p.omega_r, 10e6, 21);
  SpectrumOptions one, many;
  many.threads = 3;
  Spectrum a = spectrum(p, g, one), b = spectrum(p, g, many);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(std::abs(a.s21[k]) <= 1.0 + 1e-9);
    CHECK(a.s21[k] == b.s21[k]);
  }
  CHECK_THROWS_AS(spectrum(p, {}), Error);
}

TEST_CASE("parameter access by name") {
  EitParams p = device(Interaction::BeamSplitter, 2e6);
  for (const auto& name : EitParams::field_names()) p.set(name, p.get(name) + 1.0);
  CHECK(p.get("omega_sb_hz") == 2e6 + 1.0);
  CHECK_THROWS_AS(p.get("chi_hz"), Error);
  CHECK(p.eit_regime());
  CHECK(p.probe_occupancy() == doctest::Approx(std::pow((10e3 + 1.0) / (10.2e6 + 1.0), 2)));
}
