#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sideband/error.hpp"
#include "sideband/fitting.hpp"

using namespace sideband;

namespace {

EitParams truth(double omega_sb) {
  EitParams p;
  p.omega_t_shifted = 6.8112e9;
  p.omega_r = 4.0755e9;
  p.A_t = 150e6;
  p.A_tr = 0.0;
  p.omega_sb = omega_sb;
  p.delta_omega_mat = 0.2e6;
  p.kappa = 10.2e6;
  p.gamma = 129e3;
  p.amp_p = 10e3;
  p.dims = {2, 3};
  return p;
}

std::vector<double> grid(double centre, double half_span, int points) {
  std::vector<double> g;
  for (int k = 0; k < points; ++k) g.push_back(centre - half_span + 2.0 * half_span * k / (points - 1));
  return g;
}

FitProblem linear_problem(const EitParams& p, const Spectrum& data, double perturb) {
  FitProblem f;
  f.data = data;
  f.model = p;
  f.free = {FreeParameter::around("omega_sb_hz", p.omega_sb * (1.0 + perturb)),
            FreeParameter::within("delta_omega_mat_hz", p.delta_omega_mat + perturb * 1e6, 3e6, 1e6),
            FreeParameter::within("omega_r_hz", p.omega_r - perturb * 1e6, 5e6, 1e6),
            FreeParameter::around("kappa_hz", p.kappa * (1.0 - perturb)),
            FreeParameter::around("gamma_hz", p.gamma * (1.0 + perturb))};
  return f;
}

}  // namespace

TEST_CASE("Levenberg-Marquardt on an exponential decay") {
  std::vector<double> t, y;
  for (int k = 0; k < 30; ++k) {
    t.push_back(0.1 * k);
    y.push_back(2.5 * std::exp(-1.3 * t.back()) + 0.4);
  }
  ResidualFn f = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) r[k] = x[0] * std::exp(-x[1] * t[k]) + x[2] - y[k];
    return r;
  };
  Eigen::Vector3d lo(0, 0, -5), hi(10, 10, 5);
  LeastSquaresResult r = levenberg_marquardt(f, Eigen::Vector3d(1.0, 3.0, 0.0),
                                             Eigen::Vector3d::Ones(), lo, hi);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(2.5).epsilon(1e-8));
  CHECK(r.x[1] == doctest::Approx(1.3).epsilon(1e-8));
  CHECK(r.x[2] == doctest::Approx(0.4).epsilon(1e-8));
  for (std::size_t k = 1; k < r.accepted_costs.size(); ++k)
    CHECK(r.accepted_costs[k] <= r.accepted_costs[k - 1]);

  Eigen::MatrixXd jn = numerical_jacobian(f, r.x, f(r.x), Eigen::Vector3d::Ones(), 1e-6, lo, hi);
  CHECK(jn(0, 2) == doctest::Approx(1.0));
  CHECK(jn(5, 0) == doctest::Approx(std::exp(-1.3 * 0.5)).epsilon(1e-8));

  // Bounds are respected.
  Eigen::Vector3d tight(10, 1.0, 5);
  LeastSquaresResult b = levenberg_marquardt(f, Eigen::Vector3d(1.0, 0.5, 0.0),
                                             Eigen::Vector3d::Ones(), lo, tight);
  CHECK(b.x[1] <= 1.0);
}

TEST_CASE("noiseless round trip") {
  EitParams p = truth(4e6);
  Spectrum data = spectrum(p, grid(p.omega_r, 15e6, 121));
  FitProblem f = linear_problem(p, data, 0.1);
  FitResult r = fit_spectrum(f);
  CHECK(r.converged);
  CHECK(r.residual_norm < 1e-10);
  for (const char* name : {"omega_sb_hz", "kappa_hz", "gamma_hz"})
    CHECK(r.value(name) == doctest::Approx(p.get(name)).epsilon(1e-3));
  CHECK(std::abs(r.value("delta_omega_mat_hz") - p.delta_omega_mat) < 1e-3 * p.delta_omega_mat);
  CHECK(std::abs(r.value("omega_r_hz") - p.omega_r) < 1e3);
  CHECK(r.value("scale") == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(r.value("baseline_re")) < 1e-6);
  for (std::size_t k = 1; k < r.accepted_costs.size(); ++k)
    CHECK(r.accepted_costs[k] <= r.accepted_costs[k - 1]);
  for (const auto& e : r.estimates) CHECK(e.stderr_value >= 0.0);
  for (const auto& fp : f.free) {
    CHECK(r.value(fp.name) >= fp.lower);
    CHECK(r.value(fp.name) <= fp.upper);
  }

  SUBCASE("magnitude target") {
    f.target = FitTarget::Magnitude;
    FitResult m = fit_spectrum(f);
    CHECK(m.value("omega_sb_hz") == doctest::Approx(p.omega_sb).epsilon(1e-3));
    CHECK(m.residual_norm < 1e-10);
  }
}

TEST_CASE("cross-Kerr is not identifiable in linear response") {
  EitParams p = truth(2e6);
  p.A_t = 150e6;
  p.A_tr = 497e3;
  p.dims = {3, 4};
  Spectrum data = with_noise(spectrum(p, grid(p.omega_r, 15e6, 61)), 0.01, 17);
  FitProblem f = linear_problem(p, data, 0.0);
  f.free.push_back(FreeParameter{"A_tr_hz", 300e3, 0.0, 3e6, std::nullopt});
  bool unidentified = false;
  try {
    FitResult r = fit_spectrum(f);
    MESSAGE("A_tr = " << r.value("A_tr_hz") << " +- " << r.stderr_of("A_tr_hz"));
    unidentified = r.stderr_of("A_tr_hz") > r.value("A_tr_hz");
  } catch (const Error& e) {
    MESSAGE(std::string(e.what()));
    unidentified = e.kind() == ErrorKind::Identifiability;
  }
  CHECK(unidentified);
}

TEST_CASE("unbiased at small noise") {
  EitParams p = truth(2e6);
  Spectrum clean = spectrum(p, grid(p.omega_r, 15e6, 121));
  std::vector<double> bias, err;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    FitResult r = fit_spectrum(linear_problem(p, with_noise(clean, 0.01, seed), 0.1));
    bias.push_back(r.value("omega_sb_hz") - p.omega_sb);
    err.push_back(r.stderr_of("omega_sb_hz"));
    CHECK(std::abs(bias.back()) < 0.02 * p.omega_sb);
    CHECK(std::abs(r.value("delta_omega_mat_hz") - p.delta_omega_mat) < 50e3);
  }
  double mean_bias = std::accumulate(bias.begin(), bias.end(), 0.0) / bias.size();
  double mean_err = std::accumulate(err.begin(), err.end(), 0.0) / err.size();
  MESSAGE("mean bias " << mean_bias << " mean stderr " << mean_err);
  CHECK(std::abs(mean_bias) < mean_err);
}

TEST_CASE("two-stage calibration without noise") {
  EitParams p = truth(1.2e6);
  p.A_tr = 497e3;
  p.dims = {3, 8};
  std::vector<double> g = grid(p.omega_r, 12e6, 41);
  Spectrum lin = spectrum(p, g);
  EitParams strong = p;
  strong.amp_p = 4.35e6;
  Spectrum nonlin = spectrum(strong, g);
  EitParams start = p;
  start.omega_sb *= 1.1;
  start.kappa *= 0.9;
  start.gamma *= 1.1;
  CalibrationOptions o;
  o.amp_p_guess_hz = 3e6;
  o.A_tr_guess_hz = 300e3;
  Calibration c = calibrate_cross_anharmonicity(lin, nonlin, start, o);
  CHECK(c.stage1.value("omega_sb_hz") == doctest::Approx(p.omega_sb).epsilon(1e-3));
  CHECK(c.stage1.fitted.A_tr == 0.0);
  CHECK(c.stage1.fitted.amp_p == 10e3);
  CHECK(c.stage2.value("A_tr_hz") == doctest::Approx(497e3).epsilon(1e-3));
  CHECK(c.stage2.value("amp_p_hz") == doctest::Approx(4.35e6).epsilon(1e-3));
  CHECK(c.stage2.stderr_of("A_tr_hz") < c.stage2.value("A_tr_hz"));
}

TEST_CASE("problem validation") {
  EitParams p = truth(2e6);
  Spectrum data = spectrum(p, grid(p.omega_r, 15e6, 41));
  FitProblem f = linear_problem(p, data, 0.0);
  FitProblem dup = f;
  dup.free.push_back(dup.free.front());
  CHECK_THROWS_AS(dup.validate(), Error);
  FitProblem both = f;
  both.fixed["kappa_hz"] = 10e6;
  CHECK_THROWS_AS(both.validate(), Error);
  FitProblem unknown = f;
  unknown.free.push_back(FreeParameter::around("chi_hz", 1.0));
  CHECK_THROWS_AS(unknown.validate(), Error);
  FitProblem outside = f;
  outside.free[0].initial = 10 * outside.free[0].upper;
  CHECK_THROWS_AS(outside.validate(), Error);
  FitProblem few = f;
  few.data.omega_p.resize(10);
  few.data.s21.resize(10);
  CHECK_THROWS_AS(few.validate(), Error);
  CHECK_NOTHROW(f.validate());

  FitProblem capped = f;
  capped.free[0].initial = 1.3 * p.omega_sb;
  capped.solver.max_iterations = 1;
  try {
    fit_spectrum(capped);
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoConvergence);
    CHECK(std::string(e.what()).find("omega_sb_hz=") != std::string::npos);
  }
}

TEST_CASE("rate-shift line fit") {
  const double slope = 0.05299;
  std::vector<RateShiftPoint> pts;
  for (double s : {-1e6, -2.5e6, -4e6, -7e6}) pts.push_back({s, slope * std::abs(s)});
  LineFit f = rate_shift_line_fit(pts, slope);
  CHECK(f.slope == doctest::Approx(slope).epsilon(1e-14));
  CHECK(f.slope_error < 1e-12);
  CHECK(std::abs(*f.relative_deviation) < 1e-12);
  pts.resize(2);
  CHECK_THROWS_AS(rate_shift_line_fit(pts), Error);
  CHECK_THROWS_AS(rate_shift_line_fit({{0, 1}, {0, 2}, {0, 3}}), Error);
}

TEST_CASE("noise is reproducible") {
  EitParams p = truth(2e6);
  Spectrum s = spectrum(p, grid(p.omega_r, 5e6, 11));
  Spectrum a = with_noise(s, 0.01, 4), b = with_noise(s, 0.01, 4), c = with_noise(s, 0.01, 5);
  CHECK(a.s21 == b.s21);
  CHECK(a.s21 != c.s21);
  CHECK(a.sigma.size() == s.omega_p.size());
}
