#include "sideband/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "sideband/error.hpp"
#include "sideband/least_squares.hpp"

namespace sideband {

namespace {

void require(bool ok, ErrorKind kind, const std::string& message) {
  if (!ok) throw Error(kind, message);
}

// Exact matrix elements of x^k on n levels (x built with k extra levels, then cut).
Eigen::MatrixXd quadrature_power(int n, int k) {
  Eigen::MatrixXd lad = ladder_matrix(n + k);
  Eigen::MatrixXd x = lad + lad.transpose();
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n + k, n + k);
  for (int i = 0; i < k; ++i) p = p * x;
  return p.topLeftCorner(n, n);
}

Eigen::MatrixXcd kron(const Eigen::MatrixXd& t, const Eigen::MatrixXd& r) {
  Eigen::MatrixXd out = Eigen::kroneckerProduct(t, r);
  return out.cast<std::complex<double>>();
}

void attach_leakage_warning(FockOperator& h, double tolerance) {
  int excitations = std::min({2, h.dims.n_t - 1, h.dims.n_r - 1});
  if (excitations < 1) return;
  double leak = LabelledSpectrum(h).top_level_leakage(excitations);
  if (leak > tolerance) {
    std::ostringstream os;
    os << "truncation leakage " << leak << " on top Fock levels exceeds " << tolerance
       << " for dims (" << h.dims.n_t << "," << h.dims.n_r << ")";
    h.warnings.push_back(os.str());
  }
}

}  // namespace

void CircuitParams::validate() const {
  require(omega_t0 > 0 && omega_r0 > 0, ErrorKind::InvalidParameter,
          "mode frequencies must be positive");
  require(g >= 0 && chi_t >= 0, ErrorKind::InvalidParameter, "g and chi_t must be non-negative");
  require(omega_t0 != omega_r0, ErrorKind::InvalidParameter,
          "degenerate modes omega_t0 == omega_r0 are not supported");
  require(g < std::abs(omega_t0 - omega_r0), ErrorKind::InvalidParameter,
          "g must be smaller than |omega_t0 - omega_r0|");
  require(chi_t < omega_t0, ErrorKind::InvalidParameter, "chi_t must be smaller than omega_t0");
}

double NormalModeParams::chi_tr() const { return std::sqrt(chi_t * chi_r); }

void NormalModeParams::validate() const {
  require(chi_t >= 0 && chi_r >= 0, ErrorKind::InvalidParameter,
          "normal-mode nonlinearities must be non-negative");
  require(omega_t1 > 0 && omega_r1 > 0, ErrorKind::InvalidParameter,
          "normal-mode frequencies must be positive");
  require(chi_r <= chi_t, ErrorKind::InvalidParameter, "chi_r must not exceed chi_t");
}

void ObservedParams::validate() const {
  require(omega_t > 0 && omega_r > 0, ErrorKind::InvalidParameter,
          "observed frequencies must be positive");
  require(A_t >= 0 && A_r >= 0 && A_tr >= 0, ErrorKind::InvalidParameter,
          "anharmonicities must be non-negative");
}

double ObservedParams::cross_relation_error() const {
  if (A_tr == 0.0) return A_t * A_r == 0.0 ? 0.0 : 1.0;
  return std::abs(A_tr * A_tr - A_t * A_r) / (A_tr * A_tr);
}

Eigen::MatrixXd ladder_matrix(int n) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

FockOperator ladder(Dims dims, Mode mode) {
  int selected = mode == Mode::Transmon ? dims.n_t : dims.n_r;
  require(selected >= 2 && dims.n_t >= 1 && dims.n_r >= 1, ErrorKind::InvalidDimension,
          "ladder needs at least 2 levels in the selected mode");
  FockOperator op{dims, {}, {}};
  if (mode == Mode::Transmon)
    op.data = kron(ladder_matrix(dims.n_t), Eigen::MatrixXd::Identity(dims.n_r, dims.n_r));
  else
    op.data = kron(Eigen::MatrixXd::Identity(dims.n_t, dims.n_t), ladder_matrix(dims.n_r));
  return op;
}

Eigen::MatrixXd quadrature_fourth_power(int n) { return quadrature_power(n, 4); }

FockOperator build_h_uncoupled(const CircuitParams& p, Dims dims, double leakage_tolerance) {
  p.validate();
  require(dims.n_t >= 2 && dims.n_r >= 2, ErrorKind::InvalidDimension, "dims must be >= 2");
  const int nt = dims.n_t, nr = dims.n_r;
  Eigen::MatrixXd it = Eigen::MatrixXd::Identity(nt, nt), ir = Eigen::MatrixXd::Identity(nr, nr);
  Eigen::MatrixXd at = ladder_matrix(nt), ar = ladder_matrix(nr);
  Eigen::MatrixXd nt_op = at.transpose() * at, nr_op = ar.transpose() * ar;

  Eigen::MatrixXd h = (p.omega_t0 + p.chi_t) * Eigen::kroneckerProduct(nt_op, ir).eval() +
                      p.omega_r0 * Eigen::kroneckerProduct(it, nr_op).eval() +
                      p.g * Eigen::kroneckerProduct(quadrature_power(nt, 1),
                                                    quadrature_power(nr, 1)).eval() -
                      (p.chi_t / 12.0) * Eigen::kroneckerProduct(quadrature_power(nt, 4), ir).eval();
  FockOperator op{dims, (kTwoPi * h).cast<std::complex<double>>(), {}};
  attach_leakage_warning(op, leakage_tolerance);
  return op;
}

FockOperator build_h_normal(const NormalModeParams& p, Dims dims, double leakage_tolerance) {
  p.validate();
  require(dims.n_t >= 2 && dims.n_r >= 2, ErrorKind::InvalidDimension, "dims must be >= 2");
  const int nt = dims.n_t, nr = dims.n_r;
  Eigen::MatrixXd at = ladder_matrix(nt), ar = ladder_matrix(nr);
  Eigen::MatrixXd h =
      (p.omega_t1 + p.chi_t) *
          Eigen::kroneckerProduct((at.transpose() * at).eval(), Eigen::MatrixXd::Identity(nr, nr))
              .eval() +
      p.omega_r1 * Eigen::kroneckerProduct(Eigen::MatrixXd::Identity(nt, nt),
                                           (ar.transpose() * ar).eval())
                       .eval();
  const double ct = std::pow(p.chi_t, 0.25), cr = std::pow(p.chi_r, 0.25);
  const double binom[5] = {1, 4, 6, 4, 1};
  for (int k = 0; k <= 4; ++k) {
    double c = binom[k] * std::pow(ct, k) * std::pow(cr, 4 - k);
    if (c == 0.0) continue;
    h -= (c / 12.0) *
         Eigen::kroneckerProduct(quadrature_power(nt, k), quadrature_power(nr, 4 - k)).eval();
  }
  FockOperator op{dims, (kTwoPi * h).cast<std::complex<double>>(), {}};
  attach_leakage_warning(op, leakage_tolerance);
  return op;
}

NormalModeParams normal_mode_transform(const CircuitParams& p) {
  p.validate();
  const double w1 = p.omega_t0 + p.chi_t, wr = p.omega_r0;
  Eigen::Matrix2d v;
  v << w1 * w1, 2.0 * p.g * std::sqrt(w1 * wr), 2.0 * p.g * std::sqrt(w1 * wr), wr * wr;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(v);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw Error(ErrorKind::UnstableSystem, "quadratic form is not positive definite");
  const Eigen::Matrix2d& o = es.eigenvectors();
  int kt = std::abs(o(0, 1)) >= std::abs(o(0, 0)) ? 1 : 0;
  int kr = 1 - kt;
  double omega_t = std::sqrt(es.eigenvalues()[kt]);
  double omega_r = std::sqrt(es.eigenvalues()[kr]);
  // Weight of the bare transmon quadrature in each normal-mode quadrature.
  double u_t = std::sqrt(w1 / omega_t) * o(0, kt);
  double u_r = std::sqrt(w1 / omega_r) * o(0, kr);

  NormalModeParams out;
  out.chi_t = p.chi_t * std::pow(u_t, 4);
  out.chi_r = p.chi_t * std::pow(u_r, 4);
  out.omega_t1 = omega_t - out.chi_t;
  out.omega_r1 = omega_r;
  return out;
}

LabelledSpectrum::LabelledSpectrum(const FockOperator& h) : dims_(h.dims) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.data);
  energies_ = es.eigenvalues() / kTwoPi;
  vectors_ = es.eigenvectors();
  const int n = dims_.size();
  label_to_index_.assign(n, -1);
  std::vector<double> best(n, -1.0);
  for (int j = 0; j < n; ++j) {
    Eigen::Index k;
    double w = vectors_.col(j).cwiseAbs2().maxCoeff(&k);
    if (w > best[k]) {
      best[k] = w;
      label_to_index_[k] = j;
    }
  }
}

int LabelledSpectrum::eigen_index(int i_t, int i_r) const {
  require(i_t >= 0 && i_t < dims_.n_t && i_r >= 0 && i_r < dims_.n_r,
          ErrorKind::InvalidDimension, "label outside truncated space");
  int j = label_to_index_[dims_.index(i_t, i_r)];
  if (j < 0) {
    std::ostringstream os;
    os << "no eigenstate is labelled |" << i_t << "," << i_r << ">";
    throw Error(ErrorKind::InvalidDimension, os.str());
  }
  return j;
}

double LabelledSpectrum::energy(int i_t, int i_r) const {
  return energies_[eigen_index(i_t, i_r)];
}

Eigen::VectorXcd LabelledSpectrum::state(int i_t, int i_r) const {
  Eigen::VectorXcd v = vectors_.col(eigen_index(i_t, i_r));
  // Fix the global phase so the labelling component is real and positive.
  std::complex<double> c = v[dims_.index(i_t, i_r)];
  return v * (std::abs(c) / c);
}

double LabelledSpectrum::top_level_leakage(int max_excitations) const {
  double worst = 0.0;
  for (int i = 0; i <= max_excitations; ++i) {
    for (int j = 0; i + j <= max_excitations; ++j) {
      if (i >= dims_.n_t || j >= dims_.n_r) continue;
      int idx = label_to_index_[dims_.index(i, j)];
      if (idx < 0) continue;
      Eigen::VectorXd pop = vectors_.col(idx).cwiseAbs2();
      double top_t = 0.0, top_r = 0.0;
      for (int r = 0; r < dims_.n_r; ++r) top_t += pop[dims_.index(dims_.n_t - 1, r)];
      for (int t = 0; t < dims_.n_t; ++t) top_r += pop[dims_.index(t, dims_.n_r - 1)];
      worst = std::max({worst, top_t, top_r});
    }
  }
  return worst;
}

ObservedParams LabelledSpectrum::observed() const {
  require(dims_.n_t >= 3 && dims_.n_r >= 3, ErrorKind::InvalidDimension,
          "observed parameters need at least 3 levels per mode");
  const double e00 = energy(0, 0);
  ObservedParams o;
  o.omega_t = energy(1, 0) - e00;
  o.omega_r = energy(0, 1) - e00;
  o.A_t = 2.0 * o.omega_t - (energy(2, 0) - e00);
  o.A_r = 2.0 * o.omega_r - (energy(0, 2) - e00);
  o.A_tr = 0.5 * (o.omega_t + o.omega_r - (energy(1, 1) - e00));
  return o;
}

ObservedParams observe(const CircuitParams& p, Dims dims) {
  return LabelledSpectrum(build_h_uncoupled(p, dims, 1.0)).observed();
}

CircuitParams dispersive_guess(const ObservedParams& obs) {
  obs.validate();
  CircuitParams g;
  g.omega_t0 = obs.omega_t;
  g.omega_r0 = obs.omega_r;
  g.chi_t = obs.A_t;
  double delta = std::abs(obs.omega_t - obs.omega_r);
  double g2 = obs.A_t > 0 ? obs.A_tr * delta * std::max(delta - obs.A_t, 0.1 * delta) / obs.A_t : 0.0;
  g.g = std::min(std::sqrt(g2), 0.5 * delta);
  return g;
}

CircuitParams observed_to_bare(const ObservedParams& obs, const CircuitParams& guess,
                               const ExtractionOptions& options) {
  obs.validate();
  guess.validate();
  const double unit = 1e3;
  Eigen::Vector4d target(obs.omega_t, obs.omega_r, obs.A_t, obs.A_tr);
  // Coupling enters through s = g^2, which keeps the cross-Kerr residual linear near g = 0.
  auto unpack = [](const Eigen::VectorXd& x) {
    return CircuitParams{x[0], x[1], std::sqrt(std::max(x[2], 0.0)), x[3]};
  };
  ResidualFn residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    CircuitParams c = unpack(x);
    try {
      ObservedParams o = observe(c, options.dims);
      Eigen::Vector4d model(o.omega_t, o.omega_r, o.A_t, o.A_tr);
      return (model - target) / unit;
    } catch (const Error&) {
      return Eigen::VectorXd::Constant(4, 1e30);
    }
  };

  double delta = std::abs(guess.omega_t0 - guess.omega_r0);
  Eigen::VectorXd x0(4), scale(4), lower(4), upper(4);
  x0 << guess.omega_t0, guess.omega_r0, guess.g * guess.g, guess.chi_t;
  scale << guess.omega_t0, guess.omega_r0,
      x0[2] > 0 ? x0[2] : std::pow(1e-2 * delta, 2), guess.chi_t > 0 ? guess.chi_t : 1e-3 * delta;
  lower << 0.5 * guess.omega_t0, 0.5 * guess.omega_r0, 0.0, 0.0;
  upper << 2.0 * guess.omega_t0, 2.0 * guess.omega_r0, 0.25 * delta * delta, guess.omega_t0;

  LeastSquaresOptions lso;
  lso.max_iterations = options.max_iterations;
  lso.absolute_cost = 0.5 * 4 * std::pow(1e-3, 2);  // every residual near 1 Hz
  LeastSquaresResult res = levenberg_marquardt(residual, x0, scale, lower, upper, lso);

  Eigen::VectorXd hz = res.residual * unit;
  if (hz.cwiseAbs().maxCoeff() > options.tolerance_hz) {
    std::ostringstream os;
    os << "observed_to_bare did not reach " << options.tolerance_hz
       << " Hz; residuals (omega_t, omega_r, A_t, A_tr) = " << hz.transpose() << " Hz";
    throw Error(ErrorKind::NoConvergence, os.str(), {hz[0], hz[1], hz[2], hz[3]});
  }
  return unpack(res.x);
}

}  // namespace sideband
