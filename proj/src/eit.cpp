#include "sideband/eit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>

#include "sideband/error.hpp"
#include "sideband/parallel.hpp"

namespace sideband {

namespace {

using Complex = std::complex<double>;

const std::vector<std::string> kFieldNames = {
    "omega_t_shifted_hz", "omega_r_hz", "A_t_hz",  "A_r_hz",   "A_tr_hz",
    "omega_sb_hz",        "delta_omega_mat_hz",    "kappa_hz", "gamma_hz", "amp_p_hz"};

double* field(EitParams& p, const std::string& name) {
  if (name == "omega_t_shifted_hz") return &p.omega_t_shifted;
  if (name == "omega_r_hz") return &p.omega_r;
  if (name == "A_t_hz") return &p.A_t;
  if (name == "A_r_hz") return &p.A_r;
  if (name == "A_tr_hz") return &p.A_tr;
  if (name == "omega_sb_hz") return &p.omega_sb;
  if (name == "delta_omega_mat_hz") return &p.delta_omega_mat;
  if (name == "kappa_hz") return &p.kappa;
  if (name == "gamma_hz") return &p.gamma;
  if (name == "amp_p_hz") return &p.amp_p;
  throw Error(ErrorKind::InvalidParameter, "unknown EIT parameter '" + name + "'");
}

SparseMatrixC sparse_identity(int n) {
  SparseMatrixC id(n, n);
  id.setIdentity();
  return id;
}

SparseMatrixC sparse_of(const Eigen::MatrixXcd& m) { return m.sparseView(1.0, 0.0); }

}  // namespace

void EitParams::validate() const {
  if (!(kappa > 0.0) || !(gamma > 0.0))
    throw Error(ErrorKind::InvalidParameter, "kappa_hz and gamma_hz must be positive");
  if (amp_p < 0.0 || omega_sb < 0.0)
    throw Error(ErrorKind::InvalidParameter, "amp_p_hz and omega_sb_hz must be non-negative");
  if (dims.n_t < 2 || dims.n_r < 2)
    throw Error(ErrorKind::InvalidDimension, "EIT dims must be >= 2 per mode");
}

bool EitParams::eit_regime() const { return omega_sb < std::abs(kappa - gamma); }

double EitParams::probe_occupancy() const { return std::pow(amp_p / kappa, 2); }

const std::vector<std::string>& EitParams::field_names() { return kFieldNames; }

double EitParams::get(const std::string& name) const {
  return *field(const_cast<EitParams&>(*this), name);
}

void EitParams::set(const std::string& name, double value) { *field(*this, name) = value; }

FockOperator rotating_frame_hamiltonian(const EitParams& p, double omega_p) {
  p.validate();
  const Dims d = p.dims;
  Eigen::MatrixXcd a = ladder(d, Mode::Transmon).data;
  Eigen::MatrixXcd b = ladder(d, Mode::Resonator).data;
  Eigen::MatrixXcd ad = a.adjoint(), bd = b.adjoint();
  Eigen::MatrixXcd na = ad * a, nb = bd * b;

  const double delta_b = p.omega_r - omega_p;
  const double delta_a = p.interaction == Interaction::BeamSplitter
                             ? delta_b + 2.0 * p.delta_omega_mat
                             : 2.0 * p.delta_omega_mat - delta_b;

  Eigen::MatrixXcd h = delta_a * na + delta_b * nb - (0.5 * p.A_t) * (ad * ad * a * a) -
                       (0.5 * p.A_r) * (bd * bd * b * b) - (2.0 * p.A_tr) * (na * nb);
  Eigen::MatrixXcd coupling =
      p.interaction == Interaction::BeamSplitter ? Eigen::MatrixXcd(a * bd) : Eigen::MatrixXcd(a * b);
  h += (0.5 * p.omega_sb) * (coupling + coupling.adjoint());
  h += (0.5 * p.amp_p) * (b + bd);
  return FockOperator{d, kTwoPi * h, {}};
}

SparseMatrixC liouvillian(const FockOperator& h, double kappa, double gamma) {
  const Dims d = h.dims;
  const int n = d.size();
  SparseMatrixC id = sparse_identity(n);
  SparseMatrixC hs = sparse_of(h.data);
  SparseMatrixC ht = SparseMatrixC(hs.transpose());
  SparseMatrixC l = Complex(0.0, -1.0) * (Eigen::kroneckerProduct(id, hs).eval() -
                                          Eigen::kroneckerProduct(ht, id).eval());
  auto add_dissipator = [&](const Eigen::MatrixXcd& op, double rate) {
    if (rate == 0.0) return;
    SparseMatrixC c = sparse_of(std::sqrt(kTwoPi * rate) * op);
    SparseMatrixC cc = sparse_of((std::sqrt(kTwoPi * rate) * op).conjugate());
    SparseMatrixC cdc = sparse_of((kTwoPi * rate) * (op.adjoint() * op));
    SparseMatrixC cdct = SparseMatrixC(cdc.transpose());
    l += Eigen::kroneckerProduct(cc, c).eval();
    l -= 0.5 * Eigen::kroneckerProduct(id, cdc).eval();
    l -= 0.5 * Eigen::kroneckerProduct(cdct, id).eval();
  };
  add_dissipator(ladder(d, Mode::Resonator).data, kappa);
  add_dissipator(ladder(d, Mode::Transmon).data, gamma);
  l.makeCompressed();
  return l;
}

namespace {

Eigen::MatrixXcd unvec(const Eigen::VectorXcd& x, int n) {
  Eigen::MatrixXcd rho = Eigen::Map<const Eigen::MatrixXcd>(x.data(), n, n);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace();
  return rho;
}

}  // namespace

SteadyState steady_state(const FockOperator& h, double kappa, double gamma,
                         const SteadyStateOptions& options) {
  if (!(kappa > 0.0) || !(gamma > 0.0))
    throw Error(ErrorKind::InvalidParameter, "decay rates must be positive");
  const int n = h.dims.size();
  const int n2 = n * n;
  SparseMatrixC l = liouvillian(h, kappa, gamma);
  SteadyState out;
  out.liouvillian_norm = l.norm();
  Eigen::VectorXcd x;

  if (options.method == SteadyStateMethod::SparseLu) {
    // Replace the first population equation by the trace constraint.
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(l.nonZeros() + n);
    for (int k = 0; k < l.outerSize(); ++k)
      for (SparseMatrixC::InnerIterator it(l, k); it; ++it)
        if (it.row() != 0) trip.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < n; ++i) trip.emplace_back(0, i * n + i, Complex(1.0, 0.0));
    SparseMatrixC m(n2, n2);
    m.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<SparseMatrixC> lu;
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success)
      throw Error(ErrorKind::NonUniqueSteadyState,
                  "constrained Liouvillian is singular: steady state is not unique");
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n2);
    rhs[0] = 1.0;
    x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite())
      throw Error(ErrorKind::NonUniqueSteadyState, "steady-state solve failed");
  } else {
    Eigen::MatrixXcd dense = Eigen::MatrixXcd(l);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(dense, Eigen::ComputeFullV);
    const Eigen::VectorXd& s = svd.singularValues();
    double smin = s[n2 - 1], snext = s[n2 - 2];
    out.singular_gap = snext > 0 ? smin / snext : 1.0;
    if (out.singular_gap > options.gap_ratio) {
      std::ostringstream os;
      os << "Liouvillian null space is not one-dimensional (sigma ratio " << out.singular_gap
         << ")";
      throw Error(ErrorKind::NonUniqueSteadyState, os.str(), {smin, snext});
    }
    x = svd.matrixV().col(n2 - 1);
  }

  out.rho = unvec(x, n);
  Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(out.rho.data(), n2);
  out.residual_norm = (l * v).norm();
  return out;
}

Eigen::MatrixXcd integrate_master_equation(const FockOperator& h, double kappa, double gamma,
                                           const Eigen::MatrixXcd& rho0, double t_end, double dt) {
  const int n = h.dims.size();
  SparseMatrixC l = liouvillian(h, kappa, gamma);
  Eigen::VectorXcd x = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), n * n);
  const long long steps = std::max(1LL, static_cast<long long>(std::ceil(t_end / dt)));
  const double step = t_end / static_cast<double>(steps);
  Eigen::VectorXcd k1, k2, k3, k4;
  for (long long s = 0; s < steps; ++s) {
    k1 = l * x;
    k2 = l * (x + 0.5 * step * k1);
    k3 = l * (x + 0.5 * step * k2);
    k4 = l * (x + step * k3);
    x += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return Eigen::Map<const Eigen::MatrixXcd>(x.data(), n, n);
}

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd d = a - b;
  d = 0.5 * (d + d.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

std::complex<double> transmission(const Eigen::MatrixXcd& rho, const EitParams& p) {
  if (!(p.amp_p > 0.0))
    throw Error(ErrorKind::InvalidParameter, "transmission needs a positive probe amplitude");
  Eigen::MatrixXcd b = ladder(p.dims, Mode::Resonator).data;
  Complex mean_b = (rho * b).trace();
  return Complex(0.0, 1.0) * (0.5 * p.kappa) * mean_b / (0.5 * p.amp_p);
}

double top_resonator_population(const Eigen::MatrixXcd& rho, Dims dims) {
  double pop = 0.0;
  for (int t = 0; t < dims.n_t; ++t) {
    int k = dims.index(t, dims.n_r - 1);
    pop += rho(k, k).real();
  }
  return pop;
}

namespace {

struct PointResult {
  Complex s21{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double top = 0.0;
  std::string error;
};

std::vector<PointResult> solve_points(const EitParams& p, const std::vector<double>& grid,
                                      const SpectrumOptions& options) {
  std::vector<PointResult> out(grid.size());
  parallel_for(grid.size(), options.threads, [&](std::size_t i) {
    try {
      FockOperator h = rotating_frame_hamiltonian(p, grid[i]);
      SteadyState ss = steady_state(h, p.kappa, p.gamma, options.steady);
      out[i].s21 = transmission(ss.rho, p);
      out[i].top = top_resonator_population(ss.rho, p.dims);
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

}  // namespace

Spectrum spectrum(const EitParams& p, const std::vector<double>& probe_grid,
                  const SpectrumOptions& options) {
  p.validate();
  if (probe_grid.empty()) throw Error(ErrorKind::InvalidParameter, "empty probe grid");
  EitParams q = p;
  std::vector<PointResult> pts;
  while (true) {
    pts = solve_points(q, probe_grid, options);
    double worst = 0.0;
    for (const auto& r : pts) worst = std::max(worst, r.top);
    if (!options.auto_escalate || worst < options.occupancy_tolerance ||
        q.dims.n_r + 2 > options.max_resonator_levels)
      break;
    q.dims.n_r += 2;
  }
  Spectrum s;
  s.dims = q.dims;
  s.omega_p = probe_grid;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s.s21.push_back(pts[i].s21);
    if (!pts[i].error.empty()) s.failures.emplace_back(i, pts[i].error);
  }
  return s;
}

Dims adequate_dims(const EitParams& p, const std::vector<double>& probe_grid,
                   const SpectrumOptions& options) {
  SpectrumOptions o = options;
  o.auto_escalate = true;
  return spectrum(p, probe_grid, o).dims;
}

}  // namespace sideband
