#include "sideband/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "sideband/error.hpp"

namespace sideband {

namespace {

using Complex = std::complex<double>;

double parameter_scale(const FreeParameter& f) {
  if (f.scale) return *f.scale;
  if (f.initial != 0.0) return std::abs(f.initial);
  double w = 0.5 * (f.upper - f.lower);
  return w > 0 ? w : 1.0;
}

}  // namespace

FreeParameter FreeParameter::around(const std::string& name, double initial, double rel) {
  return FreeParameter{name, initial, initial * (1.0 - rel), initial * (1.0 + rel), std::nullopt};
}

FreeParameter FreeParameter::within(const std::string& name, double initial, double half_width,
                                    double scale) {
  return FreeParameter{name, initial, initial - half_width, initial + half_width, scale};
}

void FitProblem::validate() const {
  const auto& names = EitParams::field_names();
  std::set<std::string> seen;
  for (const auto& f : free) {
    if (std::find(names.begin(), names.end(), f.name) == names.end())
      throw Error(ErrorKind::Config, "free parameter '" + f.name + "' is not an EIT parameter");
    if (!seen.insert(f.name).second)
      throw Error(ErrorKind::Config, "free parameter '" + f.name + "' listed twice");
    if (fixed.count(f.name))
      throw Error(ErrorKind::Config, "parameter '" + f.name + "' is both free and fixed");
    if (!(f.lower <= f.initial && f.initial <= f.upper))
      throw Error(ErrorKind::Config, "initial guess of '" + f.name + "' lies outside its bounds");
  }
  for (const auto& [name, v] : fixed) {
    (void)v;
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw Error(ErrorKind::Config, "fixed parameter '" + name + "' is not an EIT parameter");
  }
  if (data.omega_p.size() != data.s21.size() || data.omega_p.empty())
    throw Error(ErrorKind::Config, "fit data is empty or inconsistent");
  if (!data.sigma.empty() && data.sigma.size() != data.omega_p.size())
    throw Error(ErrorKind::Config, "sigma must match the data length");
  std::size_t nuisance = target == FitTarget::Complex ? 3 : 2;
  std::size_t observations = data.omega_p.size() * (target == FitTarget::Complex ? 2 : 1);
  if (observations < 5 * (free.size() + nuisance))
    throw Error(ErrorKind::Config, "need at least 5x more data points than free parameters");
}

const ParameterEstimate& FitResult::at(const std::string& name) const {
  for (const auto& e : estimates)
    if (e.name == name) return e;
  throw Error(ErrorKind::InvalidParameter, "no estimate named '" + name + "'");
}

FitResult fit_spectrum(const FitProblem& problem) {
  problem.validate();
  const bool complex_target = problem.target == FitTarget::Complex;
  const std::size_t np = problem.free.size();
  const std::size_t nn = complex_target ? 3 : 2;
  const std::size_t m = problem.data.omega_p.size();
  const std::vector<double>& grid = problem.data.omega_p;

  EitParams base = problem.model;
  for (const auto& [name, v] : problem.fixed) base.set(name, v);
  for (const auto& f : problem.free) base.set(f.name, f.initial);

  SpectrumOptions sopt = problem.spectrum_options;
  if (sopt.auto_escalate) base.dims = adequate_dims(base, grid, sopt);
  sopt.auto_escalate = false;

  Eigen::VectorXd weight(m);
  for (std::size_t i = 0; i < m; ++i)
    weight[i] = problem.data.sigma.empty() ? 1.0 : 1.0 / problem.data.sigma[i];

  auto params_of = [&](const Eigen::VectorXd& x) {
    EitParams p = base;
    for (std::size_t k = 0; k < np; ++k) p.set(problem.free[k].name, x[k]);
    return p;
  };
  auto model_at = [&](const Eigen::VectorXd& x) {
    Spectrum s = spectrum(params_of(x), grid, sopt);
    return Eigen::Map<const Eigen::VectorXcd>(s.s21.data(), static_cast<Eigen::Index>(m)).eval();
  };

  Eigen::VectorXd cached_x;
  Eigen::VectorXcd cached_s;
  auto shape = [&](const Eigen::VectorXd& x) -> const Eigen::VectorXcd& {
    Eigen::VectorXd head = x.head(np);
    if (cached_x.size() != head.size() || cached_x != head) {
      cached_s = model_at(head);
      cached_x = head;
    }
    return cached_s;
  };

  auto residual_from = [&](const Eigen::VectorXcd& s, const Eigen::VectorXd& x) {
    const double scale = x[np];
    Eigen::VectorXd r(complex_target ? 2 * m : m);
    for (std::size_t i = 0; i < m; ++i) {
      const Complex d = problem.data.s21[i];
      if (complex_target) {
        Complex mod = scale * s[i] + Complex(x[np + 1], x[np + 2]);
        r[2 * i] = weight[i] * (mod.real() - d.real());
        r[2 * i + 1] = weight[i] * (mod.imag() - d.imag());
      } else {
        r[i] = weight[i] * (scale * std::abs(s[i]) + x[np + 1] - std::abs(d));
      }
    }
    return r;
  };
  ResidualFn residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd r = residual_from(shape(x), x);
    if (!r.allFinite()) r.setConstant(1e30);
    return r;
  };

  Eigen::VectorXd x0(np + nn), scale(np + nn), lower(np + nn), upper(np + nn);
  for (std::size_t k = 0; k < np; ++k) {
    const auto& f = problem.free[k];
    x0[k] = f.initial;
    scale[k] = parameter_scale(f);
    lower[k] = f.lower;
    upper[k] = f.upper;
  }
  // Affine nuisance terms start from their linear least-squares values.
  {
    Eigen::VectorXcd s = shape(x0);
    if (!s.allFinite()) throw Error(ErrorKind::PoorFit, "model spectrum fails at the initial guess");
    Eigen::MatrixXd a(complex_target ? 2 * m : m, nn);
    Eigen::VectorXd b(a.rows());
    for (std::size_t i = 0; i < m; ++i) {
      if (complex_target) {
        a.row(2 * i) << weight[i] * s[i].real(), weight[i], 0.0;
        a.row(2 * i + 1) << weight[i] * s[i].imag(), 0.0, weight[i];
        b[2 * i] = weight[i] * problem.data.s21[i].real();
        b[2 * i + 1] = weight[i] * problem.data.s21[i].imag();
      } else {
        a.row(i) << weight[i] * std::abs(s[i]), weight[i];
        b[i] = weight[i] * std::abs(problem.data.s21[i]);
      }
    }
    Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < nn; ++k) x0[np + k] = c[k];
  }
  for (std::size_t k = np; k < np + nn; ++k) {
    scale[k] = 1.0;
    lower[k] = -1e3;
    upper[k] = 1e3;
  }

  JacobianFn jacobian = [&](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
    const Eigen::Index rows = complex_target ? 2 * m : m;
    Eigen::MatrixXd jac(rows, np + nn);
    Eigen::VectorXcd s = shape(x);
    const double amp = x[np];
    for (std::size_t k = 0; k < np; ++k) {
      double h = problem.solver.relative_step * scale[k];
      Eigen::VectorXd xp = x.head(np), xm = x.head(np);
      xp[k] = std::min(x[k] + h, upper[k]);
      xm[k] = std::max(x[k] - h, lower[k]);
      Eigen::VectorXcd sp = xp[k] == x[k] ? s : model_at(xp);
      Eigen::VectorXcd sm = xm[k] == x[k] ? s : model_at(xm);
      double span = xp[k] - xm[k];
      for (std::size_t i = 0; i < m; ++i) {
        if (complex_target) {
          Complex d = amp * (sp[i] - sm[i]) / span;
          jac(2 * i, k) = weight[i] * d.real();
          jac(2 * i + 1, k) = weight[i] * d.imag();
        } else {
          jac(i, k) = weight[i] * amp * (std::abs(sp[i]) - std::abs(sm[i])) / span;
        }
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (complex_target) {
        jac.row(2 * i).tail(3) << weight[i] * s[i].real(), weight[i], 0.0;
        jac.row(2 * i + 1).tail(3) << weight[i] * s[i].imag(), 0.0, weight[i];
      } else {
        jac.row(i).tail(2) << weight[i] * std::abs(s[i]), weight[i];
      }
    }
    return jac;
  };

  LeastSquaresResult res =
      levenberg_marquardt(residual, x0, scale, lower, upper, problem.solver, jacobian);

  std::vector<std::string> names;
  for (const auto& f : problem.free) names.push_back(f.name);
  names.push_back("scale");
  names.push_back(complex_target ? "baseline_re" : "baseline");
  if (complex_target) names.push_back("baseline_im");

  // Identifiability from the column-normalised Jacobian.
  Eigen::MatrixXd js = res.jacobian * scale.asDiagonal();
  Eigen::VectorXd norms = js.colwise().norm();
  for (Eigen::Index k = 0; k < norms.size(); ++k) {
    if (norms[k] == 0.0)
      throw Error(ErrorKind::Identifiability,
                  "parameter '" + names[k] + "' does not affect the model");
  }
  Eigen::MatrixXd jn = js * norms.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jn, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  auto degenerate = [&](Eigen::Index i1, Eigen::Index i2) {
    return Error(ErrorKind::Identifiability,
                 "parameters '" + names[i1] + "' and '" + names[i2] + "' are degenerate");
  };
  if (sv[sv.size() - 1] < 1e-10 * sv[0]) {
    Eigen::VectorXd v = svd.matrixV().col(sv.size() - 1).cwiseAbs();
    Eigen::Index i1, i2;
    v.maxCoeff(&i1);
    v[i1] = -1.0;
    v.maxCoeff(&i2);
    throw degenerate(i1, i2);
  }

  const double dof = static_cast<double>(res.residual.size()) - static_cast<double>(np + nn);
  const double s2 = problem.data.sigma.empty() ? 2.0 * res.cost / std::max(dof, 1.0) : 1.0;
  Eigen::MatrixXd cov_n = (jn.transpose() * jn).inverse();
  Eigen::VectorXd d = scale.cwiseQuotient(norms);
  Eigen::VectorXd stderrs(np + nn);
  for (std::size_t k = 0; k < np + nn; ++k)
    stderrs[k] = std::sqrt(std::max(s2 * cov_n(k, k) * d[k] * d[k], 0.0));

  if (!res.converged) {
    for (std::size_t k = 0; k < np; ++k) {
      if (stderrs[k] <= std::abs(res.x[k])) continue;
      Eigen::Index partner = 0;
      double best = -1.0;
      for (std::size_t j = 0; j < np + nn; ++j) {
        if (j == k) continue;
        double c = std::abs(cov_n(k, j)) / std::sqrt(cov_n(k, k) * cov_n(j, j));
        if (c > best) best = c, partner = static_cast<Eigen::Index>(j);
      }
      throw degenerate(static_cast<Eigen::Index>(k), partner);
    }
    std::ostringstream os;
    os << "fit did not converge in " << res.iterations << " iterations; best-so-far:";
    for (std::size_t k = 0; k < names.size(); ++k) os << " " << names[k] << "=" << res.x[k];
    throw Error(ErrorKind::NoConvergence, os.str(),
                std::vector<double>(res.x.data(), res.x.data() + res.x.size()));
  }

  FitResult out;
  out.converged = true;
  out.iterations = res.iterations;
  out.residual_norm = res.residual.norm();
  out.accepted_costs = res.accepted_costs;
  out.fitted = params_of(res.x);
  for (std::size_t k = 0; k < names.size(); ++k)
    out.estimates.push_back({names[k], res.x[k], stderrs[k]});
  return out;
}

Calibration calibrate_cross_anharmonicity(const Spectrum& linear_data,
                                          const Spectrum& nonlinear_data,
                                          const EitParams& template_params,
                                          const CalibrationOptions& options) {
  Calibration cal;
  FitProblem p1;
  p1.data = linear_data;
  p1.model = template_params;
  p1.model.A_tr = 0.0;
  p1.model.amp_p = options.linear_probe_hz;
  p1.target = options.target;
  p1.solver = options.solver;
  p1.spectrum_options = options.spectrum_options;
  for (const auto& name : options.stage1_free) {
    double init = p1.model.get(name);
    if (name == "delta_omega_mat_hz")
      p1.free.push_back(FreeParameter::within(name, init, 0.5 * p1.model.kappa,
                                              std::max(0.01 * p1.model.kappa, std::abs(init))));
    else if (name == "omega_r_hz")
      p1.free.push_back(FreeParameter::within(name, init, p1.model.kappa, p1.model.kappa));
    else
      p1.free.push_back(FreeParameter::around(name, init, 0.5));
  }
  cal.stage1 = fit_spectrum(p1);

  FitProblem p2;
  p2.data = nonlinear_data;
  p2.model = cal.stage1.fitted;
  p2.target = options.target;
  p2.solver = options.solver;
  p2.spectrum_options = options.spectrum_options;
  p2.free.push_back(FreeParameter{"amp_p_hz", options.amp_p_guess_hz, 0.1 * options.amp_p_guess_hz,
                                  5.0 * options.amp_p_guess_hz, std::nullopt});
  p2.free.push_back(FreeParameter{"A_tr_hz", options.A_tr_guess_hz, 0.0,
                                  10.0 * options.A_tr_guess_hz, std::nullopt});
  cal.stage2 = fit_spectrum(p2);
  return cal;
}

LineFit rate_shift_line_fit(const std::vector<RateShiftPoint>& points,
                            std::optional<double> analytic_slope) {
  if (points.size() < 3) throw Error(ErrorKind::InvalidParameter, "line fit needs >= 3 points");
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    double x = std::abs(p.delta_omega_t);
    sxx += x * x;
    sxy += x * p.omega_sb;
  }
  if (sxx == 0.0) throw Error(ErrorKind::InvalidParameter, "all shifts are zero");
  LineFit out;
  out.slope = sxy / sxx;
  double rss = 0.0;
  for (const auto& p : points) rss += std::pow(p.omega_sb - out.slope * std::abs(p.delta_omega_t), 2);
  out.slope_error = std::sqrt(rss / static_cast<double>(points.size() - 1) / sxx);
  if (analytic_slope) {
    out.analytic_slope = analytic_slope;
    out.relative_deviation = (out.slope - *analytic_slope) / *analytic_slope;
  }
  return out;
}

Spectrum with_noise(const Spectrum& s, double sigma, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  Spectrum out = s;
  for (auto& v : out.s21) v += Complex(n(rng), n(rng));
  out.sigma.assign(out.omega_p.size(), sigma);
  return out;
}

}  // namespace sideband
