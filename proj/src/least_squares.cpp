#include "sideband/least_squares.hpp"

#include <algorithm>
#include <cmath>

namespace sideband {

Eigen::MatrixXd numerical_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& r0, const Eigen::VectorXd& scale,
                                   double relative_step, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper) {
  Eigen::MatrixXd jac(r0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double h = relative_step * std::abs(scale[i]);
    Eigen::VectorXd xp = x, xm = x;
    xp[i] = std::min(x[i] + h, upper[i]);
    xm[i] = std::max(x[i] - h, lower[i]);
    double span = xp[i] - xm[i];
    if (span <= 0.0) {
      jac.col(i).setZero();
      continue;
    }
    Eigen::VectorXd rp = xp[i] == x[i] ? r0 : f(xp);
    Eigen::VectorXd rm = xm[i] == x[i] ? r0 : f(xm);
    jac.col(i) = (rp - rm) / span;
  }
  return jac;
}

LeastSquaresResult levenberg_marquardt(const ResidualFn& f, const Eigen::VectorXd& x0,
                                       const Eigen::VectorXd& scale,
                                       const Eigen::VectorXd& lower,
                                       const Eigen::VectorXd& upper,
                                       const LeastSquaresOptions& options,
                                       const JacobianFn& jacobian) {
  const Eigen::Index n = x0.size();
  auto clamp = [&](Eigen::VectorXd x) {
    for (Eigen::Index i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
    return x;
  };
  auto jac_at = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& r) {
    if (jacobian) return jacobian(x, r);
    return numerical_jacobian(f, x, r, scale, options.relative_step, lower, upper);
  };

  LeastSquaresResult out;
  out.x = clamp(x0);
  out.residual = f(out.x);
  out.cost = 0.5 * out.residual.squaredNorm();
  out.accepted_costs.push_back(out.cost);
  if (out.cost <= options.absolute_cost) {
    out.jacobian = jac_at(out.x, out.residual);
    out.converged = true;
    return out;
  }

  double lambda = options.initial_damping;
  Eigen::MatrixXd jac = jac_at(out.x, out.residual);
  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    Eigen::MatrixXd js = jac * scale.asDiagonal();
    Eigen::MatrixXd jtj = js.transpose() * js;
    Eigen::VectorXd grad = js.transpose() * out.residual;
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-12 * std::max(1.0, jtj.diagonal().maxCoeff()));

    bool accepted = false;
    bool tiny_step = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      Eigen::VectorXd dy = a.ldlt().solve(-grad);
      Eigen::VectorXd trial = clamp(out.x + scale.cwiseProduct(dy));
      Eigen::VectorXd step = (trial - out.x).cwiseQuotient(scale);
      if (step.norm() < options.step_tolerance * (out.x.cwiseQuotient(scale).norm() + options.step_tolerance)) {
        tiny_step = true;
        break;
      }
      Eigen::VectorXd r = f(trial);
      double cost = 0.5 * r.squaredNorm();
      if (std::isfinite(cost) && cost < out.cost) {
        double decrease = (out.cost - cost) / std::max(out.cost, 1e-300);
        out.x = trial;
        out.residual = r;
        out.cost = cost;
        out.accepted_costs.push_back(cost);
        lambda = std::max(lambda / options.damping_factor, 1e-12);
        accepted = true;
        if (decrease < options.cost_tolerance || cost <= options.absolute_cost) tiny_step = true;
        break;
      }
      lambda *= options.damping_factor;
    }
    if (!accepted || tiny_step) {
      // Either the step vanished or no damping level lowers the cost: stationary point.
      out.converged = true;
      if (accepted) jac = jac_at(out.x, out.residual);
      break;
    }
    jac = jac_at(out.x, out.residual);
  }
  out.jacobian = jac;
  return out;
}

}  // namespace sideband
