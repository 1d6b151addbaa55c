#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace sideband {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& r)>;

struct LeastSquaresOptions {
  int max_iterations = 100;
  double initial_damping = 1e-3;
  double damping_factor = 10.0;
  double relative_step = 1e-6;
  double cost_tolerance = 1e-14;   // relative decrease of the cost
  double step_tolerance = 1e-12;   // norm of the scaled step
  double absolute_cost = 0.0;      // stop once cost falls below this
};

struct LeastSquaresResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
  double cost = 0.0;  // 0.5 * |r|^2
  int iterations = 0;
  bool converged = false;
  std::vector<double> accepted_costs;
};

// Central differences with step relative_step * scale[i], kept inside the bounds.
Eigen::MatrixXd numerical_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& r0, const Eigen::VectorXd& scale,
                                   double relative_step, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper);

// Damped Gauss-Newton (Levenberg-Marquardt) on variables normalised by `scale`.
// Bounds are enforced by projection. Throws nothing; check `converged`.
LeastSquaresResult levenberg_marquardt(const ResidualFn& f, const Eigen::VectorXd& x0,
                                       const Eigen::VectorXd& scale,
                                       const Eigen::VectorXd& lower,
                                       const Eigen::VectorXd& upper,
                                       const LeastSquaresOptions& options = {},
                                       const JacobianFn& jacobian = {});

}  // namespace sideband
