#pragma once

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sideband/analytics.hpp"
#include "sideband/model.hpp"

namespace sideband {

struct EitParams {
  double omega_t_shifted = 0.0;
  double omega_r = 0.0;
  double A_t = 0.0;
  double A_r = 0.0;
  double A_tr = 0.0;
  double omega_sb = 0.0;
  double delta_omega_mat = 0.0;
  double kappa = 0.0;
  double gamma = 0.0;
  double amp_p = 0.0;
  Interaction interaction = Interaction::BeamSplitter;
  Dims dims{3, 8};

  void validate() const;
  bool eit_regime() const;
  double probe_occupancy() const;

  // Named access with the serialised keys, e.g. "omega_sb_hz".
  static const std::vector<std::string>& field_names();
  double get(const std::string& name) const;
  void set(const std::string& name, double value);
};

// Rotating-frame Hamiltonian in rad/s (2pi x Hz).
FockOperator rotating_frame_hamiltonian(const EitParams& p, double omega_p);

using SparseMatrixC = Eigen::SparseMatrix<std::complex<double>>;

// Lindblad generator acting on column-stacked density matrices, with decay sqrt(2pi kappa) b
// and sqrt(2pi gamma) a.
SparseMatrixC liouvillian(const FockOperator& h, double kappa, double gamma);

enum class SteadyStateMethod { SparseLu, NullSpace };

struct SteadyStateOptions {
  SteadyStateMethod method = SteadyStateMethod::SparseLu;
  double gap_ratio = 1e-6;  // null-space: sigma_min / sigma_next must fall below this
};

struct SteadyState {
  Eigen::MatrixXcd rho;
  double residual_norm = 0.0;      // |L rho| (Frobenius)
  double liouvillian_norm = 0.0;   // |L| (Frobenius)
  double singular_gap = 0.0;       // sigma_min / sigma_next (null-space method only)
};

SteadyState steady_state(const FockOperator& h, double kappa, double gamma,
                         const SteadyStateOptions& options = {});

// Fixed-step RK4 integration of the master equation.
Eigen::MatrixXcd integrate_master_equation(const FockOperator& h, double kappa, double gamma,
                                           const Eigen::MatrixXcd& rho0, double t_end, double dt);

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

std::complex<double> transmission(const Eigen::MatrixXcd& rho, const EitParams& p);

// Top resonator Fock-level population of rho.
double top_resonator_population(const Eigen::MatrixXcd& rho, Dims dims);

struct Spectrum {
  std::vector<double> omega_p;
  std::vector<std::complex<double>> s21;
  std::vector<double> sigma;  // optional per-point noise (same size as omega_p or empty)
  std::vector<std::pair<std::size_t, std::string>> failures;
  Dims dims{0, 0};
};

struct SpectrumOptions {
  bool auto_escalate = true;
  double occupancy_tolerance = 1e-4;
  int max_resonator_levels = 24;
  int threads = 1;
  SteadyStateOptions steady;
};

Spectrum spectrum(const EitParams& p, const std::vector<double>& probe_grid,
                  const SpectrumOptions& options = {});

// Smallest resonator truncation whose top-level population stays below the tolerance at
// every probe frequency, starting from p.dims.
Dims adequate_dims(const EitParams& p, const std::vector<double>& probe_grid,
                   const SpectrumOptions& options = {});

}  // namespace sideband
