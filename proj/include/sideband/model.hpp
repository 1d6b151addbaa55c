#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sideband {

constexpr double kTwoPi = 6.283185307179586476925286766559;

enum class Mode { Transmon, Resonator };

struct Dims {
  int n_t = 5;
  int n_r = 5;

  int size() const { return n_t * n_r; }
  int index(int i_t, int i_r) const { return i_t * n_r + i_r; }
  bool operator==(const Dims&) const = default;
};

// Default truncation for spectra and parameter extraction.
inline constexpr Dims kEigenDims{10, 6};

struct FockOperator {
  Dims dims;
  Eigen::MatrixXcd data;
  std::vector<std::string> warnings;
};

// Bare parameters of the uncoupled-basis Hamiltonian (all Hz).
struct CircuitParams {
  double omega_t0 = 0.0;
  double omega_r0 = 0.0;
  double g = 0.0;
  double chi_t = 0.0;

  void validate() const;
};

// Normal-mode parameters (all Hz).
struct NormalModeParams {
  double omega_t1 = 0.0;
  double omega_r1 = 0.0;
  double chi_t = 0.0;
  double chi_r = 0.0;

  double chi_tr() const;
  void validate() const;
};

// Transition frequencies and anharmonicities of the dressed spectrum (all Hz).
struct ObservedParams {
  double omega_t = 0.0;
  double omega_r = 0.0;
  double A_t = 0.0;
  double A_r = 0.0;
  double A_tr = 0.0;

  void validate() const;
  // |A_tr^2 - A_t A_r| / A_tr^2
  double cross_relation_error() const;
};

Eigen::MatrixXd ladder_matrix(int n);
FockOperator ladder(Dims dims, Mode mode);

// x^4 with x = a + a^dag, exact on the retained n levels.
Eigen::MatrixXd quadrature_fourth_power(int n);

// 2pi [(w_t0 + chi_t) a^dag a + w_r0 b^dag b + g x_a x_b - chi_t x_a^4 / 12] in rad/s.
FockOperator build_h_uncoupled(const CircuitParams& p, Dims dims, double leakage_tolerance = 1e-3);

// 2pi [(w_t1 + chi_t) a^dag a + w_r1 b^dag b - (chi_t^1/4 x_a + chi_r^1/4 x_b)^4 / 12] in rad/s.
FockOperator build_h_normal(const NormalModeParams& p, Dims dims, double leakage_tolerance = 1e-3);

NormalModeParams normal_mode_transform(const CircuitParams& p);

// Eigenstates labelled by their largest overlap with bare product states.
class LabelledSpectrum {
 public:
  explicit LabelledSpectrum(const FockOperator& h);

  const Dims& dims() const { return dims_; }
  // Energies in Hz.
  double energy(int i_t, int i_r) const;
  const Eigen::VectorXd& energies() const { return energies_; }
  Eigen::VectorXcd state(int i_t, int i_r) const;
  int eigen_index(int i_t, int i_r) const;
  // Largest population on the top transmon or resonator level among the labelled states
  // with at most `max_excitations` excitations.
  double top_level_leakage(int max_excitations) const;

  ObservedParams observed() const;

 private:
  Dims dims_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd vectors_;
  std::vector<int> label_to_index_;
};

ObservedParams observe(const CircuitParams& p, Dims dims = kEigenDims);

struct ExtractionOptions {
  Dims dims = kEigenDims;
  double tolerance_hz = 1e3;
  int max_iterations = 60;
};

// A dispersive estimate usable as a starting point for observed_to_bare.
CircuitParams dispersive_guess(const ObservedParams& obs);

CircuitParams observed_to_bare(const ObservedParams& obs, const CircuitParams& guess,
                               const ExtractionOptions& options = {});

}  // namespace sideband
