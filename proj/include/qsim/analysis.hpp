#pragma once

// State characterization: fidelity, phonon statistics, quadratures, Wigner
// function, nonclassical volume and the reflection coefficient.

#include <vector>

#include "qsim/fockspace.hpp"

namespace qsim::analysis {

using fock::cplx;
using fock::DensityMatrix;
using fock::Ket;

/// <psi| rho_m |psi> on the oscillator space.
double fidelity(const DensityMatrix& rho_m, const Ket& psi);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 between two mixed states.
double state_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);
/// (1/2) Tr|rho - sigma|.
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

/// P(n) = <n| rho_m |n>.
std::vector<double> phonon_distribution(const DensityMatrix& rho_m);
double odd_population(const DensityMatrix& rho_m);

/// Var(X_theta), X_theta = (a e^{-i theta} + a^dag e^{i theta}) / sqrt 2.
double quadrature_variance(const DensityMatrix& rho_m, double angle);

struct QuadratureExtrema {
  double min_variance;
  double max_variance;
  double min_angle;
};
/// Closed-form extremes of Var(X_theta) over theta.
QuadratureExtrema quadrature_extrema(const DensityMatrix& rho_m);

/// Square grid over Re(alpha), Im(alpha) in [-half_width, half_width].
/// values are row-major with Im(alpha) as the slow index.
struct PhaseSpaceGrid {
  double half_width = 4.5;
  double step = 0.05;
  std::vector<double> values;

  int points_per_axis() const;
  double coordinate(int i) const { return -half_width + step * i; }
  double at(int re_index, int im_index) const { return values[static_cast<std::size_t>(im_index) * points_per_axis() + re_index]; }
};

/// Default grid, widened so it covers |alpha| <= max(4.5, 2 alpha_target + 2.5).
PhaseSpaceGrid default_grid(double alpha_target);
/// Throws InvalidArgument when step <= 0 or the grid does not hold alpha_target.
void validate_grid(const PhaseSpaceGrid& grid, double alpha_target);

struct WignerOptions {
  /// Cross-check the recursion against the displaced-parity formula on a
  /// coarse subgrid (tolerance 1e-6).
  bool cross_check = false;
  int workers = 1;
  /// Integrated mass allowed outside the grid.
  double tail_tol = 1e-4;
};

/// W(alpha) normalized to unit integral over d^2 alpha, evaluated with the
/// Laguerre-form recursion of the displaced Fock matrix elements.
PhaseSpaceGrid wigner(const DensityMatrix& rho_m, const PhaseSpaceGrid& grid, const WignerOptions& options = {});

/// Single point by the recursion.
double wigner_point(const DensityMatrix& rho_m, cplx alpha);
/// Single point by (2/pi) sum_n (-1)^n <n|D^dag(alpha) rho D(alpha)|n>, with the
/// displacement built by matrix exponential on a padded space.
double wigner_displaced_parity(const DensityMatrix& rho_m, cplx alpha);

/// 2-D trapezoid integral of the grid values (or their absolute values).
double grid_integral(const PhaseSpaceGrid& w, bool absolute = false);

/// Integration-noise floor below which |delta_N| is reported as 0.
inline constexpr double kNonclassicalNoiseFloor = 1e-4;

/// delta_N = int |W| d^2 alpha - 1.
double nonclassical_volume(const DensityMatrix& rho_m, const PhaseSpaceGrid& grid, const WignerOptions& options = {});
double nonclassical_volume(const PhaseSpaceGrid& wigner_values);

struct NegativeRegion {
  int cells;
  double min_value;
  double re_alpha_at_min;
  double im_alpha_at_min;
};
/// 4-connected components of grid points with W < threshold.
std::vector<NegativeRegion> negative_regions(const PhaseSpaceGrid& w, double threshold = 0.0);

/// r = -i Gamma <sigma_+> / (2 eps2) on a composite state.
cplx reflection_coefficient(const DensityMatrix& rho, double Gamma, double eps2);
cplx reflection_from_sigma_plus(cplx sigma_plus, double Gamma, double eps2);

/// Flag threshold for implausible reflection magnitudes.
inline constexpr double kReflectionSanityCap = 2.0;

}  // namespace qsim::analysis
