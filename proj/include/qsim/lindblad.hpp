#pragma once

// Lindblad master equation on column-stacked density matrices:
//   vec(A rho B^dag) = (conj(B) (x) A) vec(rho).

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qsim/fockspace.hpp"
#include "qsim/model.hpp"

namespace qsim::lindblad {

using fock::cplx;
using fock::DensityMatrix;
using fock::Operator;
using fock::SparseMatrix;
using fock::SpaceTag;
using fock::Vector;

struct DissipatorSpec {
  Operator collapse_operator;
  double rate;  // rad/s, >= 0
};

/// Qubit decay Gamma D[sigma_-] plus thermal oscillator channels
/// (n_th + 1) gamma D[a] and n_th gamma D[a^dag]. Zero-rate channels are dropped.
std::vector<DissipatorSpec> standard_dissipators(int fock_cutoff, double Gamma, double gamma, double n_th);

class Liouvillian {
 public:
  struct PhasedPart {
    SparseMatrix superop;
    double frequency;  // contributes superop * exp(-i frequency t)
  };

  Liouvillian(SpaceTag tag, SparseMatrix static_superop, std::vector<PhasedPart> parts = {});

  const SpaceTag& tag() const { return tag_; }
  const SparseMatrix& static_superop() const { return static_; }
  const std::vector<PhasedPart>& time_dependent_parts() const { return parts_; }
  bool is_static() const { return parts_.empty(); }
  int state_dim() const { return tag_.dim() * tag_.dim(); }

  /// out = L(t) in, without rebuilding any matrix.
  void apply(double t, const Vector& in, Vector& out) const;
  Vector apply(double t, const Vector& in) const;

  /// max over columns of |sum of diagonal-index rows|: zero when the trace is conserved.
  double trace_functional_defect() const;

 private:
  SpaceTag tag_;
  SparseMatrix static_;
  std::vector<PhasedPart> parts_;
};

Liouvillian build_liouvillian(const Operator& hamiltonian, std::span<const DissipatorSpec> dissipators);
Liouvillian build_liouvillian(const model::SplitHamiltonian& hamiltonian,
                              std::span<const DissipatorSpec> dissipators);

Vector vectorize(const fock::DenseMatrix& rho);
fock::DenseMatrix unvectorize(const Vector& v, int dim);

struct EvolveOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double initial_step = 0.0;  // 0 picks one automatically
  long max_steps = 50'000'000;
  bool retain_states = false;
  /// Called at every sample time with the re-symmetrized state.
  std::function<void(double t, const DensityMatrix& rho)> on_sample;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;  // only when retain_states
  std::map<std::string, std::vector<cplx>> observables;
  double max_trace_drift = 0.0;
  double max_hermiticity_drift = 0.0;  // before re-symmetrization
  double min_eigenvalue = 0.0;
  long steps_accepted = 0;
  long steps_rejected = 0;
};

struct NamedObservable {
  std::string name;
  Operator op;
};

/// Adaptive Dormand-Prince 5(4) with dense output at the requested times.
/// sample_times must be sorted, non-decreasing from 0 (the initial time).
Trajectory evolve(const Liouvillian& L, const DensityMatrix& rho0, std::span<const double> sample_times,
                  std::span<const NamedObservable> observables, const EvolveOptions& options = {});

/// Same integrator on an arbitrary state vector (rho0 need not be a valid
/// density matrix); returns the state at t_end.
Vector propagate(const Liouvillian& L, const Vector& v0, double t0, double t_end, const EvolveOptions& options = {});

struct SteadyStateOptions {
  /// Residual bound on ||L rho|| / max|L_ij|.
  double residual_tol = 1e-10;
  /// Two independently constrained solves must agree to this level, else
  /// the null space is treated as degenerate.
  double uniqueness_tol = 1e-6;
};

struct SteadyStateResult {
  DensityMatrix rho;
  double residual;
};

/// Null vector of a static Liouvillian with unit trace (direct sparse LU on the
/// system with one row replaced by the trace functional).
SteadyStateResult steady_state_with_residual(const Liouvillian& L, const SteadyStateOptions& options = {});
DensityMatrix steady_state(const Liouvillian& L, const SteadyStateOptions& options = {});

}  // namespace qsim::lindblad
