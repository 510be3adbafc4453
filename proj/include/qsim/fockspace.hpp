#pragma once

// Truncated Fock-space and qubit operator algebra.
//
// Composite states use the layout qubit (x) oscillator with the qubit index
// slow: basis index = q * N + n, q = 0 for |g>, q = 1 for |e>.

#include <complex>
#include <variant>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qsim::fock {

using cplx = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using DenseMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

enum class Layout { qubit, oscillator, composite };

struct SpaceTag {
  Layout layout = Layout::oscillator;
  int fock_cutoff = 0;  // 0 for the bare qubit

  static SpaceTag qubit();
  static SpaceTag oscillator(int fock_cutoff);
  static SpaceTag composite(int fock_cutoff);

  bool has_qubit() const { return layout != Layout::oscillator; }
  bool has_oscillator() const { return layout != Layout::qubit; }
  int dim() const;

  friend bool operator==(const SpaceTag&, const SpaceTag&) = default;
};

/// Throws InvalidArgument when the two tags differ.
void require_same_space(const SpaceTag& a, const SpaceTag& b, const char* what);

class Ket;

/// Sparse square operator on a tagged space. Immutable.
class Operator {
 public:
  Operator(SpaceTag tag, SparseMatrix data, bool hermitian_hint = false);

  static Operator identity(SpaceTag tag);
  static Operator zero(SpaceTag tag);
  static Operator from_dense(SpaceTag tag, const DenseMatrix& m, bool hermitian_hint = false,
                             double drop_below = 0.0);

  const SpaceTag& tag() const { return tag_; }
  const SparseMatrix& data() const { return data_; }
  bool hermitian_hint() const { return hermitian_hint_; }
  int dim() const { return tag_.dim(); }

  DenseMatrix dense() const { return DenseMatrix(data_); }
  Operator adjoint() const;
  /// max |A - A^dag| element-wise.
  double hermiticity_error() const;
  cplx element(int row, int col) const { return data_.coeff(row, col); }

  /// Returns an equal operator that claims Hermiticity (checked).
  Operator as_hermitian() const;

  Vector apply(const Vector& v) const;
  Vector apply(const Ket& k) const;

  friend Operator operator+(const Operator& a, const Operator& b);
  friend Operator operator-(const Operator& a, const Operator& b);
  friend Operator operator*(const Operator& a, const Operator& b);
  friend Operator operator*(cplx s, const Operator& a);
  friend Operator operator*(const Operator& a, cplx s) { return s * a; }

 private:
  SpaceTag tag_;
  SparseMatrix data_;
  bool hermitian_hint_;
};

Operator commutator(const Operator& a, const Operator& b);

/// Normalized pure state.
class Ket {
 public:
  Ket(SpaceTag tag, Vector amplitudes);
  /// Rescales to unit norm; rejects the null vector.
  static Ket normalized(SpaceTag tag, Vector amplitudes);

  const SpaceTag& tag() const { return tag_; }
  const Vector& amplitudes() const { return amplitudes_; }
  cplx operator[](int i) const { return amplitudes_[i]; }

 private:
  SpaceTag tag_;
  Vector amplitudes_;
};

/// Hermitian, unit-trace, positive semidefinite matrix.
class DensityMatrix {
 public:
  static constexpr double kHermiticityTol = 1e-10;
  static constexpr double kTraceTol = 1e-8;
  static constexpr double kPositivityFloor = -1e-8;
  /// Looser floor for states produced by time integration.
  static constexpr double kSampledPositivityFloor = -1e-6;

  /// Validates all invariants; positivity_floor relaxes the eigenvalue bound
  /// for states sampled off an integrator.
  DensityMatrix(SpaceTag tag, DenseMatrix data, double positivity_floor = kPositivityFloor);

  static DensityMatrix pure(const Ket& k);
  static DensityMatrix maximally_mixed(SpaceTag tag);
  static DensityMatrix thermal(int fock_cutoff, double n_th);
  /// |g><g| (x) rho_osc.
  static DensityMatrix ground_qubit_product(const DensityMatrix& oscillator);

  const SpaceTag& tag() const { return tag_; }
  const DenseMatrix& data() const { return data_; }
  int dim() const { return tag_.dim(); }
  cplx trace() const { return data_.trace(); }
  double min_eigenvalue() const;

 private:
  SpaceTag tag_;
  DenseMatrix data_;
};

Ket tensor(const Ket& qubit, const Ket& oscillator);
Operator tensor(const Operator& qubit_op, const Operator& oscillator_op);

struct Ladder {
  Operator a;
  Operator a_dag;
};
Ladder ladder_operators(int fock_cutoff);
Operator number_operator(int fock_cutoff);

struct QubitOps {
  Operator sigma_z;
  Operator sigma_x;
  Operator sigma_plus;
  Operator sigma_minus;
};
QubitOps qubit_operators();

/// Oscillator operator lifted to the composite space (identity on the qubit).
Operator on_composite(const Operator& oscillator_op);
/// Qubit operator lifted to the composite space.
Operator on_composite(const Operator& qubit_op, int fock_cutoff);

// --- state preparation ---------------------------------------------------

enum class Parity { even, odd };

struct Fock {
  int n;
};
struct Coherent {
  cplx alpha;
};
/// exp[(eta a^2 - eta a^dag^2)/2]|0>, real eta.
struct SqueezedVacuum {
  double eta;
};
struct Cat {
  cplx alpha;
  Parity parity;
};
using OscillatorSpec = std::variant<Fock, Coherent, SqueezedVacuum, Cat>;
struct GroundQubitProduct {
  OscillatorSpec oscillator;
};
using StateSpec = std::variant<Fock, Coherent, SqueezedVacuum, Cat, GroundQubitProduct>;

/// Norm leakage bound applied to the top two Fock levels.
inline constexpr double kTailLeakageTol = 1e-8;

Ket prepare_state(const StateSpec& spec, int fock_cutoff);
/// Smallest cutoff at which prepare_state accepts the oscillator spec.
int required_cutoff(const OscillatorSpec& spec);

Ket qubit_ground();
Ket qubit_excited();

// --- transformations and reductions --------------------------------------

/// exp[-lambda sigma_z (a^dag - a)] on the composite space.
Operator polaron_transform(double lambda, int fock_cutoff);

/// Reduced oscillator state; rejects oscillator-only input.
DensityMatrix partial_trace_qubit(const DensityMatrix& rho);

/// Tr(O rho).
cplx expectation(const Operator& op, const DensityMatrix& rho);
cplx expectation(const Operator& op, const Ket& psi);

}  // namespace qsim::fock
