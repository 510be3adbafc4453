#include "qsim/fockspace.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "qsim/errors.hpp"

namespace qsim::fock {

namespace {

using Triplet = Eigen::Triplet<cplx>;

SparseMatrix from_triplets(int dim, const std::vector<Triplet>& entries) {
  SparseMatrix m(dim, dim);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  return m;
}

const char* layout_name(Layout l) {
  switch (l) {
    case Layout::qubit:
      return "qubit";
    case Layout::oscillator:
      return "oscillator";
    case Layout::composite:
      return "composite";
  }
  return "?";
}

std::string describe(const SpaceTag& t) {
  return std::string(layout_name(t.layout)) + "(N=" + std::to_string(t.fock_cutoff) + ")";
}

}  // namespace

SpaceTag SpaceTag::qubit() { return {Layout::qubit, 0}; }

SpaceTag SpaceTag::oscillator(int fock_cutoff) {
  if (fock_cutoff < 2) throw InvalidArgument("fock cutoff must be >= 2");
  return {Layout::oscillator, fock_cutoff};
}

SpaceTag SpaceTag::composite(int fock_cutoff) {
  if (fock_cutoff < 2) throw InvalidArgument("fock cutoff must be >= 2");
  return {Layout::composite, fock_cutoff};
}

int SpaceTag::dim() const {
  switch (layout) {
    case Layout::qubit:
      return 2;
    case Layout::oscillator:
      return fock_cutoff;
    case Layout::composite:
      return 2 * fock_cutoff;
  }
  return 0;
}

void require_same_space(const SpaceTag& a, const SpaceTag& b, const char* what) {
  if (!(a == b)) {
    throw InvalidArgument(std::string(what) + ": space mismatch " + describe(a) + " vs " +
                          describe(b));
  }
}

// --- Operator ----------------------------------------------------------------

Operator::Operator(SpaceTag tag, SparseMatrix data, bool hermitian_hint)
    : tag_(tag), data_(std::move(data)), hermitian_hint_(hermitian_hint) {
  if (data_.rows() != tag_.dim() || data_.cols() != tag_.dim()) {
    throw InvalidArgument("operator shape " + std::to_string(data_.rows()) + "x" +
                          std::to_string(data_.cols()) + " does not match " + describe(tag_));
  }
  data_.makeCompressed();
  if (hermitian_hint_ && hermiticity_error() >= 1e-12) {
    throw InvalidArgument("operator flagged Hermitian but max|A - A^dag| = " +
                          std::to_string(hermiticity_error()));
  }
}

Operator Operator::identity(SpaceTag tag) {
  SparseMatrix id(tag.dim(), tag.dim());
  id.setIdentity();
  return Operator(tag, std::move(id), true);
}

Operator Operator::zero(SpaceTag tag) { return Operator(tag, SparseMatrix(tag.dim(), tag.dim()), true); }

Operator Operator::from_dense(SpaceTag tag, const DenseMatrix& m, bool hermitian_hint,
                              double drop_below) {
  SparseMatrix s = m.sparseView();
  if (drop_below > 0.0) s.prune([drop_below](int, int, const cplx& v) { return std::abs(v) > drop_below; });
  return Operator(tag, std::move(s), hermitian_hint);
}

Operator Operator::adjoint() const { return Operator(tag_, data_.adjoint(), hermitian_hint_); }

double Operator::hermiticity_error() const {
  SparseMatrix diff = data_ - SparseMatrix(data_.adjoint());
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

Operator Operator::as_hermitian() const { return Operator(tag_, data_, true); }

Vector Operator::apply(const Vector& v) const {
  if (v.size() != dim()) throw InvalidArgument("operator applied to vector of wrong dimension");
  return data_ * v;
}

Vector Operator::apply(const Ket& k) const {
  require_same_space(tag_, k.tag(), "Operator::apply");
  return data_ * k.amplitudes();
}

Operator operator+(const Operator& a, const Operator& b) {
  require_same_space(a.tag_, b.tag_, "operator+");
  return Operator(a.tag_, a.data_ + b.data_, a.hermitian_hint_ && b.hermitian_hint_);
}

Operator operator-(const Operator& a, const Operator& b) {
  require_same_space(a.tag_, b.tag_, "operator-");
  return Operator(a.tag_, a.data_ - b.data_, a.hermitian_hint_ && b.hermitian_hint_);
}

Operator operator*(const Operator& a, const Operator& b) {
  require_same_space(a.tag_, b.tag_, "operator*");
  SparseMatrix p = a.data_ * b.data_;
  return Operator(a.tag_, std::move(p), false);
}

Operator operator*(cplx s, const Operator& a) {
  return Operator(a.tag_, s * a.data_, a.hermitian_hint_ && s.imag() == 0.0);
}

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

// --- states -------------------------------------------------------------------

Ket::Ket(SpaceTag tag, Vector amplitudes) : tag_(tag), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != tag_.dim()) throw InvalidArgument("ket dimension does not match its space");
  const double norm = amplitudes_.norm();
  if (std::abs(norm - 1.0) > 1e-10) {
    throw InvalidArgument("ket not normalized: |psi| = " + std::to_string(norm));
  }
}

Ket Ket::normalized(SpaceTag tag, Vector amplitudes) {
  const double norm = amplitudes.norm();
  if (norm == 0.0 || !std::isfinite(norm)) throw InvalidArgument("cannot normalize the null vector");
  amplitudes /= norm;
  return Ket(tag, std::move(amplitudes));
}

DensityMatrix::DensityMatrix(SpaceTag tag, DenseMatrix data, double positivity_floor)
    : tag_(tag), data_(std::move(data)) {
  if (data_.rows() != tag_.dim() || data_.cols() != tag_.dim()) {
    throw InvalidArgument("density matrix shape does not match " + describe(tag_));
  }
  const double herm = (data_ - data_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermiticityTol) {
    throw InvalidArgument("density matrix not Hermitian: max|rho - rho^dag| = " + std::to_string(herm));
  }
  const cplx tr = data_.trace();
  if (std::abs(tr - 1.0) > kTraceTol) {
    throw InvalidArgument("density matrix trace " + std::to_string(tr.real()) + " != 1");
  }
  const double lo = min_eigenvalue();
  if (lo < positivity_floor) {
    throw InvalidArgument("density matrix has negative eigenvalue " + std::to_string(lo));
  }
}

double DensityMatrix::min_eigenvalue() const {
  const DenseMatrix h = 0.5 * (data_ + data_.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

DensityMatrix DensityMatrix::pure(const Ket& k) {
  return DensityMatrix(k.tag(), k.amplitudes() * k.amplitudes().adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(SpaceTag tag) {
  const int d = tag.dim();
  return DensityMatrix(tag, DenseMatrix::Identity(d, d) / static_cast<double>(d));
}

DensityMatrix DensityMatrix::thermal(int fock_cutoff, double n_th) {
  if (n_th < 0.0) throw InvalidArgument("thermal occupation must be >= 0");
  const SpaceTag tag = SpaceTag::oscillator(fock_cutoff);
  DenseMatrix m = DenseMatrix::Zero(fock_cutoff, fock_cutoff);
  // p_n proportional to (n_th / (n_th + 1))^n, renormalized on the truncated space.
  const double ratio = n_th / (n_th + 1.0);
  double p = 1.0, total = 0.0;
  for (int n = 0; n < fock_cutoff; ++n) {
    m(n, n) = p;
    total += p;
    p *= ratio;
  }
  m /= total;
  return DensityMatrix(tag, std::move(m));
}

DensityMatrix DensityMatrix::ground_qubit_product(const DensityMatrix& oscillator) {
  if (oscillator.tag().layout != Layout::oscillator) {
    throw InvalidArgument("ground_qubit_product expects an oscillator state");
  }
  const int n = oscillator.dim();
  DenseMatrix m = DenseMatrix::Zero(2 * n, 2 * n);
  m.topLeftCorner(n, n) = oscillator.data();
  return DensityMatrix(SpaceTag::composite(n), std::move(m));
}

Ket tensor(const Ket& qubit, const Ket& oscillator) {
  if (qubit.tag().layout != Layout::qubit || oscillator.tag().layout != Layout::oscillator) {
    throw InvalidArgument("tensor(Ket, Ket) expects qubit (x) oscillator");
  }
  Vector v = Eigen::kroneckerProduct(qubit.amplitudes(), oscillator.amplitudes()).eval();
  return Ket::normalized(SpaceTag::composite(oscillator.tag().fock_cutoff), std::move(v));
}

Operator tensor(const Operator& qubit_op, const Operator& oscillator_op) {
  if (qubit_op.tag().layout != Layout::qubit || oscillator_op.tag().layout != Layout::oscillator) {
    throw InvalidArgument("tensor(Operator, Operator) expects qubit (x) oscillator");
  }
  SparseMatrix k = Eigen::kroneckerProduct(qubit_op.data(), oscillator_op.data()).eval();
  return Operator(SpaceTag::composite(oscillator_op.tag().fock_cutoff), std::move(k),
                  qubit_op.hermitian_hint() && oscillator_op.hermitian_hint());
}

Ladder ladder_operators(int fock_cutoff) {
  const SpaceTag tag = SpaceTag::oscillator(fock_cutoff);
  std::vector<Triplet> lower;
  for (int n = 1; n < fock_cutoff; ++n) lower.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  Operator a(tag, from_triplets(fock_cutoff, lower));
  return {a, a.adjoint()};
}

Operator number_operator(int fock_cutoff) {
  std::vector<Triplet> diag;
  for (int n = 1; n < fock_cutoff; ++n) diag.emplace_back(n, n, static_cast<double>(n));
  return Operator(SpaceTag::oscillator(fock_cutoff), from_triplets(fock_cutoff, diag), true);
}

QubitOps qubit_operators() {
  const SpaceTag tag = SpaceTag::qubit();
  // index 0 = |g>, index 1 = |e>
  Operator sz(tag, from_triplets(2, {{0, 0, -1.0}, {1, 1, 1.0}}), true);
  Operator sp(tag, from_triplets(2, {{1, 0, 1.0}}));
  Operator sm = sp.adjoint();
  Operator sx = (sp + sm).as_hermitian();
  return {sz, sx, sp, sm};
}

Operator on_composite(const Operator& oscillator_op) {
  return tensor(Operator::identity(SpaceTag::qubit()), oscillator_op);
}

Operator on_composite(const Operator& qubit_op, int fock_cutoff) {
  return tensor(qubit_op, Operator::identity(SpaceTag::oscillator(fock_cutoff)));
}

Ket qubit_ground() { return Ket(SpaceTag::qubit(), Vector::Unit(2, 0)); }
Ket qubit_excited() { return Ket(SpaceTag::qubit(), Vector::Unit(2, 1)); }

// --- preparation --------------------------------------------------------------

namespace {

// Infinite-space amplitudes restricted to the first `count` levels.
Vector coherent_amplitudes(cplx alpha, int count) {
  Vector c(count);
  c[0] = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < count; ++n) c[n] = c[n - 1] * alpha / std::sqrt(static_cast<double>(n));
  return c;
}

Vector squeezed_amplitudes(double eta, int count) {
  Vector c = Vector::Zero(count);
  const double t = -std::tanh(eta);
  c[0] = 1.0 / std::sqrt(std::cosh(eta));
  for (int n = 2; n < count; n += 2) {
    c[n] = c[n - 2] * t * std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return c;
}

Vector cat_amplitudes(cplx alpha, Parity parity, int count) {
  Vector c = coherent_amplitudes(alpha, count);
  const double sign = parity == Parity::even ? 1.0 : -1.0;
  const double norm = 2.0 * (1.0 + sign * std::exp(-2.0 * std::norm(alpha)));
  const double scale = 2.0 / std::sqrt(norm);
  for (int n = 0; n < count; ++n) {
    const bool keep = (n % 2 == 0) == (parity == Parity::even);
    c[n] = keep ? c[n] * scale : cplx{0.0, 0.0};
  }
  return c;
}

double amplitude_scale(const OscillatorSpec& spec) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Coherent> || std::is_same_v<T, Cat>) return std::abs(s.alpha);
        else return 0.0;
      },
      spec);
}

Vector raw_amplitudes(const OscillatorSpec& spec, int count) {
  return std::visit(
      [count](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Fock>) {
          if (s.n < 0) throw InvalidArgument("Fock level must be >= 0");
          Vector v = Vector::Zero(count);
          if (s.n < count) v[s.n] = 1.0;
          return v;
        } else if constexpr (std::is_same_v<T, Coherent>) {
          return coherent_amplitudes(s.alpha, count);
        } else if constexpr (std::is_same_v<T, SqueezedVacuum>) {
          if (!std::isfinite(s.eta)) throw InvalidArgument("squeezing parameter must be finite");
          return squeezed_amplitudes(s.eta, count);
        } else {
          if (s.parity == Parity::odd && std::abs(s.alpha) == 0.0) {
            throw InvalidArgument("odd cat with alpha = 0 is the null vector");
          }
          return cat_amplitudes(s.alpha, s.parity, count);
        }
      },
      spec);
}

// Leakage = weight on the top two kept levels plus everything beyond the cutoff.
double tail_leakage(const Vector& amps) {
  const int n = static_cast<int>(amps.size());
  const double kept = amps.squaredNorm();
  return std::norm(amps[n - 1]) + std::norm(amps[n - 2]) + std::max(0.0, 1.0 - kept);
}

Ket prepare_oscillator(const OscillatorSpec& spec, int fock_cutoff) {
  const SpaceTag tag = SpaceTag::oscillator(fock_cutoff);
  if (const auto* f = std::get_if<Fock>(&spec); f && f->n >= fock_cutoff) {
    throw InvalidArgument("Fock level " + std::to_string(f->n) + " outside cutoff");
  }
  const double r = amplitude_scale(spec);
  if (r * r + 5.0 * r >= fock_cutoff) {
    throw InvalidArgument("cutoff " + std::to_string(fock_cutoff) + " too small for |alpha| = " +
                          std::to_string(r));
  }
  Vector amps = raw_amplitudes(spec, fock_cutoff);
  const double leak = std::holds_alternative<Fock>(spec) ? 0.0 : tail_leakage(amps);
  if (leak > kTailLeakageTol) {
    throw InvalidArgument("cutoff " + std::to_string(fock_cutoff) + " leaks norm " + std::to_string(leak));
  }
  return Ket::normalized(tag, std::move(amps));
}

}  // namespace

Ket prepare_state(const StateSpec& spec, int fock_cutoff) {
  if (const auto* prod = std::get_if<GroundQubitProduct>(&spec)) {
    return tensor(qubit_ground(), prepare_oscillator(prod->oscillator, fock_cutoff));
  }
  const OscillatorSpec osc = std::visit(
      [](const auto& s) -> OscillatorSpec {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, GroundQubitProduct>) return s.oscillator;
        else return s;
      },
      spec);
  return prepare_oscillator(osc, fock_cutoff);
}

int required_cutoff(const OscillatorSpec& spec) {
  for (int n = 2; n < 2000; ++n) {
    const double r = amplitude_scale(spec);
    if (r * r + 5.0 * r >= n) continue;
    if (const auto* f = std::get_if<Fock>(&spec); f && f->n >= n) continue;
    if (std::holds_alternative<Fock>(spec) || tail_leakage(raw_amplitudes(spec, n)) <= kTailLeakageTol) return n;
  }
  throw InvalidArgument("state needs an unreasonably large cutoff");
}

// --- transformations ------------------------------------------------------------

Operator polaron_transform(double lambda, int fock_cutoff) {
  if (!std::isfinite(lambda)) throw InvalidArgument("polaron parameter must be real and finite");
  if (std::abs(lambda) >= 1.0) throw InvalidArgument("polaron parameter must satisfy |lambda| < 1");
  const auto [a, ad] = ladder_operators(fock_cutoff);
  const Operator generator = tensor(qubit_operators().sigma_z, ad - a);
  const DenseMatrix u = (cplx(-lambda, 0.0) * generator.dense()).exp();
  return Operator::from_dense(SpaceTag::composite(fock_cutoff), u, false, 1e-300);
}

DensityMatrix partial_trace_qubit(const DensityMatrix& rho) {
  if (rho.tag().layout != Layout::composite) {
    throw InvalidArgument("partial_trace_qubit expects a composite state");
  }
  const int n = rho.tag().fock_cutoff;
  DenseMatrix reduced = rho.data().topLeftCorner(n, n) + rho.data().bottomRightCorner(n, n);
  reduced = 0.5 * (reduced + reduced.adjoint()).eval();
  return DensityMatrix(SpaceTag::oscillator(n), std::move(reduced), DensityMatrix::kSampledPositivityFloor);
}

cplx expectation(const Operator& op, const DensityMatrix& rho) {
  require_same_space(op.tag(), rho.tag(), "expectation");
  // Tr(O rho) = sum_ij O_ij rho_ji
  cplx sum = 0.0;
  const SparseMatrix& o = op.data();
  for (int i = 0; i < o.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(o, i); it; ++it) sum += it.value() * rho.data()(it.col(), it.row());
  return sum;
}

cplx expectation(const Operator& op, const Ket& psi) {
  require_same_space(op.tag(), psi.tag(), "expectation");
  return psi.amplitudes().dot(op.data() * psi.amplitudes());
}

}  // namespace qsim::fock
