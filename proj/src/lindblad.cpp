#include "qsim/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>

#include "qsim/errors.hpp"

namespace qsim::lindblad {

namespace {

using ColMajorSparse = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

SparseMatrix identity(int d) {
  SparseMatrix id(d, d);
  id.setIdentity();
  return id;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  SparseMatrix k = Eigen::kroneckerProduct(a, b).eval();
  k.makeCompressed();
  return k;
}

// -i [H, .]
SparseMatrix commutator_superop(const SparseMatrix& h) {
  const int d = static_cast<int>(h.rows());
  const SparseMatrix id = identity(d);
  const SparseMatrix ht = h.transpose();
  return cplx(0.0, -1.0) * (kron(id, h) - kron(ht, id));
}

// rate * (c rho c^dag - {c^dag c, rho}/2)
SparseMatrix dissipator_superop(const SparseMatrix& c, double rate) {
  const int d = static_cast<int>(c.rows());
  const SparseMatrix id = identity(d);
  const SparseMatrix cdc = c.adjoint() * c;
  const SparseMatrix cdc_t = cdc.transpose();
  const SparseMatrix cconj = c.conjugate();
  return cplx(rate) * (kron(cconj, c) - cplx(0.5) * kron(id, cdc) - cplx(0.5) * kron(cdc_t, id));
}

SparseMatrix dissipators_superop(const SpaceTag& tag, std::span<const DissipatorSpec> dissipators) {
  const int d = tag.dim();
  SparseMatrix total(d * d, d * d);
  for (const auto& ds : dissipators) {
    fock::require_same_space(tag, ds.collapse_operator.tag(), "build_liouvillian");
    if (!(ds.rate >= 0.0) || !std::isfinite(ds.rate)) throw InvalidArgument("dissipator rate must be >= 0");
    if (ds.rate == 0.0) continue;
    total += dissipator_superop(ds.collapse_operator.data(), ds.rate);
  }
  return total;
}

// --- Dormand-Prince 5(4) -----------------------------------------------------------

namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dp

class DormandPrince {
 public:
  DormandPrince(const Liouvillian& L, Vector y0, double t0, const EvolveOptions& opt)
      : L_(L), opt_(opt), t_(t0), y_(std::move(y0)) {
    const auto n = y_.size();
    for (Vector* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &ynew_}) v->resize(n);
    L_.apply(t_, y_, k1_);
  }

  double t() const { return t_; }
  const Vector& y() const { return y_; }
  long accepted() const { return accepted_; }
  long rejected() const { return rejected_; }

  /// Advances one accepted step, never beyond t_limit. Returns the step size taken.
  double step(double t_limit) {
    if (h_ <= 0.0) h_ = initial_step(t_limit - t_);
    bool last_rejected = false;
    for (;;) {
      if (accepted_ + rejected_ > opt_.max_steps) {
        throw SolverError("integrator exceeded max_steps at t = " + std::to_string(t_), t_);
      }
      double h = std::min(h_, t_limit - t_);
      if (h <= std::max(1e-14 * std::abs(t_), 1e-300)) {
        throw SolverError("step size underflow at t = " + std::to_string(t_), t_);
      }
      const double err = attempt(h);
      if (!std::isfinite(err)) {
        h_ = 0.1 * h;
        ++rejected_;
        last_rejected = true;
        continue;
      }
      constexpr double beta = 0.04, safe = 0.9, facc1 = 5.0, facc2 = 0.1;
      const double fac11 = std::pow(err, 0.2 - 0.75 * beta);
      if (err <= 1.0) {
        double fac = fac11 / std::pow(err_old_, beta);
        fac = std::clamp(fac / safe, facc2, facc1);
        double h_next = h / fac;
        if (last_rejected) h_next = std::min(h_next, h);
        err_old_ = std::max(err, 1e-4);
        // Dense-output coefficients for the accepted interval.
        r1_ = y_;
        r2_ = ynew_ - y_;
        r3_ = h * k1_ - r2_;
        r4_ = r2_ - h * k7_ - r3_;
        r5_ = h * (dp::d1 * k1_ + dp::d3 * k3_ + dp::d4 * k4_ + dp::d5 * k5_ + dp::d6 * k6_ + dp::d7 * k7_);
        t_prev_ = t_;
        h_last_ = h;
        t_ += h;
        y_.swap(ynew_);
        k1_.swap(k7_);
        h_ = h_next;
        ++accepted_;
        return h;
      }
      h_ = h / std::min(facc1, fac11 / safe);
      ++rejected_;
      last_rejected = true;
    }
  }

  /// Interpolates inside the last accepted step.
  Vector dense(double t) const {
    const double theta = (t - t_prev_) / h_last_;
    const double t1 = 1.0 - theta;
    return r1_ + theta * (r2_ + t1 * (r3_ + theta * (r4_ + t1 * r5_)));
  }

 private:
  double error_norm(const Vector& err, const Vector& a, const Vector& b) const {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double sk = opt_.atol + opt_.rtol * std::max(std::abs(a[i]), std::abs(b[i]));
      sum += std::norm(err[i]) / (sk * sk);
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
  }

  double initial_step(double span) {
    if (opt_.initial_step > 0.0) return std::min(opt_.initial_step, span);
    Vector zero = Vector::Zero(y_.size());
    const double d0 = error_norm(y_, y_, zero);
    const double d1 = error_norm(k1_, y_, zero);
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    return std::min(h, span);
  }

  double attempt(double h) {
    using namespace dp;
    tmp_ = y_ + h * (a21 * k1_);
    L_.apply(t_ + c2 * h, tmp_, k2_);
    tmp_ = y_ + h * (a31 * k1_ + a32 * k2_);
    L_.apply(t_ + c3 * h, tmp_, k3_);
    tmp_ = y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    L_.apply(t_ + c4 * h, tmp_, k4_);
    tmp_ = y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    L_.apply(t_ + c5 * h, tmp_, k5_);
    tmp_ = y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    L_.apply(t_ + h, tmp_, k6_);
    ynew_ = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
    L_.apply(t_ + h, ynew_, k7_);
    tmp_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    return error_norm(tmp_, y_, ynew_);
  }

  const Liouvillian& L_;
  const EvolveOptions& opt_;
  double t_;
  Vector y_;
  Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_;
  Vector r1_, r2_, r3_, r4_, r5_;
  double h_ = 0.0;
  double h_last_ = 0.0;
  double t_prev_ = 0.0;
  double err_old_ = 1e-4;
  long accepted_ = 0;
  long rejected_ = 0;
};

}  // namespace

std::vector<DissipatorSpec> standard_dissipators(int fock_cutoff, double Gamma, double gamma, double n_th) {
  if (Gamma < 0.0 || gamma < 0.0 || n_th < 0.0) throw InvalidArgument("rates and n_th must be >= 0");
  const auto [a, ad] = fock::ladder_operators(fock_cutoff);
  std::vector<DissipatorSpec> out;
  if (Gamma > 0.0) out.push_back({fock::on_composite(fock::qubit_operators().sigma_minus, fock_cutoff), Gamma});
  if (gamma > 0.0) {
    out.push_back({fock::on_composite(a), (n_th + 1.0) * gamma});
    if (n_th > 0.0) out.push_back({fock::on_composite(ad), n_th * gamma});
  }
  return out;
}

Liouvillian::Liouvillian(SpaceTag tag, SparseMatrix static_superop, std::vector<PhasedPart> parts)
    : tag_(tag), static_(std::move(static_superop)), parts_(std::move(parts)) {
  const int n = state_dim();
  if (static_.rows() != n || static_.cols() != n) throw InvalidArgument("superoperator shape mismatch");
  for (const auto& p : parts_) {
    if (p.superop.rows() != n || p.superop.cols() != n) throw InvalidArgument("superoperator shape mismatch");
  }
}

void Liouvillian::apply(double t, const Vector& in, Vector& out) const {
  out.noalias() = static_ * in;
  for (const auto& p : parts_) {
    const cplx phase = std::exp(cplx(0.0, -p.frequency * t));
    out.noalias() += phase * (p.superop * in);
  }
}

Vector Liouvillian::apply(double t, const Vector& in) const {
  Vector out(in.size());
  apply(t, in, out);
  return out;
}

double Liouvillian::trace_functional_defect() const {
  const int d = tag_.dim();
  Vector sums = Vector::Zero(state_dim());
  for (int i = 0; i < d; ++i) {
    const int row = i * d + i;
    for (SparseMatrix::InnerIterator it(static_, row); it; ++it) sums[it.col()] += it.value();
  }
  return sums.cwiseAbs().maxCoeff();
}

Liouvillian build_liouvillian(const Operator& hamiltonian, std::span<const DissipatorSpec> dissipators) {
  SparseMatrix superop = commutator_superop(hamiltonian.data()) + dissipators_superop(hamiltonian.tag(), dissipators);
  superop.makeCompressed();
  return Liouvillian(hamiltonian.tag(), std::move(superop));
}

Liouvillian build_liouvillian(const model::SplitHamiltonian& hamiltonian,
                              std::span<const DissipatorSpec> dissipators) {
  SparseMatrix superop = commutator_superop(hamiltonian.static_part.data()) +
                         dissipators_superop(hamiltonian.tag(), dissipators);
  superop.makeCompressed();
  std::vector<Liouvillian::PhasedPart> parts;
  for (const auto& term : hamiltonian.terms) {
    fock::require_same_space(hamiltonian.tag(), term.op.tag(), "build_liouvillian");
    parts.push_back({commutator_superop(term.op.data()), term.frequency});
  }
  return Liouvillian(hamiltonian.tag(), std::move(superop), std::move(parts));
}

Vector vectorize(const fock::DenseMatrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

fock::DenseMatrix unvectorize(const Vector& v, int dim) {
  if (v.size() != static_cast<Eigen::Index>(dim) * dim) throw InvalidArgument("unvectorize: size mismatch");
  return Eigen::Map<const fock::DenseMatrix>(v.data(), dim, dim);
}

Trajectory evolve(const Liouvillian& L, const DensityMatrix& rho0, std::span<const double> sample_times,
                  std::span<const NamedObservable> observables, const EvolveOptions& options) {
  fock::require_same_space(L.tag(), rho0.tag(), "evolve");
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) throw InvalidArgument("sample times must be sorted");
  if (!sample_times.empty() && sample_times.front() < 0.0) throw InvalidArgument("sample times must be >= 0");
  for (const auto& o : observables) fock::require_same_space(L.tag(), o.op.tag(), "evolve observable");

  const int d = L.tag().dim();
  Trajectory traj;
  traj.min_eigenvalue = rho0.min_eigenvalue();
  for (const auto& o : observables) traj.observables[o.name];

  auto record = [&](double t, const Vector& v) {
    fock::DenseMatrix m = unvectorize(v, d);
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    m = 0.5 * (m + m.adjoint()).eval();
    const double drift = std::abs(m.trace() - 1.0);
    traj.max_hermiticity_drift = std::max(traj.max_hermiticity_drift, herm);
    traj.max_trace_drift = std::max(traj.max_trace_drift, drift);
    if (drift > 1e-7) throw SolverError("trace drift " + std::to_string(drift) + " at t = " + std::to_string(t), t);
    DensityMatrix rho = [&] {
      try {
        return DensityMatrix(L.tag(), std::move(m), DensityMatrix::kSampledPositivityFloor);
      } catch (const InvalidArgument& e) {
        throw SolverError(std::string("tolerance not met: ") + e.what(), t);
      }
    }();
    traj.min_eigenvalue = std::min(traj.min_eigenvalue, rho.min_eigenvalue());
    traj.times.push_back(t);
    for (const auto& o : observables) traj.observables[o.name].push_back(fock::expectation(o.op, rho));
    if (options.on_sample) options.on_sample(t, rho);
    if (options.retain_states) traj.states.push_back(std::move(rho));
  };

  DormandPrince solver(L, vectorize(rho0.data()), 0.0, options);
  std::size_t next = 0;
  while (next < sample_times.size() && sample_times[next] <= 0.0) record(sample_times[next++], solver.y());
  if (next < sample_times.size()) {
    const double t_end = sample_times.back();
    while (next < sample_times.size()) {
      solver.step(t_end);
      while (next < sample_times.size() && sample_times[next] <= solver.t()) {
        const double ts = sample_times[next++];
        record(ts, ts == solver.t() ? solver.y() : solver.dense(ts));
      }
    }
  }
  traj.steps_accepted = solver.accepted();
  traj.steps_rejected = solver.rejected();
  return traj;
}

Vector propagate(const Liouvillian& L, const Vector& v0, double t0, double t_end, const EvolveOptions& options) {
  if (v0.size() != L.state_dim()) throw InvalidArgument("propagate: state size mismatch");
  if (t_end < t0) throw InvalidArgument("propagate: t_end < t0");
  DormandPrince solver(L, v0, t0, options);
  while (solver.t() < t_end) solver.step(t_end);
  return solver.y();
}

namespace {

Vector solve_with_constraint_row(const ColMajorSparse& base, int row, int d) {
  ColMajorSparse a = base;
  // Zero the chosen row, then write the trace functional into it.
  for (int k = 0; k < a.outerSize(); ++k)
    for (ColMajorSparse::InnerIterator it(a, k); it; ++it)
      if (it.row() == row) it.valueRef() = 0.0;
  for (int i = 0; i < d; ++i) a.coeffRef(row, i * d + i) = 1.0;
  a.prune(cplx(0.0), 0.0);
  a.makeCompressed();

  Eigen::SparseLU<ColMajorSparse> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) {
    throw DegenerateSteadyState("steady state: singular augmented system (" + lu.lastErrorMessage() + ")");
  }
  Vector rhs = Vector::Zero(a.rows());
  rhs[row] = 1.0;
  Vector x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SolverError("steady state: sparse solve failed");
  return x;
}

}  // namespace

SteadyStateResult steady_state_with_residual(const Liouvillian& L, const SteadyStateOptions& options) {
  if (!L.is_static()) throw InvalidArgument("steady_state requires a time-independent Liouvillian");
  const int d = L.tag().dim();
  const ColMajorSparse base = L.static_superop();
  double scale = 0.0;
  for (int k = 0; k < base.outerSize(); ++k)
    for (ColMajorSparse::InnerIterator it(base, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  if (scale == 0.0) throw DegenerateSteadyState("steady state: zero Liouvillian has no unique null vector");

  const Vector first = solve_with_constraint_row(base, 0, d);
  const Vector second = solve_with_constraint_row(base, (d - 1) * d + (d - 1), d);
  const double disagreement = (first - second).cwiseAbs().maxCoeff();
  if (disagreement > options.uniqueness_tol) {
    throw DegenerateSteadyState("steady state: null space is degenerate (constrained solves differ by " +
                                std::to_string(disagreement) + ")");
  }

  fock::DenseMatrix m = unvectorize(first, d);
  m = 0.5 * (m + m.adjoint()).eval();
  m /= m.trace();
  const Vector v = vectorize(m);
  const double residual = L.apply(0.0, v).norm() / scale;
  if (residual > options.residual_tol) {
    throw SolverError("steady state residual " + std::to_string(residual) + " above tolerance");
  }
  try {
    return {DensityMatrix(L.tag(), std::move(m)), residual};
  } catch (const InvalidArgument& e) {
    throw SolverError(std::string("steady state is not a valid density matrix: ") + e.what());
  }
}

DensityMatrix steady_state(const Liouvillian& L, const SteadyStateOptions& options) {
  return steady_state_with_residual(L, options).rho;
}

}  // namespace qsim::lindblad
