#include "qsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include <unsupported/Eigen/MatrixFunctions>

#include "qsim/errors.hpp"

namespace qsim::analysis {

using fock::DenseMatrix;
using fock::Layout;

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_oscillator(const DensityMatrix& rho, const char* what) {
  if (rho.tag().layout != Layout::oscillator) throw InvalidArgument(std::string(what) + " expects an oscillator state");
}

DenseMatrix psd_sqrt(const DenseMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (m + m.adjoint()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

// <a^k> style moments straight from the matrix elements.
cplx moment_a(const DenseMatrix& rho) {
  cplx s = 0.0;
  for (int n = 1; n < rho.rows(); ++n) s += std::sqrt(static_cast<double>(n)) * rho(n, n - 1);
  return s;
}

cplx moment_a2(const DenseMatrix& rho) {
  cplx s = 0.0;
  for (int n = 2; n < rho.rows(); ++n) s += std::sqrt(static_cast<double>(n) * (n - 1)) * rho(n, n - 2);
  return s;
}

double moment_n(const DenseMatrix& rho) {
  double s = 0.0;
  for (int n = 1; n < rho.rows(); ++n) s += n * rho(n, n).real();
  return s;
}

}  // namespace

double fidelity(const DensityMatrix& rho_m, const Ket& psi) {
  require_oscillator(rho_m, "fidelity");
  fock::require_same_space(rho_m.tag(), psi.tag(), "fidelity");
  const cplx f = psi.amplitudes().dot(rho_m.data() * psi.amplitudes());
  return f.real();
}

double state_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  fock::require_same_space(rho.tag(), sigma.tag(), "state_fidelity");
  const DenseMatrix s = psd_sqrt(rho.data());
  const DenseMatrix inner = s * sigma.data() * s;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  const double tr = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return tr * tr;
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  fock::require_same_space(rho.tag(), sigma.tag(), "trace_distance");
  const DenseMatrix diff = rho.data() - sigma.data();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

std::vector<double> phonon_distribution(const DensityMatrix& rho_m) {
  require_oscillator(rho_m, "phonon_distribution");
  std::vector<double> p(rho_m.dim());
  for (int n = 0; n < rho_m.dim(); ++n) p[n] = rho_m.data()(n, n).real();
  return p;
}

double odd_population(const DensityMatrix& rho_m) {
  const auto p = phonon_distribution(rho_m);
  double odd = 0.0;
  for (std::size_t n = 1; n < p.size(); n += 2) odd += p[n];
  return odd;
}

double quadrature_variance(const DensityMatrix& rho_m, double angle) {
  require_oscillator(rho_m, "quadrature_variance");
  const DenseMatrix& r = rho_m.data();
  const cplx a = moment_a(r), a2 = moment_a2(r);
  const double n = moment_n(r);
  const cplx ph = std::exp(cplx(0.0, -angle));
  // <X^2> = (a^2 e^{-2i th} + c.c. + 2 a^dag a + 1) / 2, <X> = Re(<a> e^{-i th}) sqrt 2
  const double x2 = 0.5 * (2.0 * (a2 * ph * ph).real() + 2.0 * n + 1.0);
  const double x1 = std::sqrt(2.0) * (a * ph).real();
  return x2 - x1 * x1;
}

QuadratureExtrema quadrature_extrema(const DensityMatrix& rho_m) {
  require_oscillator(rho_m, "quadrature_extrema");
  const DenseMatrix& r = rho_m.data();
  const cplx a = moment_a(r), a2 = moment_a2(r);
  const double n = moment_n(r);
  const cplx c = a2 - a * a;
  const double base = 0.5 + n - std::norm(a);
  // Var(theta) = base + Re(c e^{-2 i theta}); minimum where the phase of c e^{-2i theta} is pi.
  const double min_angle = 0.5 * (std::arg(c) - kPi);
  return {base - std::abs(c), base + std::abs(c), min_angle};
}

int PhaseSpaceGrid::points_per_axis() const {
  return static_cast<int>(std::llround(2.0 * half_width / step)) + 1;
}

PhaseSpaceGrid default_grid(double alpha_target) {
  PhaseSpaceGrid g;
  const double needed = std::max(4.5, 2.0 * std::abs(alpha_target) + 2.5);
  g.half_width = std::ceil(needed / g.step - 1e-9) * g.step;
  return g;
}

void validate_grid(const PhaseSpaceGrid& grid, double alpha_target) {
  if (!(grid.step > 0.0) || !(grid.half_width > 0.0)) throw InvalidArgument("grid step and half width must be > 0");
  if (grid.half_width + 1e-12 < std::max(4.5, 2.0 * std::abs(alpha_target) + 2.5)) {
    throw InvalidArgument("grid half width " + std::to_string(grid.half_width) + " does not cover alpha_target " +
                          std::to_string(alpha_target));
  }
}

double wigner_point(const DensityMatrix& rho_m, cplx alpha) {
  require_oscillator(rho_m, "wigner_point");
  const DenseMatrix& rho = rho_m.data();
  const int m_max = rho_m.dim();
  std::vector<cplx> w(m_max);
  std::vector<double> sq(m_max + 1);
  for (int i = 0; i <= m_max; ++i) sq[i] = std::sqrt(static_cast<double>(i));

  const cplx two_a = 2.0 * alpha, two_ac = 2.0 * std::conj(alpha);
  w[0] = (2.0 / kPi) * std::exp(-2.0 * std::norm(alpha));
  double sum = rho(0, 0).real() * w[0].real();
  for (int n = 1; n < m_max; ++n) {
    w[n] = two_a * w[n - 1] / sq[n];
    sum += 2.0 * (rho(0, n) * w[n]).real();
  }
  for (int m = 1; m < m_max; ++m) {
    cplx temp = w[m];
    w[m] = (two_ac * temp - sq[m] * w[m - 1]) / sq[m];
    sum += (rho(m, m) * w[m]).real();
    for (int n = m + 1; n < m_max; ++n) {
      const cplx next = (two_a * w[n - 1] - sq[m] * temp) / sq[n];
      temp = w[n];
      w[n] = next;
      sum += 2.0 * (rho(m, n) * w[n]).real();
    }
  }
  return sum;
}

double wigner_displaced_parity(const DensityMatrix& rho_m, cplx alpha) {
  require_oscillator(rho_m, "wigner_displaced_parity");
  const int n = rho_m.dim();
  int support = 1;
  for (int k = 0; k < n; ++k)
    if (std::abs(rho_m.data()(k, k)) > 1e-24) support = k + 1;
  const double reach = std::sqrt(static_cast<double>(support)) + std::abs(alpha) + 6.0;
  const int padded = std::max({n, support + 20, static_cast<int>(std::ceil(reach * reach))});
  DenseMatrix gen = DenseMatrix::Zero(padded, padded);
  for (int k = 1; k < padded; ++k) {
    const double s = std::sqrt(static_cast<double>(k));
    gen(k, k - 1) += alpha * s;             // alpha a^dag
    gen(k - 1, k) -= std::conj(alpha) * s;  // -alpha^* a
  }
  const DenseMatrix d = gen.exp();
  DenseMatrix rho = DenseMatrix::Zero(padded, padded);
  rho.topLeftCorner(n, n) = rho_m.data();
  const DenseMatrix shifted = d.adjoint() * rho * d;
  double sum = 0.0;
  for (int k = 0; k < padded; ++k) sum += (k % 2 == 0 ? 1.0 : -1.0) * shifted(k, k).real();
  return 2.0 / kPi * sum;
}

PhaseSpaceGrid wigner(const DensityMatrix& rho_m, const PhaseSpaceGrid& grid, const WignerOptions& options) {
  require_oscillator(rho_m, "wigner");
  if (!(grid.step > 0.0) || !(grid.half_width > 0.0)) throw InvalidArgument("grid step and half width must be > 0");
  PhaseSpaceGrid out = grid;
  const int n = grid.points_per_axis();
  out.values.assign(static_cast<std::size_t>(n) * n, 0.0);

  // W(alpha) = (2/pi) e^{-2|alpha|^2} [S_0 + 2 sum_{L>0} Re(S_L (2 alpha)^L)], where
  // S_L = sum_m (-1)^m sqrt(m!/(m+L)!) rho_{m,m+L} L_m^L(4|alpha|^2) depends on |alpha| only.
  const DenseMatrix& rho = rho_m.data();
  const int dim = rho_m.dim();
  DenseMatrix coef = DenseMatrix::Zero(dim, dim);  // coef(L, m)
  for (int L = 0; L < dim; ++L) {
    double norm = 1.0;  // sqrt(m!/(m+L)!) at m = 0
    for (int k = 1; k <= L; ++k) norm /= std::sqrt(static_cast<double>(k));
    for (int m = 0; m + L < dim; ++m) {
      if (m > 0) norm *= std::sqrt(static_cast<double>(m) / static_cast<double>(m + L));
      coef(L, m) = (m % 2 == 0 ? 1.0 : -1.0) * norm * rho(m, m + L);
    }
  }
  std::vector<double> radii;
  radii.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) radii.push_back(std::norm(cplx(grid.coordinate(i), grid.coordinate(j))));
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  const std::size_t nr = radii.size();
  std::vector<cplx> sums(nr * dim);
  std::vector<double> inv(dim + 1);
  for (int k = 1; k <= dim; ++k) inv[k] = 1.0 / k;

  auto radial = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const double x = 4.0 * radii[r];
      for (int L = 0; L < dim; ++L) {
        double prev = 0.0, cur = 1.0;
        cplx acc = coef(L, 0);
        for (int m = 0; m + 1 + L < dim; ++m) {
          const double next = ((2 * m + 1 + L - x) * cur - (m + L) * prev) * inv[m + 1];
          prev = cur;
          cur = next;
          acc += coef(L, m + 1) * cur;
        }
        sums[r * dim + L] = acc;
      }
    }
  };
  auto fill_rows = [&](int row_begin, int row_end) {
    for (int j = row_begin; j < row_end; ++j) {
      for (int i = 0; i < n; ++i) {
        const cplx alpha(grid.coordinate(i), grid.coordinate(j));
        const double r2 = std::norm(alpha);
        const std::size_t r = std::lower_bound(radii.begin(), radii.end(), r2) - radii.begin();
        const cplx* s = &sums[r * dim];
        double total = s[0].real();
        cplx power = 1.0;
        for (int L = 1; L < dim; ++L) {
          power *= 2.0 * alpha;
          total += 2.0 * (s[L] * power).real();
        }
        out.values[static_cast<std::size_t>(j) * n + i] = (2.0 / kPi) * std::exp(-2.0 * r2) * total;
      }
    }
  };
  const int workers = std::clamp(options.workers, 1, n);
  if (workers == 1) {
    radial(0, nr);
    fill_rows(0, n);
  } else {
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(radial, nr * w / workers, nr * (w + 1) / workers);
    }
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(fill_rows, n * w / workers, n * (w + 1) / workers);
  }

  const double mass = grid_integral(out);
  if (std::abs(1.0 - mass) > options.tail_tol) {
    throw InvalidArgument("Wigner grid too small for the state: integrated mass " + std::to_string(mass));
  }
  if (options.cross_check) {
    // 5 x 5 subgrid over the central half of the domain, where W has structure.
    const int lo = (n - 1) / 4, stride = std::max(1, (n - 1) / 8);
    for (int j = lo; j <= n - 1 - lo; j += stride) {
      for (int i = lo; i <= n - 1 - lo; i += stride) {
        const double ref = wigner_displaced_parity(rho_m, cplx(grid.coordinate(i), grid.coordinate(j)));
        const double got = out.at(i, j);
        if (std::abs(ref - got) > 1e-6) {
          throw SolverError("Wigner recursion disagrees with displaced parity at (" + std::to_string(grid.coordinate(i)) +
                            ", " + std::to_string(grid.coordinate(j)) + ")");
        }
      }
    }
  }
  return out;
}

double grid_integral(const PhaseSpaceGrid& w, bool absolute) {
  const int n = w.points_per_axis();
  if (w.values.size() != static_cast<std::size_t>(n) * n) throw InvalidArgument("grid has no values");
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
    for (int i = 0; i < n; ++i) {
      const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      const double v = w.values[static_cast<std::size_t>(j) * n + i];
      sum += wi * wj * (absolute ? std::abs(v) : v);
    }
  }
  return sum * w.step * w.step;
}

double nonclassical_volume(const PhaseSpaceGrid& wigner_values) {
  const double delta = grid_integral(wigner_values, true) - 1.0;
  if (std::abs(delta) < kNonclassicalNoiseFloor) return 0.0;
  return delta;
}

double nonclassical_volume(const DensityMatrix& rho_m, const PhaseSpaceGrid& grid, const WignerOptions& options) {
  return nonclassical_volume(wigner(rho_m, grid, options));
}

std::vector<NegativeRegion> negative_regions(const PhaseSpaceGrid& w, double threshold) {
  const int n = w.points_per_axis();
  std::vector<int> label(static_cast<std::size_t>(n) * n, -1);
  std::vector<NegativeRegion> regions;
  std::vector<int> stack;
  for (int start = 0; start < n * n; ++start) {
    if (label[start] >= 0 || !(w.values[start] < threshold)) continue;
    NegativeRegion region{0, w.values[start], w.coordinate(start % n), w.coordinate(start / n)};
    const int id = static_cast<int>(regions.size());
    label[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const int cell = stack.back();
      stack.pop_back();
      ++region.cells;
      if (w.values[cell] < region.min_value) {
        region.min_value = w.values[cell];
        region.re_alpha_at_min = w.coordinate(cell % n);
        region.im_alpha_at_min = w.coordinate(cell / n);
      }
      const int ci = cell % n, cj = cell / n;
      const int nbrs[4][2] = {{ci - 1, cj}, {ci + 1, cj}, {ci, cj - 1}, {ci, cj + 1}};
      for (const auto& nb : nbrs) {
        if (nb[0] < 0 || nb[0] >= n || nb[1] < 0 || nb[1] >= n) continue;
        const int k = nb[1] * n + nb[0];
        if (label[k] < 0 && w.values[k] < threshold) {
          label[k] = id;
          stack.push_back(k);
        }
      }
    }
    regions.push_back(region);
  }
  return regions;
}

cplx reflection_from_sigma_plus(cplx sigma_plus, double Gamma, double eps2) {
  if (eps2 == 0.0 || !std::isfinite(eps2)) throw InvalidArgument("reflection coefficient undefined for eps2 = 0");
  return cplx(0.0, -1.0) * Gamma * sigma_plus / (2.0 * eps2);
}

cplx reflection_coefficient(const DensityMatrix& rho, double Gamma, double eps2) {
  if (rho.tag().layout != Layout::composite) throw InvalidArgument("reflection_coefficient expects a composite state");
  const auto sp = fock::on_composite(fock::qubit_operators().sigma_plus, rho.tag().fock_cutoff);
  return reflection_from_sigma_plus(fock::expectation(sp, rho), Gamma, eps2);
}

}  // namespace qsim::analysis
