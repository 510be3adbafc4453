#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "qsim/errors.hpp"
#include "qsim/fockspace.hpp"
#include "qsim/model.hpp"

using namespace qsim::model;
using namespace qsim::fock;
using qsim::InvalidArgument;

namespace {

constexpr double kTwoPi = 2.0 * constants::pi;

int idx(int qubit, int n, int cutoff) { return qubit * cutoff + n; }

double hermiticity(const Operator& h) { return (h.dense() - h.dense().adjoint()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("coupling from device geometry") {
  const DeviceParams ref = reference_device();
  const Coupling c = derive_coupling(ref);

  // Independent evaluation of g = R mu0 I L / (pi d) * sqrt(hbar / (2 m w_m)).
  const double r_si = kTwoPi * 0.7e9 / (1e-3 * 2.067833848e-15);
  const double xzpf = std::sqrt(1.054571817e-34 / (2.0 * 4e-21 * kTwoPi * 50e6));
  const double g_oracle = r_si * 1.25663706212e-6 * 50e-6 * 5e-6 * xzpf / (constants::pi * 0.6e-6);
  CHECK(c.g == doctest::Approx(g_oracle).epsilon(1e-12));
  CHECK(c.lambda == doctest::Approx(c.g / ref.omega_m).epsilon(1e-14));

  DeviceParams doubled = ref;
  doubled.flux_sensitivity_R *= 2.0;
  CHECK(derive_coupling(doubled).g == doctest::Approx(2.0 * c.g).epsilon(1e-14));

  DeviceParams heavy = ref;
  heavy.mass_m *= 4.0;
  CHECK(derive_coupling(heavy).g == doctest::Approx(0.5 * c.g).epsilon(1e-14));

  DeviceParams off = ref;
  off.current_I = 0.0;
  CHECK(derive_coupling(off).g == 0.0);

  DeviceParams biased = ref;
  biased.energy_bias_epsilon = 1.0;
  CHECK_THROWS_AS(derive_coupling(biased), InvalidArgument);
  DeviceParams bad = ref;
  bad.mass_m = -1.0;
  CHECK_THROWS_AS(derive_coupling(bad), InvalidArgument);
}

TEST_CASE("thermal occupation") {
  CHECK(thermal_occupation(kTwoPi * 50e6, 0.0) == 0.0);
  const double n15 = thermal_occupation(kTwoPi * 50e6, 15e-3);
  CHECK(n15 == doctest::Approx(5.0).epsilon(0.2));
  const double x = 1.054571817e-34 * kTwoPi * 50e6 / (1.380649e-23 * 15e-3);
  CHECK(n15 == doctest::Approx(1.0 / (std::exp(x) - 1.0)).epsilon(1e-12));

  const double n1k = thermal_occupation(kTwoPi * 50e6, 1.0);
  const double classical = 1.380649e-23 / (1.054571817e-34 * kTwoPi * 50e6);
  CHECK(std::abs(n1k / classical - 1.0) < 0.02);
  CHECK_THROWS_AS(thermal_occupation(1.0, -1.0), InvalidArgument);
}

TEST_CASE("lab Hamiltonian spectrum") {
  const int n = 40;
  const double wq = 3.0, wm = 1.0;

  SUBCASE("uncoupled") {
    const Operator h = build_lab_hamiltonian(wq, wm, 0.0, {}, 0.0, n);
    CHECK(hermiticity(h) < 1e-12);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.dense());
    std::vector<double> expect;
    for (int k = 0; k < n; ++k) {
      expect.push_back(-wq / 2 + k * wm);
      expect.push_back(wq / 2 + k * wm);
    }
    std::sort(expect.begin(), expect.end());
    for (int k = 0; k < 2 * n; ++k) CHECK(es.eigenvalues()[k] == doctest::Approx(expect[k]).epsilon(1e-12));
    CHECK(h.element(0, 0).real() == doctest::Approx(-wq / 2));
  }

  SUBCASE("polaron shift of both branches") {
    const double g = 0.1;
    const Operator h = build_lab_hamiltonian(wq, wm, g, {}, 0.0, n);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.dense());
    std::vector<double> expect;
    for (int k = 0; k < 8; ++k) {
      expect.push_back(-wq / 2 + k * wm - g * g / wm);
      expect.push_back(wq / 2 + k * wm - g * g / wm);
    }
    std::sort(expect.begin(), expect.end());
    for (int k = 0; k < 10; ++k) CHECK(es.eigenvalues()[k] == doctest::Approx(expect[k]).epsilon(1e-10));
  }

  SUBCASE("drive term follows the cosine") {
    const std::vector<DriveSpec> drives{{0.2, 5.0, DriveRole::resonant}};
    const double t_node = constants::pi / (2.0 * 5.0);
    const Operator h_node = build_lab_hamiltonian(wq, wm, 0.1, drives, t_node, 6);
    CHECK(h_node.element(idx(0, 0, 6), idx(0, 0, 6)).real() == doctest::Approx(-wq / 2));
    CHECK(std::abs(h_node.element(idx(1, 0, 6), idx(0, 0, 6))) < 1e-15);
    const Operator h0 = build_lab_hamiltonian(wq, wm, 0.1, drives, 0.0, 6);
    CHECK(h0.element(idx(1, 0, 6), idx(0, 0, 6)).real() == doctest::Approx(0.4));
    CHECK(hermiticity(h0) < 1e-12);
  }
}

TEST_CASE("polaron-expanded Hamiltonian") {
  const int n = 6;
  SUBCASE("collapses at lambda = 0 and eps2 = 0") {
    const SplitHamiltonian h = build_polaron_expanded({2.0, 1.0, 0.0, 0.3, 0.0, 0.7}, n);
    CHECK(h.terms.empty());
    const auto q = qubit_operators();
    const Operator ref = cplx(1.0) * on_composite(q.sigma_z, n) + on_composite(number_operator(n)) +
                         cplx(0.3) * on_composite(q.sigma_x, n);
    CHECK((h.static_part.dense() - ref.dense()).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("quadratic matrix element and Hermiticity") {
    const double eps1 = 0.3, lambda = 0.07;
    const SplitHamiltonian h = build_polaron_expanded({2.0, 1.0, lambda, eps1, 0.01, 1.9}, n);
    const Operator h0 = h.at(0.0);
    CHECK(std::abs(h0.element(idx(1, 0, n), idx(0, 2, n)) - 2.0 * eps1 * lambda * lambda * std::sqrt(2.0)) < 1e-15);
    for (double t : {0.0, 0.37, 2.1, 19.3}) CHECK(hermiticity(h.at(t)) < 1e-12);
    CHECK(std::abs(h.at(0.4).element(idx(1, 0, n), idx(0, 0, n)) -
                   (eps1 - 2.0 * eps1 * lambda * lambda + 0.01 * std::exp(cplx(0.0, -1.9 * 0.4)))) < 1e-15);
  }
  CHECK_THROWS_AS(build_polaron_expanded({2.0, 1.0, 0.25, 0.3, 0.0, 0.0}, n), InvalidArgument);
}

TEST_CASE("shifted frequencies") {
  const auto s = shifted_frequencies(kTwoPi * 100e6, kTwoPi * 5e6, kTwoPi * 3e6, kTwoPi * 50e6);
  CHECK(s.Delta_tilde / kTwoPi / 1e6 == doctest::Approx(100.499).epsilon(1e-5));
  const auto trivial = shifted_frequencies(1.0, 0.0, 0.3, 2.0);
  CHECK(trivial.Delta_tilde == 1.0);
  CHECK(trivial.omega_m_prime == 2.0);
  CHECK(shifted_frequencies(1.0, 0.4, 0.0, 2.0).omega_m_prime == 2.0);
  CHECK_THROWS_AS(shifted_frequencies(-1.0, 0.1, 0.1, 1.0), InvalidArgument);
}

TEST_CASE("squeezing model") {
  const int n = 40;
  SUBCASE("Bogoliubov commutator away from the cutoff") {
    const double eta = -std::atanh(0.5);
    const Operator b = bogoliubov_mode(eta, n);
    const DenseMatrix c = (b * b.adjoint() - b.adjoint() * b).dense();
    const DenseMatrix block = c.topLeftCorner(n - 2, n - 2);
    CHECK((block - DenseMatrix::Identity(n - 2, n - 2)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("derived constants") {
    const EffectiveModel m = build_squeeze_effective(0.07, 2.0, 1.0, n);
    CHECK(m.derived_constants.at("eta") == doctest::Approx(-0.5493).epsilon(1e-4));
    CHECK(m.derived_constants.at("Theta") == doctest::Approx(2 * 0.07 * std::sqrt(3.0)).epsilon(1e-14));
    CHECK(m.frame == Frame::squeeze_effective);
    CHECK(hermiticity(m.hamiltonian) < 1e-12);
  }
  SUBCASE("squeezed ground product is dark") {
    const EffectiveModel m = build_squeeze_effective(0.07, 2.0, 1.0, n);
    const Ket psi = prepare_state(GroundQubitProduct{SqueezedVacuum{m.derived_constants.at("eta")}}, n);
    CHECK(m.hamiltonian.apply(psi).norm() < 1e-6);
  }
  SUBCASE("eps_plus = 0 reduces to the cooling model exactly") {
    const Operator sq = build_squeeze_effective(0.07, 2.5, 0.0, n).hamiltonian;
    const Operator jc = build_cooling_jc(0.07, 2.5, n).hamiltonian;
    CHECK((sq.dense() - jc.dense()).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(build_squeeze_effective(0.07, 1.0, 1.0, n), InvalidArgument);
  CHECK_THROWS_AS(build_squeeze_effective(0.07, 1.0, -1.5, n), InvalidArgument);
}

TEST_CASE("cooling model and limit") {
  const int n = 10;
  const EffectiveModel m = build_cooling_jc(0.07, kTwoPi * 2.5e6, n);
  CHECK(m.derived_constants.at("g_c") / kTwoPi == doctest::Approx(0.35e6).epsilon(1e-12));
  CHECK(m.hamiltonian.apply(prepare_state(GroundQubitProduct{Fock{0}}, n)).norm() == 0.0);
  CHECK(m.hamiltonian.element(idx(1, 0, n), idx(0, 1, n)).real() == doctest::Approx(m.derived_constants.at("g_c")));

  const auto lim = predicted_cooling_limit(5.0, kTwoPi * 10.0, kTwoPi * 0.4e6, kTwoPi * 0.35e6);
  CHECK(lim.n_bar == doctest::Approx(5.0 * 10.0 * 0.4e6 / (2.0 * 0.35e6 * 0.35e6)).epsilon(1e-12));
  CHECK(lim.n_bar == doctest::Approx(8.2e-5).epsilon(0.01));
  CHECK(lim.cooperativity == doctest::Approx(0.35e6 * 0.35e6 / (10.0 * 0.4e6)).epsilon(1e-12));
  CHECK(lim.adiabatic_marginal);
  CHECK(predicted_cooling_limit(5.0, 0.0, 1.0, 0.1).n_bar == 0.0);
  CHECK(predicted_cooling_limit(10.0, 1.0, 2.0, 0.1).n_bar == doctest::Approx(2.0 * predicted_cooling_limit(5.0, 1.0, 2.0, 0.1).n_bar));
}

TEST_CASE("two-phonon cat model") {
  const int n = 30;
  const double theta = kTwoPi * 36e3, eps2 = -kTwoPi * 72e3;
  const EffectiveModel m = build_cat_effective(theta, eps2, 0.0, n);
  CHECK(m.derived_constants.at("alpha_target") == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(hermiticity(m.hamiltonian) < 1e-12);

  SUBCASE("even cat is annihilated by the drive") {
    const Ket cat = prepare_state(Cat{std::sqrt(2.0), Parity::even}, n);
    const auto [a, ad] = ladder_operators(n);
    const Operator jump = cplx(theta) * (a * a) + cplx(eps2) * Operator::identity(a.tag());
    // Residuals in units of Theta_c.
    CHECK(jump.apply(cat).norm() / theta < 1e-6);
    CHECK(m.hamiltonian.apply(tensor(qubit_ground(), cat)).norm() / theta < 1e-6);
  }
  SUBCASE("vacuum and one phonon are dark without the resonant drive") {
    const EffectiveModel bare = build_cat_effective(theta, 0.0, 0.0, n);
    CHECK(bare.hamiltonian.apply(prepare_state(GroundQubitProduct{Fock{0}}, n)).norm() == 0.0);
    CHECK(bare.hamiltonian.apply(prepare_state(GroundQubitProduct{Fock{1}}, n)).norm() == 0.0);
  }
  SUBCASE("detuning sits on the phonon number") {
    const EffectiveModel det = build_cat_effective(theta, eps2, 2.0, n);
    CHECK(det.hamiltonian.element(idx(0, 3, n), idx(0, 3, n)).real() == doctest::Approx(3.0));
    CHECK(det.hamiltonian.element(idx(1, 3, n), idx(1, 3, n)).real() == doctest::Approx(3.0));
  }
  SUBCASE("dark state holds for alpha up to 2") {
    for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
      const EffectiveModel mm = build_cat_effective(1.0, -alpha * alpha, 0.0, 40);
      const Ket cat = prepare_state(GroundQubitProduct{Cat{alpha, Parity::even}}, 40);
      CHECK(mm.hamiltonian.apply(cat).norm() < 1e-6);
    }
  }
  CHECK_THROWS_AS(build_cat_effective(theta, -eps2, 0.0, n), InvalidArgument);
  CHECK_THROWS_AS(build_cat_effective(-theta, eps2, 0.0, n), InvalidArgument);
}
