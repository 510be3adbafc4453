#include "qsim/model.hpp"

#include <cmath>
#include <string>

#include "qsim/errors.hpp"

namespace qsim::model {

using fock::on_composite;
using fock::SpaceTag;

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be positive and finite");
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be finite");
}

struct CompositeOps {
  Operator a, ad, num, sz, sx, sp, sm;
};

CompositeOps composite_ops(int n) {
  const auto [a, ad] = fock::ladder_operators(n);
  const auto q = fock::qubit_operators();
  return {on_composite(a),
          on_composite(ad),
          on_composite(fock::number_operator(n)),
          on_composite(q.sigma_z, n),
          on_composite(q.sigma_x, n),
          on_composite(q.sigma_plus, n),
          on_composite(q.sigma_minus, n)};
}

}  // namespace

void DeviceParams::validate() const {
  if (!(current_I >= 0.0) || !std::isfinite(current_I)) throw InvalidArgument("current_I must be >= 0 and finite");
  require_positive(cnt_length_L, "cnt_length_L");
  require_positive(squid_width_d, "squid_width_d");
  require_positive(squid_length_S, "squid_length_S");
  require_positive(mass_m, "mass_m");
  require_positive(omega_m, "omega_m");
  require_positive(flux_sensitivity_R, "flux_sensitivity_R");
  if (!(temperature_T >= 0.0)) throw InvalidArgument("temperature_T must be >= 0");
  require_positive(qubit_decay_Gamma, "qubit_decay_Gamma");
  require_positive(mech_decay_gamma, "mech_decay_gamma");
  if (energy_bias_epsilon != 0.0) {
    throw InvalidArgument("energy_bias_epsilon must be 0 (qubit operated at its degeneracy point)");
  }
}

double flux_sensitivity_from_ghz_per_mphi0(double ghz_per_mphi0) {
  return angular(ghz_per_mphi0 * 1e9) / (1e-3 * constants::flux_quantum);
}

DeviceParams reference_device() {
  DeviceParams p;
  p.current_I = 50e-6;
  p.cnt_length_L = 5e-6;
  p.squid_width_d = 0.6e-6;
  p.squid_length_S = 3e-6;
  p.mass_m = 4e-21;
  p.omega_m = angular(50e6);
  p.flux_sensitivity_R = flux_sensitivity_from_ghz_per_mphi0(0.7);
  p.temperature_T = 15e-3;
  p.qubit_decay_Gamma = angular(0.4e6);
  p.mech_decay_gamma = angular(10.0);
  return p;
}

Coupling derive_coupling(const DeviceParams& p) {
  p.validate();
  const double x_zpf = std::sqrt(constants::hbar / (2.0 * p.mass_m * p.omega_m));
  const double flux_per_zpf = constants::mu_0 * p.current_I * p.cnt_length_L * x_zpf / (constants::pi * p.squid_width_d);
  const double g = p.flux_sensitivity_R * flux_per_zpf;
  return {g, g / p.omega_m};
}

double thermal_occupation(double omega_m, double temperature) {
  if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
  require_positive(omega_m, "omega_m");
  if (temperature == 0.0) return 0.0;
  const double x = constants::hbar * omega_m / (constants::k_B * temperature);
  return 1.0 / std::expm1(x);
}

Operator build_lab_hamiltonian(double omega_q, double omega_m, double g, std::span<const DriveSpec> drives,
                               double t, int fock_cutoff) {
  const auto o = composite_ops(fock_cutoff);
  Operator h = cplx(0.5 * omega_q) * o.sz + cplx(omega_m) * o.num + cplx(g) * (o.sz * (o.ad + o.a));
  for (const auto& d : drives) {
    require_finite(d.strength, "drive strength");
    h = h + cplx(2.0 * d.strength * std::cos(d.frequency * t)) * o.sx;
  }
  return h.as_hermitian();
}

Operator SplitHamiltonian::at(double t) const {
  Operator h = static_part;
  for (const auto& term : terms) h = h + std::exp(cplx(0.0, -term.frequency * t)) * term.op;
  return h;
}

SplitHamiltonian build_polaron_expanded(const PolaronExpandedParams& p, int fock_cutoff) {
  require_finite(p.lambda, "lambda");
  if (std::abs(p.lambda) > 0.2) throw InvalidArgument("polaron expansion requires |lambda| <= 0.2");
  require_finite(p.Delta, "Delta");
  require_finite(p.eps1, "eps1");
  require_finite(p.eps2, "eps2");
  const auto o = composite_ops(fock_cutoff);
  const Operator x = o.ad - o.a;
  const Operator sideband =
      cplx(2.0 * p.eps1) * (cplx(p.lambda) * (o.sp * x) + cplx(p.lambda * p.lambda) * (o.sp * (x * x)));
  const Operator h0 = cplx(0.5 * p.Delta) * o.sz + cplx(p.omega_m) * o.num + cplx(p.eps1) * o.sx + sideband +
                      sideband.adjoint();
  SplitHamiltonian h{h0.as_hermitian(), {}};
  if (p.eps2 != 0.0) {
    h.terms.push_back({cplx(p.eps2) * o.sp, p.delta12});
    h.terms.push_back({cplx(p.eps2) * o.sm, -p.delta12});
  }
  return h;
}

ShiftedFrequencies shifted_frequencies(double Delta, double eps1, double g, double omega_m) {
  require_positive(Delta, "Delta");
  require_positive(omega_m, "omega_m");
  const double delta_tilde = std::sqrt(Delta * Delta + 4.0 * eps1 * eps1);
  const double omega_prime = omega_m - 4.0 * eps1 * eps1 * g * g / (3.0 * omega_m * omega_m * omega_m);
  return {delta_tilde, omega_prime};
}

Operator bogoliubov_mode(double eta, int fock_cutoff) {
  require_finite(eta, "eta");
  const auto [a, ad] = fock::ladder_operators(fock_cutoff);
  if (eta == 0.0) return a;
  return cplx(std::sinh(eta)) * ad + cplx(std::cosh(eta)) * a;
}

EffectiveModel build_squeeze_effective(double lambda, double eps_minus, double eps_plus, int fock_cutoff) {
  require_finite(lambda, "lambda");
  require_finite(eps_plus, "eps_plus");
  require_positive(eps_minus, "eps_minus");
  if (std::abs(eps_plus) >= eps_minus) {
    throw InvalidArgument("squeezing requires eps_minus > |eps_plus| (no stable dark state otherwise)");
  }
  const double theta = 2.0 * lambda * std::sqrt(eps_minus * eps_minus - eps_plus * eps_plus);
  const double eta = std::atanh(-eps_plus / eps_minus);
  const Operator b = on_composite(bogoliubov_mode(eta, fock_cutoff));
  const Operator sp = on_composite(fock::qubit_operators().sigma_plus, fock_cutoff);
  const Operator coupling = cplx(theta) * (sp * b);
  return {(coupling + coupling.adjoint()).as_hermitian(),
          Frame::squeeze_effective,
          {{"Theta", theta}, {"eta", eta}}};
}

EffectiveModel build_cooling_jc(double lambda, double eps_minus, int fock_cutoff) {
  require_finite(lambda, "lambda");
  require_positive(eps_minus, "eps_minus");
  const double g_c = 2.0 * lambda * eps_minus;
  const auto [a, ad] = fock::ladder_operators(fock_cutoff);
  const Operator sp = on_composite(fock::qubit_operators().sigma_plus, fock_cutoff);
  const Operator coupling = cplx(g_c) * (sp * on_composite(a));
  return {(coupling + coupling.adjoint()).as_hermitian(), Frame::cooling_jc, {{"g_c", g_c}}};
}

CoolingLimit predicted_cooling_limit(double n_th, double gamma, double Gamma, double g_c) {
  if (n_th < 0.0 || gamma < 0.0) throw InvalidArgument("n_th and gamma must be >= 0");
  require_positive(Gamma, "Gamma");
  require_positive(g_c, "g_c");
  return {n_th * gamma * Gamma / (2.0 * g_c * g_c), g_c * g_c / (gamma * Gamma), Gamma < 5.0 * g_c};
}

EffectiveModel build_cat_effective(double theta_c, double eps2, double detuning_d, int fock_cutoff) {
  require_positive(theta_c, "Theta_c");
  require_finite(eps2, "eps2");
  require_finite(detuning_d, "Delta_d");
  if (eps2 / theta_c > 0.0) {
    throw InvalidArgument("eps2 and Theta_c must have opposite signs (real cat amplitude)");
  }
  const auto o = composite_ops(fock_cutoff);
  const Operator drive = cplx(theta_c) * (o.sp * (o.a * o.a)) + cplx(eps2) * o.sp;
  Operator h = drive + drive.adjoint();
  if (detuning_d != 0.0) h = h + cplx(0.5 * detuning_d) * o.num;
  return {h.as_hermitian(),
          Frame::cat_effective,
          {{"Theta_c", theta_c}, {"alpha_target", std::sqrt(-eps2 / theta_c)}, {"Delta_d", detuning_d}}};
}

}  // namespace qsim::model
