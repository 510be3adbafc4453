#pragma once

// Device parameterization and the Hamiltonians of the qubit-oscillator hybrid.
// Every frequency and rate here is angular (rad/s).

#include <map>
#include <span>
#include <string>
#include <vector>

#include "qsim/fockspace.hpp"

namespace qsim::model {

using fock::cplx;
using fock::Operator;

namespace constants {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double k_B = 1.380649e-23;             // J / K
inline constexpr double mu_0 = 1.25663706212e-6;        // H / m
inline constexpr double flux_quantum = 2.067833848e-15;  // Wb
}  // namespace constants

/// Ordinary frequency (Hz) to angular (rad/s).
constexpr double angular(double hz) { return 2.0 * constants::pi * hz; }
constexpr double ordinary(double rad_per_s) { return rad_per_s / (2.0 * constants::pi); }

struct DeviceParams {
  double current_I = 0.0;             // A
  double cnt_length_L = 0.0;          // m
  double squid_width_d = 0.0;         // m
  double squid_length_S = 0.0;        // m
  double mass_m = 0.0;                // kg
  double omega_m = 0.0;               // rad/s
  double flux_sensitivity_R = 0.0;    // rad/s per Wb
  double temperature_T = 0.0;         // K
  double qubit_decay_Gamma = 0.0;     // rad/s
  double mech_decay_gamma = 0.0;      // rad/s
  double energy_bias_epsilon = 0.0;   // rad/s, must be 0
  double persistent_current_Ip = 0.0; // A, informational
  double mutual_inductance_M = 0.0;   // H, informational
  double dipole_mu = 0.0;             // informational

  /// Throws InvalidArgument on non-positive geometry/mass/frequency or a
  /// nonzero energy bias.
  void validate() const;
};

/// Converts a flux sensitivity quoted in GHz per milli flux quantum to rad/s per Wb.
double flux_sensitivity_from_ghz_per_mphi0(double ghz_per_mphi0);

/// The device of the reference design: 50 uA through a 5 um nanotube of mass
/// 4e-21 kg at 50 MHz over a 3 um x 0.6 um SQUID with R = 0.7 GHz/mPhi0, 15 mK.
DeviceParams reference_device();

struct Coupling {
  double g;       // rad/s
  double lambda;  // g / omega_m
};

/// g = R mu0 I L x_zpf / (pi d) with x_zpf = sqrt(hbar / 2 m omega_m).
Coupling derive_coupling(const DeviceParams& p);

/// Bose-Einstein occupation [exp(hbar omega / k_B T) - 1]^-1; 0 at T = 0.
double thermal_occupation(double omega_m, double temperature);

enum class DriveRole { red_sideband, blue_sideband, resonant, two_phonon_sideband };

struct DriveSpec {
  double strength;   // epsilon_i, rad/s, sign-carrying
  double frequency;  // omega_i, rad/s
  DriveRole role;
};

/// (w_q/2) sz + w_m a^dag a + g sz (a^dag + a) + sum_i 2 eps_i sx cos(w_i t).
Operator build_lab_hamiltonian(double omega_q, double omega_m, double g, std::span<const DriveSpec> drives,
                               double t, int fock_cutoff);

/// H(t) = static_part + sum_k terms[k].op * exp(-i terms[k].frequency t).
/// Terms come in Hermitian-conjugate pairs so H(t) is Hermitian at every t.
struct SplitHamiltonian {
  struct PhasedTerm {
    Operator op;
    double frequency;
  };
  Operator static_part;
  std::vector<PhasedTerm> terms;

  Operator at(double t) const;
  const fock::SpaceTag& tag() const { return static_part.tag(); }
};

struct PolaronExpandedParams {
  double Delta;    // qubit-sideband-drive detuning
  double omega_m;
  double lambda;   // |lambda| <= 0.2
  double eps1;     // sideband drive
  double eps2;     // resonant drive
  double delta12;  // drive-drive detuning
};

/// Second-order-in-lambda expansion of the polaron-frame Hamiltonian under the
/// bichromatic drive.
SplitHamiltonian build_polaron_expanded(const PolaronExpandedParams& p, int fock_cutoff);

struct ShiftedFrequencies {
  double Delta_tilde;
  double omega_m_prime;
};
/// Stark-shifted qubit splitting and renormalized oscillator frequency.
ShiftedFrequencies shifted_frequencies(double Delta, double eps1, double g, double omega_m);

enum class Frame { lab, polaron_expanded, squeeze_effective, cooling_jc, cat_effective };

struct EffectiveModel {
  Operator hamiltonian;
  Frame frame;
  std::map<std::string, double> derived_constants;
};

/// B = a^dag sinh(eta) + a cosh(eta) on the oscillator space.
Operator bogoliubov_mode(double eta, int fock_cutoff);

/// Theta sigma_+ B + H.c., Theta = 2 lambda sqrt(eps_-^2 - eps_+^2),
/// tanh(eta) = -eps_+/eps_-. Requires eps_- > |eps_+|.
EffectiveModel build_squeeze_effective(double lambda, double eps_minus, double eps_plus, int fock_cutoff);

/// g_c sigma_+ a + H.c. with g_c = 2 lambda eps_-.
EffectiveModel build_cooling_jc(double lambda, double eps_minus, int fock_cutoff);

struct CoolingLimit {
  double n_bar;
  double cooperativity;
  bool adiabatic_marginal;  // Gamma < 5 g_c
};
CoolingLimit predicted_cooling_limit(double n_th, double gamma, double Gamma, double g_c);

/// (Delta_d/2) a^dag a + [Theta_c sigma_+ a^2 + eps2 sigma_+ + H.c.];
/// alpha_target = sqrt(-eps2 / Theta_c).
EffectiveModel build_cat_effective(double theta_c, double eps2, double detuning_d, int fock_cutoff);

}  // namespace qsim::model
