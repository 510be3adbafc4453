// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "json.hpp"
#include "qsim/analysis.hpp"
#include "qsim/fockspace.hpp"
#include "qsim/lindblad.hpp"
#include "qsim/model.hpp"
#include "qsim/scenarios.hpp"

using namespace qsim;
using nlohmann::json;
using scenarios::Report;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

json rates(double gamma_hz, double n_th) {
  return {{"qubit_decay_over_2pi_hz", 4.0e5}, {"mech_decay_over_2pi_hz", gamma_hz}, {"n_th", n_th}};
}

// Reference cat configuration.
json cat_config(const std::string& protocol) {
  return {{"protocol", protocol},
          {"theta_c_over_2pi_hz", 36e3},
          {"drives", {{"eps2_over_2pi_hz", -72e3}}},
          {"rates", rates(10.0, 5.0)},
          {"fock_cutoff", 30},
          {"duration_s", 60e-6},
          {"sample_step_s", 0.25e-6}};
}

Report run(const json& j) { return scenarios::run(scenarios::parse_config(j.dump())); }

Outcome criterion1(const Report& cat) {
  const double f = cat.headline.at("F_max"), t = cat.headline.at("t_max_s");
  const double f0 = cat.headline.at("F_max_gamma0");
  const bool pass = within(f, 0.93, 0.02) && within(t, 27.5e-6, 3e-6) && within(f0, 0.96, 0.02);
  return {pass, "F_max=" + fmt("%.4f", f) + " (0.93+/-0.02) at t_max=" + fmt("%.2f", t * 1e6) +
                    " us (27.5+/-3); gamma=0 peak " + fmt("%.5f", f0) + " (0.96+/-0.02)"};
}

Outcome criterion2(const Report& cat) {
  const double odd = cat.headline.at("odd_population_tmax");
  const double regions = cat.headline.at("negative_regions_below_minus_0.01");
  return {odd < 0.08 && regions >= 2,
          "odd population " + fmt("%.4f", odd) + " (< 0.08); negative regions with min W < -0.01: " +
              fmt("%.0f", regions) + " (>= 2)"};
}

// delta_N starts at 0 (vacuum is Gaussian); once the cat has formed it must
// stay positive through 0.5 ms.
Outcome criterion3(const Report& cat) {
  const auto& fine = cat.tables.at("fidelity_vs_time").rows;  // t, F, F0, delta_N
  const auto& life = cat.tables.at("nonclassical_volume_lifetime").rows;  // t, delta_N, F
  double onset = -1.0;
  for (const auto& r : fine) {
    if (!std::isnan(r[3]) && r[3] > 0.0) {
      onset = r[0];
      break;
    }
  }
  const double t_max = cat.headline.at("t_max_s");
  bool pass = onset >= 0.0 && onset <= t_max;
  double min_after = INFINITY;
  for (const auto& r : fine)
    if (onset >= 0.0 && r[0] >= onset && !std::isnan(r[3])) min_after = std::min(min_after, r[3]);
  for (const auto& r : life)
    if (onset >= 0.0 && r[0] >= onset) min_after = std::min(min_after, r[1]);
  pass = pass && min_after > 0.0 && life.back()[0] >= 0.5e-3 - 1e-12;
  return {pass, "delta_N > 0 from onset " + fmt("%.2f", onset * 1e6) + " us to " + fmt("%.3f", life.back()[0] * 1e3) +
                    " ms; minimum " + fmt("%.2e", min_after)};
}

Outcome criterion4() {
  json g = cat_config("sweep_gamma");
  g["rates"].erase("mech_decay_over_2pi_hz");
  g["sweep"] = {{"values_over_2pi_hz", {130.0}}};
  g["convergence_gate"] = false;
  const Report rg = run(g);
  const auto& pg = rg.tables.at("reflection_vs_gamma").rows.at(0);  // gamma, re, im, f_max
  const bool gamma_ok = within(pg[3], 0.80, 0.04) && within(pg[1], 0.024, 0.010);

  json d = cat_config("sweep_detuning");
  const std::vector<double> deltas{-40e3, -30e3, -20e3, -10e3, -5e3, 0.0, 5e3, 10e3, 20e3, 30e3, 40e3};
  d["sweep"] = {{"values_over_2pi_hz", deltas}};
  d["convergence_gate"] = false;
  const Report rd = run(d);
  const auto& rows = rd.tables.at("reflection_vs_detuning").rows;
  std::size_t zero = 0;
  for (std::size_t k = 0; k < rows.size(); ++k)
    if (rows[k][0] == 0.0) zero = k;
  const double abs_r0 = std::hypot(rows[zero][1], rows[zero][2]);
  bool dip = true;
  for (std::size_t k = 0; k + 1 <= zero; ++k) dip = dip && rows[k + 1][1] < rows[k][1];
  for (std::size_t k = zero; k + 1 < rows.size(); ++k) dip = dip && rows[k][1] < rows[k + 1][1];
  return {gamma_ok && abs_r0 < 0.01 && dip,
          "gamma/2pi=130 Hz: F_max=" + fmt("%.4f", pg[3]) + " (0.80+/-0.04), Re r=" + fmt("%.4f", pg[1]) +
              " (0.024+/-0.010); |r(0)|=" + fmt("%.2e", abs_r0) + " (< 0.01); Re r dip " +
              (dip ? "monotone on both sides" : "not monotone")};
}

Outcome criterion5(Report& out) {
  const json j = {{"protocol", "squeeze"},
                  {"lambda", 0.06},
                  {"drives", {{"eps_minus_over_2pi_hz", 2.0e6}, {"eps_plus_over_2pi_hz", 1.0e6}}},
                  {"rates", rates(0.0, 5.0)},
                  {"fock_cutoff", 30},
                  {"duration_s", 20e-6},
                  {"sample_step_s", 1e-6}};
  out = run(j);
  const double eta = std::atanh(0.5);
  const double expected = std::exp(-2.0 * eta) / 2.0;
  const double f = out.headline.at("fidelity_ss"), v = out.headline.at("variance_min_ss");
  const double bb = out.headline.at("bdag_b_ss");
  const double rel = std::abs(v - expected) / expected;
  return {f > 0.99 && rel < 0.01 && bb < 0.01,
          "fidelity " + fmt("%.6f", f) + " (> 0.99); min variance " + fmt("%.5f", v) + " vs " + fmt("%.5f", expected) +
              " (rel " + fmt("%.1e", rel) + " < 1%); <B^dag B> " + fmt("%.1e", bb) + " (< 0.01)"};
}

Outcome criterion6(Report& gated) {
  const double Gamma_hz = 4.0e5, gamma_hz = 10.0, n_th = 5.0, lambda = 0.06;
  bool pass = true;
  std::string detail;
  for (double ratio : {1.0 / 10, 1.0 / 7, 1.0 / 5}) {
    const double gc_hz = ratio * Gamma_hz;
    const json j = {{"protocol", "cool"},
                    {"lambda", lambda},
                    {"drives", {{"eps_minus_over_2pi_hz", gc_hz / (2.0 * lambda)}}},
                    {"rates", rates(gamma_hz, n_th)},
                    {"fock_cutoff", 12},
                    {"convergence_gate", ratio == 1.0 / 5}};
    const Report r = run(j);
    if (ratio == 1.0 / 5) gated = r;
    const double oracle = n_th * gamma_hz * Gamma_hz / (2.0 * gc_hz * gc_hz);
    const double q = r.headline.at("n_ss") / oracle;
    pass = pass && within(q, 1.0, 0.2);
    detail += "g_c/Gamma=1/" + fmt("%.0f", 1.0 / ratio) + ": n_ss/formula=" + fmt("%.3f", q) + "; ";
  }
  json z = {{"protocol", "cool"},
            {"lambda", lambda},
            {"drives", {{"eps_minus_over_2pi_hz", 0.2 * Gamma_hz / (2.0 * lambda)}}},
            {"rates", rates(0.0, n_th)},
            {"fock_cutoff", 12},
            {"convergence_gate", false}};
  const double n0 = run(z).headline.at("n_ss");
  pass = pass && n0 < 1e-8;
  return {pass, detail + "gamma=0: n_ss=" + fmt("%.1e", n0) + " (< 1e-8); band 0.8..1.2"};
}

Outcome criterion7() {
  const json j = {{"protocol", "validate_expansion"},
                  {"lambda", 0.06},
                  {"omega_m_over_2pi_hz", 50e6},
                  {"drives", {{"eps1_over_2pi_hz", 5e6}, {"eps2_over_2pi_hz", -72e3}}},
                  {"rates", rates(10.0, 5.0)},
                  {"fock_cutoff", 15},
                  {"duration_s", 5e-6},
                  {"sample_step_s", 0.25e-6},
                  {"convergence_gate", false}};
  const Report r = run(j);
  const double f = r.headline.at("fidelity_final");
  return {f > 0.95, "mechanical-state fidelity at 5 us, N=15: " + fmt("%.5f", f) + " (> 0.95)"};
}

double fock1_volume_oracle() {
  const double h = 1e-5;
  double sum = 0.0;
  for (int k = 0; k * h <= 8.0; ++k) {
    const double r = k * h;
    sum += (k == 0 ? 0.5 : 1.0) * std::abs((2.0 / kPi) * (4 * r * r - 1) * std::exp(-2 * r * r)) * 2 * kPi * r;
  }
  return sum * h - 1.0;
}

Outcome criterion8(const std::vector<const Report*>& gated) {
  using namespace fock;
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  std::mt19937 rng(8);

  {  // [a, a^dag] = 1 below the truncation edge
    const int n = 20;
    const Ladder l = ladder_operators(n);
    const DenseMatrix c = commutator(l.a, l.a_dag).dense();
    double err = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double want = (i == j && i < n - 1) ? 1.0 : (i == j ? -(n - 1.0) : 0.0);
        err = std::max(err, std::abs(c(i, j) - want));
      }
    check(err < 1e-12, "commutator");
  }
  {  // polaron transform is unitary
    const DenseMatrix u = polaron_transform(0.3, 12).dense();
    check((u.adjoint() * u - DenseMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() < 1e-10, "unitarity");
  }
  {  // trace and positivity along a dissipative trajectory
    const int n = 8;
    const auto m = model::build_cat_effective(1.0, -2.0, 0.0, n);
    const auto L = lindblad::build_liouvillian(m.hamiltonian, lindblad::standard_dissipators(n, 10.0, 0.1, 1.0));
    const DensityMatrix rho0 = testing::random_density(rng, SpaceTag::composite(n), 2);
    const std::vector<double> times{0.0, 0.5, 1.0, 2.0};
    const auto tr = lindblad::evolve(L, rho0, times, {});
    check(tr.max_trace_drift < 1e-8 && tr.min_eigenvalue > -1e-8, "trace/positivity");
  }
  {  // Wigner normalization, bound, Gaussian and Fock-1 nonclassical volume
    const int n = 30;
    const analysis::PhaseSpaceGrid grid = analysis::default_grid(std::sqrt(2.0));
    const DensityMatrix cat = DensityMatrix::pure(prepare_state(Cat{std::sqrt(2.0), Parity::even}, n));
    const auto w = analysis::wigner(cat, grid, {.cross_check = true});
    check(within(analysis::grid_integral(w), 1.0, 1e-3), "Wigner normalization");
    double wmax = 0.0;
    for (double v : w.values) wmax = std::max(wmax, std::abs(v));
    check(wmax <= 2.0 / kPi + 1e-9, "|W| <= 2/pi");
    for (const StateSpec& s : std::vector<StateSpec>{Fock{0}, Coherent{cplx(1.0, -0.5)}, SqueezedVacuum{0.4}}) {
      const DensityMatrix rho = DensityMatrix::pure(prepare_state(s, n));
      check(std::abs(analysis::nonclassical_volume(rho, grid)) < 1e-3, "delta_N(Gaussian)");
    }
    const double d1 = analysis::nonclassical_volume(DensityMatrix::pure(prepare_state(Fock{1}, n)), grid);
    check(within(d1, fock1_volume_oracle(), 0.005) && within(d1, 0.426, 0.005), "delta_N(|1>)");
  }
  {  // vectorized Liouvillian against direct action
    const SpaceTag tag = SpaceTag::composite(4);
    const DenseMatrix hr = testing::random_dense(rng, tag.dim());
    const Operator h = Operator::from_dense(tag, 0.5 * (hr + hr.adjoint()));
    const DenseMatrix c = testing::random_dense(rng, tag.dim());
    const std::vector<lindblad::DissipatorSpec> ds{{Operator::from_dense(tag, c), 0.7}};
    const auto L = lindblad::build_liouvillian(h, ds);
    const DenseMatrix rho = testing::random_density(rng, tag).data();
    const DenseMatrix got = lindblad::unvectorize(L.apply(0.0, lindblad::vectorize(rho)), tag.dim());
    const DenseMatrix hd = h.dense(), cdc = c.adjoint() * c;
    const DenseMatrix want = cplx(0, -1) * (hd * rho - rho * hd) + 0.7 * (c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc));
    check((got - want).cwiseAbs().maxCoeff() < 1e-12, "vectorized vs direct");
  }
  std::string gates;
  for (const Report* r : gated) {
    check(r->gate.ran && r->gate.passed, "convergence gate (" + scenarios::to_string(r->protocol) + ")");
    gates += scenarios::to_string(r->protocol) + " " + fmt("%.1e", r->gate.max_change) + ", ";
  }
  std::string detail = failed.empty() ? "all property checks hold" : "failed:";
  for (const auto& f : failed) detail += " " + f + ";";
  return {failed.empty(), detail + "; gate max changes: " + gates + "threshold 1e-3"};
}

Outcome criterion9() {
  const model::DeviceParams p = model::reference_device();
  const double g_hz = model::ordinary(model::derive_coupling(p).g);
  const double nth = model::thermal_occupation(model::angular(50e6), 15e-3);
  const bool g_ok = std::abs(g_hz - 3.4e6) <= 0.1 * 3.4e6;
  return {g_ok && within(nth, 5.0, 1.0),
          "g/2pi=" + fmt("%.4g", g_hz / 1e6) + " MHz (3.4 MHz +/-10%" + (g_ok ? ")" : ", FAIL)") +
              "; n_th(50 MHz, 15 mK)=" + fmt("%.3f", nth) + " (5+/-1)"};
}

}  // namespace

int main() {
  std::vector<std::pair<int, std::function<Outcome()>>> runs;
  Report cat, squeeze, cool;
  bool cat_ok = false;
  auto cat_run = [&] {
    if (!cat_ok) {
      json j = cat_config("cat");
      j["lifetime_s"] = 0.5e-3;
      cat = run(j);
      cat_ok = true;
    }
    return cat;
  };
  runs.emplace_back(1, [&] { return criterion1(cat_run()); });
  runs.emplace_back(2, [&] { return criterion2(cat_run()); });
  runs.emplace_back(3, [&] { return criterion3(cat_run()); });
  runs.emplace_back(4, criterion4);
  runs.emplace_back(5, [&] { return criterion5(squeeze); });
  runs.emplace_back(6, [&] { return criterion6(cool); });
  runs.emplace_back(7, criterion7);
  runs.emplace_back(8, [&] { return criterion8({&cat, &squeeze, &cool}); });
  runs.emplace_back(9, criterion9);

  int failures = 0;
  for (auto& [id, fn] : runs) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("criterion %d %s: %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(runs.size()) - failures, runs.size());
  return failures == 0 ? 0 : 1;
}
