#include "qsim/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "qsim/analysis.hpp"
#include "qsim/errors.hpp"
#include "qsim/fockspace.hpp"
#include "qsim/lindblad.hpp"

namespace qsim::scenarios {

namespace {

using fock::cplx;
using fock::DensityMatrix;
using fock::Ket;
using fock::Operator;
using model::ordinary;

constexpr double kPi = model::constants::pi;
// Reference cat configuration used to size amplitude-sweep windows.
constexpr double kBaselineTmax = 27.5e-6;
constexpr double kBaselineThetaC = 2.0 * kPi * 36e3;
// Negative-region depth that counts as an interference fringe.
constexpr double kFringeDepth = -0.01;

using Headline = std::map<std::string, double>;

lindblad::EvolveOptions evolve_options(double tol) {
  lindblad::EvolveOptions o;
  o.rtol = tol;
  o.atol = tol * 1e-2;
  return o;
}

std::vector<double> sample_times(double duration, double step) {
  const long n = std::lround(std::ceil(duration / step - 1e-9));
  std::vector<double> t;
  t.reserve(n + 1);
  for (long k = 0; k < n; ++k) t.push_back(k * step);
  t.push_back(duration);
  return t;
}

template <class Fn>
void parallel_for(int count, int workers, Fn&& fn) {
  workers = std::clamp(workers, 1, std::max(count, 1));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex m;
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(m);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

double gate_change(const Headline& base, const Headline& other) {
  double worst = 0.0;
  for (const auto& [k, v] : base) {
    const auto it = other.find(k);
    if (it == other.end()) continue;
    worst = std::max(worst, std::abs(v - it->second));
  }
  return worst;
}

// Reruns `compute` at cutoff + 10 and tolerance / 10 and compares headline scalars.
GateRecord convergence_gate(const ScenarioConfig& cfg, const Headline& baseline,
                            const std::function<Headline(int cutoff, double tol)>& compute) {
  GateRecord g;
  g.base_cutoff = cfg.fock_cutoff;
  g.base_tolerance = cfg.tolerance;
  g.baseline = baseline;
  if (!cfg.convergence_gate) return g;
  g.ran = true;
  g.rerun_cutoff = cfg.fock_cutoff + 10;
  g.rerun_tolerance = cfg.tolerance / 10.0;
  g.cutoff_rerun = compute(g.rerun_cutoff, cfg.tolerance);
  g.tolerance_rerun = compute(cfg.fock_cutoff, g.rerun_tolerance);
  g.max_change = std::max(gate_change(baseline, g.cutoff_rerun), gate_change(baseline, g.tolerance_rerun));
  g.passed = g.max_change < GateRecord::threshold;
  return g;
}

Report start_report(const ScenarioConfig& cfg) {
  Report r;
  r.protocol = cfg.protocol;
  r.config_echo = cfg.source_json;
  if (cfg.lambda) r.derived["lambda"] = *cfg.lambda;
  if (cfg.omega_m) {
    r.derived["omega_m_over_2pi_hz"] = ordinary(*cfg.omega_m);
    if (cfg.lambda) r.derived["g_over_2pi_hz"] = ordinary(*cfg.lambda * *cfg.omega_m);
  }
  r.derived["n_th"] = cfg.n_th;
  r.derived["qubit_decay_over_2pi_hz"] = ordinary(cfg.Gamma);
  return r;
}

std::string hz_label(double rad_per_s) { return format_double(ordinary(rad_per_s)); }

// --- cat trajectories --------------------------------------------------------------

struct CatSettings {
  double theta_c;
  double eps2;
  double gamma;
  double detuning;
  int cutoff;
  double duration;
  double step;
  double tol;
  bool wigner_series = false;
  int wigner_stride = 1;  // samples between delta_N evaluations
  bool keep_best_state = false;
  int wigner_workers = 1;
};

struct CatRun {
  std::vector<double> times;
  std::vector<double> fidelity;
  std::vector<double> delta_n;  // NaN where not evaluated
  std::vector<cplx> sigma_plus;
  double f_max = -1.0;
  double t_max = 0.0;
  double delta_n_max = 0.0;
  std::optional<DensityMatrix> rho_tmax;  // reduced oscillator state at t_max
};

analysis::PhaseSpaceGrid cat_grid(const ScenarioConfig& cfg, double alpha) {
  analysis::PhaseSpaceGrid g = analysis::default_grid(alpha);
  if (cfg.grid) {
    g.half_width = cfg.grid->half_width;
    g.step = cfg.grid->step;
    analysis::validate_grid(g, alpha);
  }
  return g;
}

CatRun run_cat_trajectory(const ScenarioConfig& cfg, const CatSettings& s) {
  const auto m = model::build_cat_effective(s.theta_c, s.eps2, s.detuning, s.cutoff);
  const double alpha = m.derived_constants.at("alpha_target");
  const auto ds = lindblad::standard_dissipators(s.cutoff, cfg.Gamma, s.gamma, cfg.n_th);
  const auto L = lindblad::build_liouvillian(m.hamiltonian, ds);
  const Ket target = fock::prepare_state(fock::Cat{alpha, fock::Parity::even}, std::max(s.cutoff, 2));
  const DensityMatrix rho0 = DensityMatrix::pure(fock::prepare_state(fock::GroundQubitProduct{fock::Fock{0}}, s.cutoff));
  const analysis::PhaseSpaceGrid grid = s.wigner_series ? cat_grid(cfg, alpha) : analysis::PhaseSpaceGrid{};
  analysis::WignerOptions wopt;
  wopt.workers = s.wigner_workers;

  CatRun run;
  run.times = sample_times(s.duration, s.step);
  std::size_t index = 0;
  lindblad::EvolveOptions opt = evolve_options(s.tol);
  opt.on_sample = [&](double t, const DensityMatrix& rho) {
    const DensityMatrix rm = fock::partial_trace_qubit(rho);
    const double f = analysis::fidelity(rm, target);
    run.fidelity.push_back(f);
    double dn = std::nan("");
    if (s.wigner_series && index % s.wigner_stride == 0) {
      dn = analysis::nonclassical_volume(rm, grid, wopt);
      run.delta_n_max = std::max(run.delta_n_max, dn);
    }
    run.delta_n.push_back(dn);
    if (f > run.f_max) {
      run.f_max = f;
      run.t_max = t;
      if (s.keep_best_state) run.rho_tmax = rm;
    }
    ++index;
  };
  const std::vector<lindblad::NamedObservable> obs{
      {"sigma_plus", fock::on_composite(fock::qubit_operators().sigma_plus, s.cutoff)}};
  const auto tr = lindblad::evolve(L, rho0, run.times, obs, opt);
  run.sigma_plus = tr.observables.at("sigma_plus");
  return run;
}

// r averaged over samples in the final 10% of the window.
cplx late_reflection(const CatRun& run, double Gamma, double eps2) {
  const double t_end = run.times.back();
  cplx sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    if (run.times[k] >= 0.9 * t_end - 1e-15) {
      sum += analysis::reflection_from_sigma_plus(run.sigma_plus[k], Gamma, eps2);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

CatSettings base_cat_settings(const ScenarioConfig& cfg) {
  CatSettings s;
  s.theta_c = cfg.resolved_theta_c();
  s.eps2 = cfg.eps2.value_or(0.0);
  s.gamma = cfg.gamma;
  s.detuning = cfg.detuning_d;
  s.cutoff = cfg.fock_cutoff;
  s.duration = cfg.duration;
  s.step = cfg.sample_step;
  s.tol = cfg.tolerance;
  s.wigner_workers = cfg.workers;
  return s;
}

void add_cat_derived(Report& r, double theta_c, double eps2) {
  r.derived["Theta_c_over_2pi_hz"] = ordinary(theta_c);
  r.derived["eps2_over_2pi_hz"] = ordinary(eps2);
  r.derived["alpha_target"] = std::sqrt(-eps2 / theta_c);
}

void warn_on_reflection(Report& r, cplx value, const std::string& where) {
  if (std::abs(value) > analysis::kReflectionSanityCap) {
    r.warnings.push_back("|r| = " + format_double(std::abs(value)) + " exceeds the sanity cap at " + where);
  }
}

struct DetectPoint {
  double f_max;
  double t_max;
  cplx r;
};

DetectPoint detect_point(const ScenarioConfig& cfg, double gamma, double detuning, int cutoff, double tol) {
  CatSettings s = base_cat_settings(cfg);
  s.gamma = gamma;
  s.detuning = detuning;
  s.cutoff = cutoff;
  s.tol = tol;
  const CatRun run = run_cat_trajectory(cfg, s);
  return {run.f_max, run.t_max, late_reflection(run, cfg.Gamma, s.eps2)};
}

// Shared driver for sweep_detuning and sweep_gamma.
Report reflection_sweep(const ScenarioConfig& cfg, bool over_gamma) {
  Report rep = start_report(cfg);
  add_cat_derived(rep, cfg.resolved_theta_c(), *cfg.eps2);
  const auto& values = cfg.sweep_values;
  auto sweep = [&](int cutoff, double tol) {
    std::vector<DetectPoint> pts(values.size());
    parallel_for(static_cast<int>(values.size()), cfg.workers, [&](int i) {
      pts[i] = over_gamma ? detect_point(cfg, values[i], cfg.detuning_d, cutoff, tol)
                          : detect_point(cfg, cfg.gamma, values[i], cutoff, tol);
    });
    return pts;
  };
  auto headline_of = [&](const std::vector<DetectPoint>& pts) {
    Headline h;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string tag = "@" + hz_label(values[i]);
      h["f_max" + tag] = pts[i].f_max;
      h["re_r" + tag] = pts[i].r.real();
      h["im_r" + tag] = pts[i].r.imag();
    }
    return h;
  };
  const auto pts = sweep(cfg.fock_cutoff, cfg.tolerance);
  Table t;
  t.columns = {over_gamma ? "gamma_over_2pi_hz" : "delta_d_over_2pi_hz", "re_r", "im_r", "f_max"};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t.rows.push_back({ordinary(values[i]), pts[i].r.real(), pts[i].r.imag(), pts[i].f_max});
    warn_on_reflection(rep, pts[i].r, t.columns[0] + " = " + hz_label(values[i]));
  }
  rep.tables[over_gamma ? "reflection_vs_gamma" : "reflection_vs_detuning"] = t;
  rep.headline = headline_of(pts);
  rep.gate = convergence_gate(cfg, rep.headline, [&](int n, double tol) { return headline_of(sweep(n, tol)); });
  return rep;
}

Operator rotation(double phase, int cutoff) {
  // exp(i phase a^dag a)
  fock::SparseMatrix u(cutoff, cutoff);
  for (int k = 0; k < cutoff; ++k) u.insert(k, k) = std::exp(cplx(0.0, phase * k));
  return Operator(fock::SpaceTag::oscillator(cutoff), u);
}

struct ExpansionRun {
  std::vector<double> fidelity;
  std::vector<double> trace_distance;
};

ExpansionRun expansion_comparison(const ScenarioConfig& cfg, int cutoff, double tol, double off_resonance,
                                  const std::vector<double>& times, Report* rep) {
  const double lambda = *cfg.lambda, omega_m = *cfg.omega_m, eps1 = *cfg.eps1, eps2 = *cfg.eps2;
  const double g = lambda * omega_m;
  const auto shifted = model::shifted_frequencies(1.0, eps1, g, omega_m);
  const double wp = shifted.omega_m_prime;
  if (!(wp > std::abs(eps1))) throw ConfigError("resonance 2 omega_m' = sqrt(Delta^2 + 4 eps1^2) has no real Delta");
  const double Delta = std::sqrt(4.0 * wp * wp - 4.0 * eps1 * eps1);
  const double delta12 = 2.0 * wp + off_resonance;
  const double theta_c = 2.0 * lambda * lambda * eps1;
  if (rep) {
    rep->derived["omega_m_prime_over_2pi_hz"] = ordinary(wp);
    rep->derived["Delta_over_2pi_hz"] = ordinary(Delta);
    rep->derived["Delta_tilde_over_2pi_hz"] = ordinary(model::shifted_frequencies(Delta, eps1, g, omega_m).Delta_tilde);
    rep->derived["delta12_over_2pi_hz"] = ordinary(delta12);
    rep->derived["Theta_c_over_2pi_hz"] = ordinary(theta_c);
  }
  const auto ds = lindblad::standard_dissipators(cutoff, cfg.Gamma, cfg.gamma, cfg.n_th);
  const auto expanded = model::build_polaron_expanded({Delta, omega_m, lambda, eps1, eps2, delta12}, cutoff);
  const auto L_exp = lindblad::build_liouvillian(expanded, ds);
  const auto L_eff = lindblad::build_liouvillian(model::build_cat_effective(theta_c, eps2, 0.0, cutoff).hamiltonian, ds);
  const DensityMatrix rho0 = DensityMatrix::pure(fock::prepare_state(fock::GroundQubitProduct{fock::Fock{0}}, cutoff));

  std::vector<DensityMatrix> eff_states;
  lindblad::EvolveOptions o_eff = evolve_options(tol);
  o_eff.on_sample = [&](double, const DensityMatrix& rho) { eff_states.push_back(fock::partial_trace_qubit(rho)); };
  lindblad::evolve(L_eff, rho0, times, {}, o_eff);

  ExpansionRun out;
  std::size_t k = 0;
  lindblad::EvolveOptions o_exp = evolve_options(tol);
  o_exp.on_sample = [&](double t, const DensityMatrix& rho) {
    const Operator u = rotation(wp * t, cutoff);
    const fock::DenseMatrix rm = fock::partial_trace_qubit(rho).data();
    const DensityMatrix rotated(fock::SpaceTag::oscillator(cutoff), u.dense() * rm * u.dense().adjoint(),
                                DensityMatrix::kSampledPositivityFloor);
    out.fidelity.push_back(analysis::state_fidelity(rotated, eff_states[k]));
    out.trace_distance.push_back(analysis::trace_distance(rotated, eff_states[k]));
    ++k;
  };
  lindblad::evolve(L_exp, rho0, times, {}, o_exp);
  return out;
}

}  // namespace

// --- protocols ---------------------------------------------------------------------

Report run_cool(const ScenarioConfig& cfg) {
  Report rep = start_report(cfg);
  const double lambda = *cfg.lambda, eps_minus = *cfg.eps_minus;
  auto solve = [&](int cutoff) {
    const auto m = model::build_cooling_jc(lambda, eps_minus, cutoff);
    const auto ds = lindblad::standard_dissipators(cutoff, cfg.Gamma, cfg.gamma, cfg.n_th);
    return lindblad::steady_state_with_residual(lindblad::build_liouvillian(m.hamiltonian, ds));
  };
  const double g_c = 2.0 * lambda * eps_minus;
  rep.derived["g_c_over_2pi_hz"] = ordinary(g_c);
  rep.derived["eps_minus_over_2pi_hz"] = ordinary(eps_minus);
  const auto ss = solve(cfg.fock_cutoff);
  const DensityMatrix rm = fock::partial_trace_qubit(ss.rho);
  const double n_ss = fock::expectation(fock::number_operator(cfg.fock_cutoff), rm).real();

  rep.headline["n_ss"] = n_ss;
  rep.headline["steady_state_residual"] = ss.residual;
  const auto q = fock::qubit_operators();
  rep.headline["excited_population_ss"] =
      fock::expectation(fock::on_composite(q.sigma_plus * q.sigma_minus, cfg.fock_cutoff), ss.rho).real();
  if (cfg.gamma > 0.0) {
    const auto lim = model::predicted_cooling_limit(cfg.n_th, cfg.gamma, cfg.Gamma, g_c);
    rep.derived["n_bar_predicted"] = lim.n_bar;
    rep.derived["cooperativity"] = lim.cooperativity;
    rep.headline["n_ss_over_predicted"] = lim.n_bar > 0.0 ? n_ss / lim.n_bar : std::nan("");
    if (lim.adiabatic_marginal) rep.warnings.push_back("Gamma < 5 g_c: adiabatic elimination is marginal");
  } else {
    rep.derived["n_bar_predicted"] = 0.0;
  }
  Table p;
  p.columns = {"n", "P"};
  const auto dist = analysis::phonon_distribution(rm);
  for (std::size_t n = 0; n < dist.size(); ++n) p.rows.push_back({static_cast<double>(n), dist[n]});
  rep.tables["phonon_distribution_ss"] = p;

  rep.gate = convergence_gate(cfg, {{"n_ss", n_ss}}, [&](int cutoff, double) {
    const auto s = solve(cutoff);
    return Headline{
        {"n_ss", fock::expectation(fock::number_operator(cutoff), fock::partial_trace_qubit(s.rho)).real()}};
  });
  return rep;
}

Report run_squeeze(const ScenarioConfig& cfg) {
  Report rep = start_report(cfg);
  const double lambda = *cfg.lambda, em = *cfg.eps_minus, ep = *cfg.eps_plus;
  const auto base = model::build_squeeze_effective(lambda, em, ep, cfg.fock_cutoff);
  const double eta = base.derived_constants.at("eta");
  rep.derived["Theta_over_2pi_hz"] = ordinary(base.derived_constants.at("Theta"));
  rep.derived["eta"] = eta;
  rep.derived["variance_min_expected"] = std::exp(-2.0 * std::abs(eta)) / 2.0;
  rep.derived["variance_max_expected"] = std::exp(2.0 * std::abs(eta)) / 2.0;

  struct Solved {
    Headline h;
    DensityMatrix rm;
  };
  auto solve = [&](int cutoff) {
    const auto m = model::build_squeeze_effective(lambda, em, ep, cutoff);
    const auto ds = lindblad::standard_dissipators(cutoff, cfg.Gamma, cfg.gamma, cfg.n_th);
    const auto ss = lindblad::steady_state_with_residual(lindblad::build_liouvillian(m.hamiltonian, ds));
    const Operator b = fock::on_composite(model::bogoliubov_mode(eta, cutoff));
    const DensityMatrix rm = fock::partial_trace_qubit(ss.rho);
    const auto ext = analysis::quadrature_extrema(rm);
    const Ket target = fock::prepare_state(fock::SqueezedVacuum{eta}, cutoff);
    Headline h{{"bdag_b_ss", fock::expectation(b.adjoint() * b, ss.rho).real()},
               {"variance_min_ss", ext.min_variance},
               {"variance_max_ss", ext.max_variance},
               {"fidelity_ss", analysis::fidelity(rm, target)}};
    return Solved{h, rm};
  };
  const Solved main = solve(cfg.fock_cutoff);
  rep.headline = main.h;

  // Approach to the steady state from |g> (x) thermal(n_th).
  {
    const int n = cfg.fock_cutoff;
    const auto ds = lindblad::standard_dissipators(n, cfg.Gamma, cfg.gamma, cfg.n_th);
    const auto L = lindblad::build_liouvillian(base.hamiltonian, ds);
    // |g><g| (x) thermal occupies the qubit-ground block.
    fock::DenseMatrix prod = fock::DenseMatrix::Zero(2 * n, 2 * n);
    prod.topLeftCorner(n, n) = DensityMatrix::thermal(n, cfg.n_th).data();
    const DensityMatrix rho0(fock::SpaceTag::composite(n), prod);
    const Operator b = fock::on_composite(model::bogoliubov_mode(eta, n));
    const Ket target = fock::prepare_state(fock::SqueezedVacuum{eta}, n);
    Table t;
    t.columns = {"t_s", "bdag_b", "variance_min", "variance_max", "fidelity"};
    lindblad::EvolveOptions o = evolve_options(cfg.tolerance);
    o.on_sample = [&](double time, const DensityMatrix& rho) {
      const DensityMatrix rm = fock::partial_trace_qubit(rho);
      const auto ext = analysis::quadrature_extrema(rm);
      t.rows.push_back({time, fock::expectation(b.adjoint() * b, rho).real(), ext.min_variance, ext.max_variance,
                        analysis::fidelity(rm, target)});
    };
    lindblad::evolve(L, rho0, sample_times(cfg.duration, cfg.sample_step), {}, o);
    rep.tables["squeeze_vs_time"] = t;
  }
  Table q;
  q.columns = {"angle_rad", "variance"};
  for (int k = 0; k <= 180; ++k) {
    const double th = kPi * k / 180.0;
    q.rows.push_back({th, analysis::quadrature_variance(main.rm, th)});
  }
  rep.tables["quadrature_ss"] = q;
  rep.gate = convergence_gate(cfg, rep.headline, [&](int cutoff, double) { return solve(cutoff).h; });
  return rep;
}

Report run_cat(const ScenarioConfig& cfg) {
  Report rep = start_report(cfg);
  CatSettings s = base_cat_settings(cfg);
  add_cat_derived(rep, s.theta_c, s.eps2);
  rep.derived["detuning_d_over_2pi_hz"] = ordinary(cfg.detuning_d);
  const double alpha = std::sqrt(-s.eps2 / s.theta_c);
  const analysis::PhaseSpaceGrid grid = cat_grid(cfg, alpha);
  rep.derived["grid_half_width"] = grid.half_width;
  rep.derived["grid_step"] = grid.step;

  s.wigner_series = true;
  s.keep_best_state = true;
  const CatRun main = run_cat_trajectory(cfg, s);
  CatSettings s0 = s;
  s0.gamma = 0.0;
  s0.wigner_series = false;
  s0.keep_best_state = false;
  const CatRun companion = run_cat_trajectory(cfg, s0);

  Table f;
  f.columns = {"t_s", "F_gamma", "F_gamma0", "delta_N"};
  for (std::size_t k = 0; k < main.times.size(); ++k) {
    f.rows.push_back({main.times[k], main.fidelity[k], companion.fidelity[k], main.delta_n[k]});
  }
  rep.tables["fidelity_vs_time"] = f;

  const DensityMatrix& best = *main.rho_tmax;
  analysis::WignerOptions wopt;
  wopt.cross_check = true;
  wopt.workers = cfg.workers;
  const auto w = analysis::wigner(best, grid, wopt);
  Table wt;
  wt.columns = {"re_alpha", "im_alpha", "W"};
  const int np = w.points_per_axis();
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < np; ++i) wt.rows.push_back({w.coordinate(i), w.coordinate(j), w.at(i, j)});
  rep.tables["wigner_tmax"] = wt;

  Table pn;
  pn.columns = {"n", "P"};
  const auto dist = analysis::phonon_distribution(best);
  for (std::size_t n = 0; n < dist.size(); ++n) pn.rows.push_back({static_cast<double>(n), dist[n]});
  rep.tables["phonon_distribution_tmax"] = pn;

  Table regions;
  regions.columns = {"cells", "min_W", "re_alpha_at_min", "im_alpha_at_min"};
  int fringes = 0;
  for (const auto& r : analysis::negative_regions(w, 0.0)) {
    regions.rows.push_back({static_cast<double>(r.cells), r.min_value, r.re_alpha_at_min, r.im_alpha_at_min});
    if (r.min_value < kFringeDepth) ++fringes;
  }
  rep.tables["negative_regions_tmax"] = regions;

  rep.headline["F_max"] = main.f_max;
  rep.headline["t_max_s"] = main.t_max;
  rep.headline["F_max_gamma0"] = companion.f_max;
  rep.headline["t_max_gamma0_s"] = companion.t_max;
  rep.headline["F_gamma0_final"] = companion.fidelity.back();
  rep.headline["delta_N_max"] = main.delta_n_max;
  rep.headline["delta_N_tmax"] = analysis::nonclassical_volume(w);
  rep.headline["odd_population_tmax"] = analysis::odd_population(best);
  rep.headline["negative_regions_below_minus_0.01"] = fringes;

  if (cfg.lifetime > 0.0) {
    const double step = std::max(cfg.sample_step, cfg.lifetime / 100.0);
    CatSettings sl = s;
    sl.duration = cfg.lifetime;
    sl.step = step;
    sl.keep_best_state = false;
    const CatRun life = run_cat_trajectory(cfg, sl);
    Table lt;
    lt.columns = {"t_s", "delta_N", "F"};
    double min_after_tmax = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < life.times.size(); ++k) {
      lt.rows.push_back({life.times[k], life.delta_n[k], life.fidelity[k]});
      if (life.times[k] >= main.t_max) min_after_tmax = std::min(min_after_tmax, life.delta_n[k]);
    }
    rep.tables["nonclassical_volume_lifetime"] = lt;
    rep.headline["lifetime_s"] = cfg.lifetime;
    rep.headline["delta_N_min_after_tmax"] = min_after_tmax;
  }

  const Headline gated{{"F_max", main.f_max}, {"delta_N_max", main.delta_n_max}};
  rep.gate = convergence_gate(cfg, gated, [&](int cutoff, double tol) {
    CatSettings g = s;
    g.cutoff = cutoff;
    g.tol = tol;
    g.keep_best_state = false;
    const CatRun r = run_cat_trajectory(cfg, g);
    return Headline{{"F_max", r.f_max}, {"delta_N_max", r.delta_n_max}};
  });
  return rep;
}

Report run_detect(const ScenarioConfig& cfg) {
  Report rep = start_report(cfg);
  const CatSettings s = base_cat_settings(cfg);
  add_cat_derived(rep, s.theta_c, s.eps2);
  rep.derived["detuning_d_over_2pi_hz"] = ordinary(cfg.detuning_d);
  rep.derived["mech_decay_over_2pi_hz"] = ordinary(cfg.gamma);
  const CatRun run = run_cat_trajectory(cfg, s);
  Table t;
  t.columns = {"t_s", "F", "re_r", "im_r"};
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const cplx r = analysis::reflection_from_sigma_plus(run.sigma_plus[k], cfg.Gamma, s.eps2);
    t.rows.push_back({run.times[k], run.fidelity[k], r.real(), r.imag()});
  }
  rep.tables["detect_vs_time"] = t;
  const cplx r = late_reflection(run, cfg.Gamma, s.eps2);
  warn_on_reflection(rep, r, "the detection point");
  rep.headline = {{"F_max", run.f_max}, {"t_max_s", run.t_max}, {"re_r", r.real()}, {"im_r", r.imag()}};
  const Headline gated{{"F_max", run.f_max}, {"re_r", r.real()}, {"im_r", r.imag()}};
  rep.gate = convergence_gate(cfg, gated, [&](int cutoff, double tol) {
    const auto p = detect_point(cfg, cfg.gamma, cfg.detuning_d, cutoff, tol);
    return Headline{{"F_max", p.f_max}, {"re_r", p.r.real()}, {"im_r", p.r.imag()}};
  });
  return rep;
}

Report sweep_detuning(const ScenarioConfig& cfg) { return reflection_sweep(cfg, false); }
Report sweep_gamma(const ScenarioConfig& cfg) { return reflection_sweep(cfg, true); }

Report sweep_amplitude(const ScenarioConfig& cfg) {
  Report rep = start_report(cfg);
  const double theta = cfg.resolved_theta_c();
  rep.derived["Theta_c_over_2pi_hz"] = ordinary(theta);
  rep.derived["delta_N_sample_spacing_s"] = std::max(cfg.sample_step, 1e-6);
  const auto& values = cfg.sweep_values;
  struct Point {
    double alpha, f_max, t_max, dn_max, window;
    int cutoff;
  };
  auto sweep = [&](int extra_cutoff, double tol) {
    std::vector<Point> pts(values.size());
    parallel_for(static_cast<int>(values.size()), cfg.workers, [&](int i) {
      const double alpha = std::sqrt(-values[i] / theta);
      CatSettings s = base_cat_settings(cfg);
      s.eps2 = values[i];
      s.tol = tol;
      s.cutoff = std::max(cfg.fock_cutoff, fock::required_cutoff(fock::Cat{alpha, fock::Parity::even}) + 4) + extra_cutoff;
      s.duration = 3.0 * kBaselineTmax * (kBaselineThetaC / theta) * std::max(1.0, alpha * alpha / 2.0);
      s.wigner_series = true;
      s.wigner_stride = std::max(1, static_cast<int>(std::lround(1e-6 / cfg.sample_step)));
      s.wigner_workers = 1;
      const CatRun r = run_cat_trajectory(cfg, s);
      pts[i] = {alpha, r.f_max, r.t_max, r.delta_n_max, s.duration, s.cutoff};
    });
    return pts;
  };
  auto headline_of = [&](const std::vector<Point>& pts) {
    Headline h;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string tag = "@" + hz_label(values[i]);
      h["f_max" + tag] = pts[i].f_max;
      h["delta_N_max" + tag] = pts[i].dn_max;
    }
    return h;
  };
  const auto pts = sweep(0, cfg.tolerance);
  Table t;
  t.columns = {"eps_res_over_2pi_hz", "alpha_target", "f_max", "t_max_s", "delta_N_max", "fock_cutoff", "window_s"};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t.rows.push_back({ordinary(values[i]), pts[i].alpha, pts[i].f_max, pts[i].t_max, pts[i].dn_max,
                      static_cast<double>(pts[i].cutoff), pts[i].window});
  }
  rep.tables["amplitude_sweep"] = t;
  rep.headline = headline_of(pts);
  if (cfg.convergence_gate) {
    // The cutoff rerun adds 10 levels on top of each point's own cutoff.
    GateRecord g;
    g.ran = true;
    g.base_cutoff = cfg.fock_cutoff;
    g.rerun_cutoff = cfg.fock_cutoff + 10;
    g.base_tolerance = cfg.tolerance;
    g.rerun_tolerance = cfg.tolerance / 10.0;
    g.baseline = rep.headline;
    g.cutoff_rerun = headline_of(sweep(10, cfg.tolerance));
    g.tolerance_rerun = headline_of(sweep(0, g.rerun_tolerance));
    g.max_change = std::max(gate_change(g.baseline, g.cutoff_rerun), gate_change(g.baseline, g.tolerance_rerun));
    g.passed = g.max_change < GateRecord::threshold;
    rep.gate = g;
  } else {
    rep.gate.baseline = rep.headline;
  }
  return rep;
}

Report validate_expansion(const ScenarioConfig& cfg) {
  Report rep = start_report(cfg);
  if (std::abs(*cfg.lambda) > 0.2) throw ConfigError("validate_expansion requires |lambda| <= 0.2");
  const auto times = sample_times(cfg.duration, cfg.sample_step);
  const ExpansionRun on = expansion_comparison(cfg, cfg.fock_cutoff, cfg.tolerance, 0.0, times, &rep);
  Table t;
  t.columns = {"t_s", "fidelity", "trace_distance"};
  std::optional<ExpansionRun> off;
  if (cfg.off_resonance != 0.0) {
    off = expansion_comparison(cfg, cfg.fock_cutoff, cfg.tolerance, cfg.off_resonance, times, nullptr);
    t.columns.push_back("fidelity_off_resonance");
    rep.derived["off_resonance_over_2pi_hz"] = ordinary(cfg.off_resonance);
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> row{times[k], on.fidelity[k], on.trace_distance[k]};
    if (off) row.push_back(off->fidelity[k]);
    t.rows.push_back(row);
  }
  rep.tables["expansion_vs_time"] = t;
  rep.headline["fidelity_final"] = on.fidelity.back();
  rep.headline["trace_distance_final"] = on.trace_distance.back();
  if (off) rep.headline["fidelity_off_resonance_final"] = off->fidelity.back();
  rep.gate = convergence_gate(cfg, {{"fidelity_final", on.fidelity.back()}}, [&](int cutoff, double tol) {
    const auto r = expansion_comparison(cfg, cutoff, tol, 0.0, times, nullptr);
    return Headline{{"fidelity_final", r.fidelity.back()}};
  });
  return rep;
}

Report run(const ScenarioConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  Report r;
  switch (cfg.protocol) {
    case Protocol::cool: r = run_cool(cfg); break;
    case Protocol::squeeze: r = run_squeeze(cfg); break;
    case Protocol::cat: r = run_cat(cfg); break;
    case Protocol::detect: r = run_detect(cfg); break;
    case Protocol::sweep_amplitude: r = sweep_amplitude(cfg); break;
    case Protocol::sweep_detuning: r = sweep_detuning(cfg); break;
    case Protocol::sweep_gamma: r = sweep_gamma(cfg); break;
    case Protocol::validate_expansion: r = validate_expansion(cfg); break;
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace qsim::scenarios
