#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "qsim/qsim.h"

namespace {

int exit_code(qsim_status s) {
  switch (s) {
    case QSIM_OK: return 0;
    case QSIM_ERR_CONFIG:
    case QSIM_ERR_INVALID_ARGUMENT: return 2;
    case QSIM_ERR_SOLVER: return 3;
    case QSIM_ERR_CONVERGENCE: return 4;
    default: return 1;
  }
}

int report_failure(qsim_status s) {
  std::fprintf(stderr, "qsim: %s: %s\n", qsim_status_name(s), qsim_last_error());
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driven-dissipative qubit-oscillator simulator"};
  app.set_version_flag("--version", std::string(qsim_version()));

  std::string protocol;
  std::string config_path;
  std::string out_dir = "out";
  int workers = 0;
  int cutoff = 0;
  double tol = 0.0;
  bool no_gate = false;
  bool print_json = false;

  app.add_option("protocol", protocol, "cool | squeeze | cat | detect | sweep_amplitude | sweep_detuning | "
                                       "sweep_gamma | validate_expansion")
      ->required();
  app.add_option("--config", config_path, "JSON scenario file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (default: out)");
  app.add_option("--workers", workers, "worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--cutoff", cutoff, "override the Fock cutoff")->check(CLI::Range(2, 100000));
  app.add_option("--tol", tol, "override the integrator relative tolerance")->check(CLI::Range(1e-15, 0.5));
  app.add_flag("--no-gate", no_gate, "skip the convergence reruns");
  app.add_flag("--print", print_json, "print report.json to stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  qsim_config* cfg = nullptr;
  qsim_status s = qsim_config_load(config_path.c_str(), protocol.c_str(), &cfg);
  if (s != QSIM_OK) return report_failure(s);

  if (s == QSIM_OK && cutoff > 0) s = qsim_config_set_fock_cutoff(cfg, cutoff);
  if (s == QSIM_OK && tol > 0.0) s = qsim_config_set_tolerance(cfg, tol);
  if (s == QSIM_OK && workers > 0) s = qsim_config_set_workers(cfg, workers);
  if (s == QSIM_OK && no_gate) s = qsim_config_set_convergence_gate(cfg, 0);
  if (s != QSIM_OK) {
    qsim_config_free(cfg);
    return report_failure(s);
  }

  qsim_report* rep = nullptr;
  s = qsim_run(cfg, &rep);
  qsim_config_free(cfg);
  if (s != QSIM_OK) return report_failure(s);

  s = qsim_report_write(rep, out_dir.c_str());
  if (s != QSIM_OK) {
    qsim_report_free(rep);
    return report_failure(s);
  }
  if (print_json) std::printf("%s\n", qsim_report_json(rep));
  const bool gate_ok = qsim_report_gate_passed(rep) != 0 || no_gate;
  qsim_report_free(rep);
  std::fprintf(stderr, "qsim: wrote %s/report.json\n", out_dir.c_str());
  if (!gate_ok) {
    std::fprintf(stderr, "qsim: convergence gate failed (see convergence_gate in report.json)\n");
    return 4;
  }
  return 0;
}
