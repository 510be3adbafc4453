#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "qsim/qsim.h"

namespace {

const char* kCool = R"({
  "protocol": "cool",
  "lambda": 0.06,
  "drives": {"eps_minus_over_2pi_hz": 2.0e5},
  "rates": {"qubit_decay_over_2pi_hz": 4.0e5, "mech_decay_over_2pi_hz": 10.0, "n_th": 5.0},
  "fock_cutoff": 10
})";

}  // namespace

TEST_CASE("config errors carry a status and a message") {
  qsim_config* cfg = nullptr;
  CHECK(qsim_config_parse("{", nullptr, &cfg) == QSIM_ERR_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::string(qsim_last_error()).find("invalid JSON") != std::string::npos);

  CHECK(qsim_config_parse(kCool, "squeeze", &cfg) == QSIM_ERR_CONFIG);
  CHECK(std::string(qsim_last_error()).find("does not match") != std::string::npos);

  CHECK(qsim_config_parse(nullptr, nullptr, &cfg) == QSIM_ERR_INVALID_ARGUMENT);
  CHECK(qsim_config_load("/nonexistent/qsim.json", nullptr, &cfg) == QSIM_ERR_CONFIG);
  CHECK(qsim_run(nullptr, nullptr) == QSIM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(qsim_status_name(QSIM_ERR_SOLVER)) == "solver failure");
}

TEST_CASE("protocol may be supplied by the caller") {
  const char* doc = R"({"lambda": 0.06, "drives": {"eps_minus_over_2pi_hz": 2.0e5},
    "rates": {"qubit_decay_over_2pi_hz": 4.0e5, "mech_decay_over_2pi_hz": 10.0, "n_th": 5.0},
    "fock_cutoff": 8})";
  qsim_config* cfg = nullptr;
  REQUIRE(qsim_config_parse(doc, "cool", &cfg) == QSIM_OK);
  CHECK(std::string(qsim_config_protocol(cfg)) == "cool");
  qsim_config_free(cfg);
  CHECK(qsim_config_parse(doc, nullptr, &cfg) == QSIM_ERR_CONFIG);
}

TEST_CASE("run, query and write a cooling report") {
  qsim_config* cfg = nullptr;
  REQUIRE(qsim_config_parse(kCool, "cool", &cfg) == QSIM_OK);
  CHECK(qsim_config_set_fock_cutoff(cfg, 1) == QSIM_ERR_CONFIG);
  CHECK(qsim_config_set_tolerance(cfg, 0.0) == QSIM_ERR_CONFIG);
  CHECK(qsim_config_set_workers(cfg, 0) == QSIM_ERR_CONFIG);
  CHECK(qsim_config_set_fock_cutoff(cfg, 12) == QSIM_OK);
  CHECK(qsim_config_set_workers(cfg, 2) == QSIM_OK);

  qsim_report* rep = nullptr;
  REQUIRE(qsim_run(cfg, &rep) == QSIM_OK);
  qsim_config_free(cfg);

  double n_ss = -1.0;
  CHECK(qsim_report_headline(rep, "n_ss", &n_ss) == QSIM_OK);
  CHECK(n_ss > 0.0);
  CHECK(n_ss < 0.01);
  double missing = 0.0;
  CHECK(qsim_report_headline(rep, "F_max", &missing) == QSIM_ERR_INVALID_ARGUMENT);
  CHECK(qsim_report_gate_passed(rep) == 1);
  const std::string json = qsim_report_json(rep);
  CHECK(json.find("\"protocol\": \"cool\"") != std::string::npos);
  CHECK(json.find("\"rerun_cutoff\": 22") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "qsim_capi_test";
  std::filesystem::remove_all(dir);
  CHECK(qsim_report_write(rep, dir.c_str()) == QSIM_OK);
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "phonon_distribution_ss.csv"));
  std::filesystem::remove_all(dir);
  qsim_report_free(rep);
}
