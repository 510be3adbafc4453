#include "qsim/qsim.h"

#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "json.hpp"
#include "qsim/errors.hpp"
#include "qsim/scenarios.hpp"

struct qsim_config {
  qsim::scenarios::ScenarioConfig cfg;
  std::string protocol_name;
};

struct qsim_report {
  qsim::scenarios::Report report;
  std::string json;
};

namespace {

thread_local std::string last_error;

qsim_status fail(qsim_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class Fn>
qsim_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const qsim::ConfigError& e) {
    return fail(QSIM_ERR_CONFIG, e.what());
  } catch (const qsim::SolverError& e) {
    return fail(QSIM_ERR_SOLVER, e.what());
  } catch (const qsim::InvalidArgument& e) {
    return fail(QSIM_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(QSIM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(QSIM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(QSIM_ERR_INTERNAL, "unknown error");
  }
}

std::string with_protocol(const char* json, const char* protocol) {
  if (!protocol) return json;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw qsim::ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw qsim::ConfigError("configuration must be a JSON object");
  if (!doc.contains("protocol")) {
    doc["protocol"] = protocol;
  } else if (!doc["protocol"].is_string() || doc["protocol"].get<std::string>() != protocol) {
    throw qsim::ConfigError("config protocol " + doc["protocol"].dump() + " does not match requested protocol '" +
                            protocol + "'");
  }
  return doc.dump();
}

}  // namespace

extern "C" {

const char* qsim_version(void) { return "1.0.0"; }

const char* qsim_last_error(void) { return last_error.c_str(); }

const char* qsim_status_name(qsim_status status) {
  switch (status) {
    case QSIM_OK: return "ok";
    case QSIM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QSIM_ERR_CONFIG: return "configuration error";
    case QSIM_ERR_SOLVER: return "solver failure";
    case QSIM_ERR_CONVERGENCE: return "convergence gate failure";
    case QSIM_ERR_IO: return "i/o error";
    case QSIM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

qsim_status qsim_config_parse(const char* json, const char* protocol, qsim_config** out) {
  if (!json || !out) return fail(QSIM_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<qsim_config>();
    c->cfg = qsim::scenarios::parse_config(with_protocol(json, protocol));
    c->protocol_name = qsim::scenarios::to_string(c->cfg.protocol);
    *out = c.release();
    return QSIM_OK;
  });
}

qsim_status qsim_config_load(const char* path, const char* protocol, qsim_config** out) {
  if (!path || !out) return fail(QSIM_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  std::ifstream in(path);
  if (!in) return fail(QSIM_ERR_CONFIG, std::string("cannot read config file ") + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return qsim_config_parse(ss.str().c_str(), protocol, out);
}

void qsim_config_free(qsim_config* config) { delete config; }

qsim_status qsim_config_set_fock_cutoff(qsim_config* config, int cutoff) {
  if (!config) return fail(QSIM_ERR_INVALID_ARGUMENT, "null config");
  if (cutoff < 2) return fail(QSIM_ERR_CONFIG, "fock cutoff must be >= 2");
  config->cfg.fock_cutoff = cutoff;
  return QSIM_OK;
}

qsim_status qsim_config_set_tolerance(qsim_config* config, double tolerance) {
  if (!config) return fail(QSIM_ERR_INVALID_ARGUMENT, "null config");
  if (!(tolerance > 0.0 && tolerance < 1.0)) return fail(QSIM_ERR_CONFIG, "tolerance must lie in (0, 1)");
  config->cfg.tolerance = tolerance;
  return QSIM_OK;
}

qsim_status qsim_config_set_workers(qsim_config* config, int workers) {
  if (!config) return fail(QSIM_ERR_INVALID_ARGUMENT, "null config");
  if (workers < 1) return fail(QSIM_ERR_CONFIG, "workers must be >= 1");
  config->cfg.workers = workers;
  return QSIM_OK;
}

qsim_status qsim_config_set_convergence_gate(qsim_config* config, int enabled) {
  if (!config) return fail(QSIM_ERR_INVALID_ARGUMENT, "null config");
  config->cfg.convergence_gate = enabled != 0;
  return QSIM_OK;
}

const char* qsim_config_protocol(const qsim_config* config) {
  return config ? config->protocol_name.c_str() : nullptr;
}

qsim_status qsim_run(const qsim_config* config, qsim_report** out) {
  if (!config || !out) return fail(QSIM_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto r = std::make_unique<qsim_report>();
    r->report = qsim::scenarios::run(config->cfg);
    r->json = qsim::scenarios::report_json(r->report);
    *out = r.release();
    return QSIM_OK;
  });
}

const char* qsim_report_json(const qsim_report* report) { return report ? report->json.c_str() : nullptr; }

qsim_status qsim_report_headline(const qsim_report* report, const char* key, double* value) {
  if (!report || !key || !value) return fail(QSIM_ERR_INVALID_ARGUMENT, "null argument");
  const auto& h = report->report.headline;
  const auto it = h.find(key);
  if (it == h.end()) return fail(QSIM_ERR_INVALID_ARGUMENT, std::string("no headline value '") + key + "'");
  *value = it->second;
  return QSIM_OK;
}

int qsim_report_gate_passed(const qsim_report* report) { return report && report->report.gate.passed ? 1 : 0; }

qsim_status qsim_report_write(const qsim_report* report, const char* dir) {
  if (!report || !dir) return fail(QSIM_ERR_INVALID_ARGUMENT, "null argument");
  try {
    last_error.clear();
    qsim::scenarios::write_report(report->report, dir);
    return QSIM_OK;
  } catch (const std::exception& e) {
    return fail(QSIM_ERR_IO, e.what());
  }
}

void qsim_report_free(qsim_report* report) { delete report; }

}  // extern "C"
