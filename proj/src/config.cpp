#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qsim/errors.hpp"
#include "qsim/scenarios.hpp"

namespace qsim::scenarios {

namespace {

using nlohmann::json;
using model::angular;

const std::map<std::string, Protocol>& protocol_names() {
  static const std::map<std::string, Protocol> names{{"cool", Protocol::cool},
                                                     {"squeeze", Protocol::squeeze},
                                                     {"cat", Protocol::cat},
                                                     {"detect", Protocol::detect},
                                                     {"sweep_amplitude", Protocol::sweep_amplitude},
                                                     {"sweep_detuning", Protocol::sweep_detuning},
                                                     {"sweep_gamma", Protocol::sweep_gamma},
                                                     {"validate_expansion", Protocol::validate_expansion}};
  return names;
}

// Reads one JSON object, remembering which keys were consumed so that
// anything left over can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where, std::string protocol)
      : j_(j), where_(std::move(where)), protocol_(std::move(protocol)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key " + path(key) + " for protocol " + protocol_);
    return read_number(key);
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return read_number(key);
  }

  int integer(const std::string& key) {
    const double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 1e6) throw ConfigError(path(key) + " must be an integer");
    return static_cast<int>(v);
  }

  std::optional<bool> optional_bool(const std::string& key) {
    if (!has(key)) return std::nullopt;
    used_.insert(key);
    if (!j_.at(key).is_boolean()) throw ConfigError(path(key) + " must be true or false");
    return j_.at(key).get<bool>();
  }

  const json& object(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key " + path(key) + " for protocol " + protocol_);
    used_.insert(key);
    return j_.at(key);
  }

  std::vector<double> number_list(const std::string& key) {
    const json& arr = object(key);
    if (!arr.is_array() || arr.empty()) throw ConfigError(path(key) + " must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& v : arr) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) throw ConfigError(path(key) + " must hold finite numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }

  void mark_used(const std::string& key) { used_.insert(key); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError("key " + path(key) + " is unknown or not used by protocol " + protocol_);
    }
  }

  std::string path(const std::string& key) const { return where_.empty() ? "'" + key + "'" : "'" + where_ + "." + key + "'"; }

 private:
  double read_number(const std::string& key) {
    used_.insert(key);
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path(key) + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path(key) + " must be finite");
    return d;
  }

  const json& j_;
  std::string where_;
  std::string protocol_;
  std::set<std::string> used_;
};

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw ConfigError(what + " must be > 0");
}
void require_nonnegative(double v, const std::string& what) {
  if (!(v >= 0.0)) throw ConfigError(what + " must be >= 0");
}

model::DeviceParams read_device(const json& j, const std::string& protocol) {
  ObjectReader r(j, "device", protocol);
  model::DeviceParams p;
  p.current_I = r.number("current_a");
  p.cnt_length_L = r.number("cnt_length_m");
  p.squid_width_d = r.number("squid_width_m");
  p.squid_length_S = r.number("squid_length_m");
  p.mass_m = r.number("mass_kg");
  p.omega_m = angular(r.number("omega_m_over_2pi_hz"));
  p.flux_sensitivity_R = model::flux_sensitivity_from_ghz_per_mphi0(r.number("flux_sensitivity_ghz_per_mphi0"));
  p.temperature_T = r.number("temperature_k");
  p.energy_bias_epsilon = angular(r.optional_number("energy_bias_over_2pi_hz").value_or(0.0));
  p.persistent_current_Ip = r.optional_number("persistent_current_a").value_or(0.0);
  p.mutual_inductance_M = r.optional_number("mutual_inductance_h").value_or(0.0);
  p.dipole_mu = r.optional_number("dipole_mu").value_or(0.0);
  r.finish();
  return p;
}

bool is_cat_family(Protocol p) {
  return p == Protocol::cat || p == Protocol::detect || p == Protocol::sweep_amplitude ||
         p == Protocol::sweep_detuning || p == Protocol::sweep_gamma;
}

// Reads lambda (and omega_m when available) from exactly one of: device,
// lambda, g_over_2pi_hz.
void read_coupling(ObjectReader& top, const std::string& protocol, bool need_omega_m, ScenarioConfig& cfg) {
  const int routes = int(top.has("device")) + int(top.has("lambda")) + int(top.has("g_over_2pi_hz"));
  if (routes == 0) throw ConfigError("protocol " + protocol + " needs one of 'device', 'lambda' or 'g_over_2pi_hz'");
  if (routes > 1) throw ConfigError("give only one of 'device', 'lambda' and 'g_over_2pi_hz'");
  if (top.has("device")) {
    if (top.has("omega_m_over_2pi_hz")) throw ConfigError("'omega_m_over_2pi_hz' is taken from 'device'");
    cfg.device = read_device(top.object("device"), protocol);
    // Decay rates are supplied under 'rates'; positivity is checked there.
    model::DeviceParams probe = *cfg.device;
    probe.qubit_decay_Gamma = probe.mech_decay_gamma = 1.0;
    try {
      cfg.lambda = model::derive_coupling(probe).lambda;
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("device: ") + e.what());
    }
    cfg.omega_m = cfg.device->omega_m;
    return;
  }
  if (auto w = top.optional_number("omega_m_over_2pi_hz")) {
    require_positive(*w, "'omega_m_over_2pi_hz'");
    cfg.omega_m = angular(*w);
  }
  if (top.has("lambda")) {
    cfg.lambda = top.number("lambda");
  } else {
    if (!cfg.omega_m) throw ConfigError("'g_over_2pi_hz' requires 'omega_m_over_2pi_hz'");
    cfg.lambda = angular(top.number("g_over_2pi_hz")) / *cfg.omega_m;
  }
  if (!(std::abs(*cfg.lambda) < 1.0)) throw ConfigError("coupling gives |lambda| >= 1");
  if (need_omega_m && !cfg.omega_m) throw ConfigError("protocol " + protocol + " needs 'omega_m_over_2pi_hz'");
}

}  // namespace

std::string to_string(Protocol p) {
  for (const auto& [name, value] : protocol_names())
    if (value == p) return name;
  return "unknown";
}

Protocol protocol_from_string(const std::string& name) {
  const auto it = protocol_names().find(name);
  if (it == protocol_names().end()) throw ConfigError("unknown protocol '" + name + "'");
  return it->second;
}

double ScenarioConfig::resolved_theta_c() const {
  if (theta_c) return *theta_c;
  if (lambda && eps1) return 2.0 * *lambda * *lambda * *eps1;
  throw ConfigError("Theta_c needs 'theta_c_over_2pi_hz' or a coupling plus 'drives.eps1_over_2pi_hz'");
}

ScenarioConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  if (!doc.contains("protocol") || !doc.at("protocol").is_string()) {
    throw ConfigError("missing required string key 'protocol'");
  }
  ScenarioConfig cfg;
  const std::string pname = doc.at("protocol").get<std::string>();
  cfg.protocol = protocol_from_string(pname);
  cfg.source_json = doc.dump();
  const Protocol p = cfg.protocol;
  const bool cat_family = is_cat_family(p);

  ObjectReader top(doc, "", pname);
  top.mark_used("protocol");

  // Coupling.
  const bool theta_direct = cat_family && top.has("theta_c_over_2pi_hz");
  if (p == Protocol::cool || p == Protocol::squeeze || p == Protocol::validate_expansion || (cat_family && !theta_direct)) {
    read_coupling(top, pname, p == Protocol::validate_expansion, cfg);
  }
  if (theta_direct) {
    cfg.theta_c = angular(top.number("theta_c_over_2pi_hz"));
    require_positive(*cfg.theta_c, "'theta_c_over_2pi_hz'");
  }

  // Drives.
  {
    ObjectReader d(top.object("drives"), "drives", pname);
    auto hz = [&](const std::string& key) { return angular(d.number(key)); };
    switch (p) {
      case Protocol::cool:
        cfg.eps_minus = hz("eps_minus_over_2pi_hz");
        if (auto ep = d.optional_number("eps_plus_over_2pi_hz"); ep && *ep != 0.0) {
          throw ConfigError("protocol cool requires 'drives.eps_plus_over_2pi_hz' absent or 0");
        }
        break;
      case Protocol::squeeze:
        cfg.eps_minus = hz("eps_minus_over_2pi_hz");
        cfg.eps_plus = hz("eps_plus_over_2pi_hz");
        if (!(*cfg.eps_minus > std::abs(*cfg.eps_plus))) throw ConfigError("squeeze requires eps_minus > |eps_plus|");
        break;
      case Protocol::validate_expansion:
        cfg.eps1 = hz("eps1_over_2pi_hz");
        cfg.eps2 = hz("eps2_over_2pi_hz");
        break;
      default:
        if (!theta_direct) cfg.eps1 = hz("eps1_over_2pi_hz");
        if (p != Protocol::sweep_amplitude) cfg.eps2 = hz("eps2_over_2pi_hz");
        break;
    }
    d.finish();
  }
  if (p == Protocol::cool) require_positive(*cfg.eps_minus, "'drives.eps_minus_over_2pi_hz'");
  if (cat_family) {
    const double theta = cfg.resolved_theta_c();
    require_positive(theta, "Theta_c");
    if (cfg.eps2 && *cfg.eps2 / theta > 0.0) throw ConfigError("eps2 and Theta_c must have opposite signs");
  }

  // Rates.
  {
    ObjectReader r(top.object("rates"), "rates", pname);
    cfg.Gamma = angular(r.number("qubit_decay_over_2pi_hz"));
    require_positive(cfg.Gamma, "'rates.qubit_decay_over_2pi_hz'");
    if (p != Protocol::sweep_gamma) {
      cfg.gamma = angular(r.number("mech_decay_over_2pi_hz"));
      require_nonnegative(cfg.gamma, "'rates.mech_decay_over_2pi_hz'");
    }
    if (cfg.device && !r.has("n_th")) {
      cfg.n_th = model::thermal_occupation(cfg.device->omega_m, cfg.device->temperature_T);
    } else {
      cfg.n_th = r.number("n_th");
      require_nonnegative(cfg.n_th, "'rates.n_th'");
    }
    r.finish();
  }

  cfg.fock_cutoff = top.integer("fock_cutoff");
  if (cfg.fock_cutoff < 2) throw ConfigError("'fock_cutoff' must be >= 2");
  if (auto t = top.optional_number("tolerance")) {
    if (!(*t > 0.0 && *t < 1.0)) throw ConfigError("'tolerance' must lie in (0, 1)");
    cfg.tolerance = *t;
  }
  if (auto w = top.optional_number("workers")) {
    if (*w < 1 || *w != std::floor(*w)) throw ConfigError("'workers' must be a positive integer");
    cfg.workers = static_cast<int>(*w);
  }
  if (auto g = top.optional_bool("convergence_gate")) cfg.convergence_gate = *g;

  if (p == Protocol::validate_expansion) {
    cfg.duration = 5e-6;
    cfg.sample_step = 0.25e-6;
  }
  if (p != Protocol::cool) {
    if (auto d = top.optional_number("duration_s")) cfg.duration = *d;
    if (auto s = top.optional_number("sample_step_s")) cfg.sample_step = *s;
    require_positive(cfg.duration, "'duration_s'");
    require_positive(cfg.sample_step, "'sample_step_s'");
    if (cfg.sample_step > cfg.duration) throw ConfigError("'sample_step_s' exceeds 'duration_s'");
    if (cfg.duration / cfg.sample_step > 1e6) throw ConfigError("too many samples requested");
  }

  if (cat_family && p != Protocol::sweep_detuning) {
    if (auto dd = top.optional_number("detuning_d_over_2pi_hz")) cfg.detuning_d = angular(*dd);
  }
  if (p == Protocol::cat || p == Protocol::sweep_amplitude) {
    if (top.has("grid")) {
      ObjectReader g(top.object("grid"), "grid", pname);
      cfg.grid = GridOverride{g.number("half_width"), g.number("step")};
      g.finish();
      require_positive(cfg.grid->half_width, "'grid.half_width'");
      require_positive(cfg.grid->step, "'grid.step'");
    }
  }
  if (p == Protocol::cat) {
    if (auto l = top.optional_number("lifetime_s")) cfg.lifetime = *l;
    require_nonnegative(cfg.lifetime, "'lifetime_s'");
  }
  if (p == Protocol::validate_expansion) {
    if (auto o = top.optional_number("off_resonance_over_2pi_hz")) cfg.off_resonance = angular(*o);
  }
  if (p == Protocol::sweep_amplitude || p == Protocol::sweep_detuning || p == Protocol::sweep_gamma) {
    ObjectReader s(top.object("sweep"), "sweep", pname);
    for (double v : s.number_list("values_over_2pi_hz")) cfg.sweep_values.push_back(angular(v));
    s.finish();
    if (p == Protocol::sweep_gamma) {
      for (double v : cfg.sweep_values) require_nonnegative(v, "sweep value (gamma)");
    }
    if (p == Protocol::sweep_amplitude) {
      const double theta = cfg.resolved_theta_c();
      for (double v : cfg.sweep_values) {
        if (!(v / theta < 0.0)) throw ConfigError("sweep_amplitude values must be nonzero with sign opposite to Theta_c");
      }
    }
  }
  top.finish();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace qsim::scenarios
