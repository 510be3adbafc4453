#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "qsim/errors.hpp"
#include "qsim/scenarios.hpp"

namespace qsim::scenarios {

namespace {

using nlohmann::ordered_json;

ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json scalar_map(const std::map<std::string, double>& m) {
  ordered_json out = ordered_json::object();
  for (const auto& [k, v] : m) out[k] = number(v);
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string table_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string report_json(const Report& r) {
  ordered_json j;
  j["protocol"] = to_string(r.protocol);
  j["config"] = r.config_echo.empty() ? ordered_json(nullptr) : ordered_json::parse(r.config_echo);
  j["derived"] = scalar_map(r.derived);
  j["headline"] = scalar_map(r.headline);
  ordered_json tables = ordered_json::object();
  for (const auto& [stem, t] : r.tables) {
    tables[stem] = {{"file", stem + ".csv"}, {"columns", t.columns}, {"rows", t.rows.size()}};
  }
  j["tables"] = tables;
  j["warnings"] = r.warnings;
  const GateRecord& g = r.gate;
  j["convergence_gate"] = {{"ran", g.ran},
                           {"passed", g.passed},
                           {"threshold", GateRecord::threshold},
                           {"base_cutoff", g.base_cutoff},
                           {"rerun_cutoff", g.rerun_cutoff},
                           {"base_tolerance", number(g.base_tolerance)},
                           {"rerun_tolerance", number(g.rerun_tolerance)},
                           {"max_change", number(g.max_change)},
                           {"baseline", scalar_map(g.baseline)},
                           {"cutoff_rerun", scalar_map(g.cutoff_rerun)},
                           {"tolerance_rerun", scalar_map(g.tolerance_rerun)}};
  j["wall_seconds"] = number(r.wall_seconds);
  return j.dump(2);
}

void write_report(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto write = [&](const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << body;
    if (!out) throw std::runtime_error("failed writing " + p.string());
  };
  write(dir / "report.json", report_json(report) + "\n");
  for (const auto& [stem, t] : report.tables) write(dir / (stem + ".csv"), table_csv(t));
}

}  // namespace qsim::scenarios
