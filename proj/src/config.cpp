#include "vrisim/config.hpp"

#include "vrisim/numfmt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vrisim {

const std::vector<std::string> kExperimentNames = {
    "pes-info", "line-run", "sweep-surface", "fate-map", "sweep-slice", "traces", "stats"};

const char* method_name(Method m) {
  return m == Method::AdaptiveRk45 ? "rk45" : "symplectic4";
}

Method parse_method(std::string_view name) {
  if (name == "rk45") return Method::AdaptiveRk45;
  if (name == "symplectic4") return Method::FixedSymplectic4;
  throw std::invalid_argument("unknown integrator method '" + std::string(name) +
                              "' (expected rk45 or symplectic4)");
}

void RunConfig::validate() const {
  pes.validate();
  integrator.validate();
  if (std::find(kExperimentNames.begin(), kExperimentNames.end(), experiment) ==
      kExperimentNames.end())
    throw std::invalid_argument("RunConfig: unknown experiment '" + experiment + "'");
  if (out_dir.empty()) throw std::invalid_argument("RunConfig: out_dir must not be empty");
  if (workers < 0) throw std::invalid_argument("RunConfig: workers must be >= 0");
  if (!(h0 > 0.0)) throw std::invalid_argument("RunConfig: h0 must be > 0");
  if (!(density > 0.0)) throw std::invalid_argument("RunConfig: density must be > 0");
  if (grid_ny < 2 || grid_npy < 2)
    throw std::invalid_argument("RunConfig: grid resolutions must be >= 2");
  if (!(hist_bin_deg > 0.0)) throw std::invalid_argument("RunConfig: hist_bin_deg must be > 0");
  if (!(h0_step > 0.0) || h0_max < h0_min)
    throw std::invalid_argument("RunConfig: bad h0 sweep grid");
  if (xi_min && xi_max && xi_step) {
    if (!(*xi_step > 0.0) || *xi_max < *xi_min)
      throw std::invalid_argument("RunConfig: bad xi sweep grid");
  }
}

RunConfig default_config() { return RunConfig{}; }

void resolve_experiment_defaults(RunConfig& cfg) {
  if (cfg.experiment == "sweep-slice") {
    if (!cfg.xi_min) cfg.xi_min = 0.025;
    if (!cfg.xi_max) cfg.xi_max = 0.7;
    if (!cfg.xi_step) cfg.xi_step = 0.025;
  } else {
    if (!cfg.xi_min) cfg.xi_min = 0.2;
    if (!cfg.xi_max) cfg.xi_max = 0.45;
    if (!cfg.xi_step) cfg.xi_step = 0.0025;
  }
  if (cfg.experiment == "traces" && cfg.integrator.sample_interval <= 0.0)
    cfg.integrator.sample_interval = 0.01;
}

// ---------------------------------------------------------------------------
// Sectioned key-value parsing.
// ---------------------------------------------------------------------------

namespace {

struct IniEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void parse_fail(const std::string& origin, int line, const std::string& what) {
  throw std::invalid_argument(origin + ":" + std::to_string(line) + ": " + what);
}

std::vector<IniEntry> parse_ini(std::string_view text, const std::string& origin,
                                bool sections_allowed) {
  std::vector<IniEntry> entries;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::size_t comment = line.find('#');
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (!sections_allowed) parse_fail(origin, line_no, "sections are not allowed here");
      if (line.back() != ']') parse_fail(origin, line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) parse_fail(origin, line_no, "empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      parse_fail(origin, line_no, "expected 'key = value', got '" + std::string(line) + "'");
    const std::string key{trim(line.substr(0, eq))};
    const std::string value{trim(line.substr(eq + 1))};
    if (key.empty()) parse_fail(origin, line_no, "empty key");
    entries.push_back({section, key, value, line_no});
  }
  return entries;
}

bool set_pes_key(PesSpec& pes, const std::string& key, const std::string& value) {
  if (key == "barrier_height") pes.barrier_height = parse_double(value);
  else if (key == "saddle_x") pes.saddle_x = parse_double(value);
  else if (key == "vri_x") pes.vri_x = parse_double(value);
  else if (key == "well_x") pes.well_x = parse_double(value);
  else if (key == "well_y") pes.well_y = parse_double(value);
  else if (key == "well_energy") pes.well_energy = parse_double(value);
  else if (key == "mass_x") pes.mass_x = parse_double(value);
  else if (key == "mass_y") pes.mass_y = parse_double(value);
  else return false;
  return true;
}

bool set_integrator_key(IntegratorConfig& ic, const std::string& key, const std::string& value) {
  if (key == "method") ic.method = parse_method(value);
  else if (key == "rel_tol") ic.rel_tol = parse_double(value);
  else if (key == "abs_tol") ic.abs_tol = parse_double(value);
  else if (key == "step_size") ic.step_size = parse_double(value);
  else if (key == "t_max") ic.t_max = parse_double(value);
  else if (key == "capture_radius") ic.capture_radius = parse_double(value);
  else if (key == "sample_interval") ic.sample_interval = parse_double(value);
  else return false;
  return true;
}

bool set_run_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "experiment") cfg.experiment = value;
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "workers") cfg.workers = static_cast<int>(parse_int(value));
  else if (key == "h0") cfg.h0 = parse_double(value);
  else if (key == "density") cfg.density = parse_double(value);
  else if (key == "grid_ny") cfg.grid_ny = static_cast<int>(parse_int(value));
  else if (key == "grid_npy") cfg.grid_npy = static_cast<int>(parse_int(value));
  else if (key == "hist_bin_deg") cfg.hist_bin_deg = parse_double(value);
  else if (key == "h0_min") cfg.h0_min = parse_double(value);
  else if (key == "h0_max") cfg.h0_max = parse_double(value);
  else if (key == "h0_step") cfg.h0_step = parse_double(value);
  else if (key == "xi_min") cfg.xi_min = parse_double(value);
  else if (key == "xi_max") cfg.xi_max = parse_double(value);
  else if (key == "xi_step") cfg.xi_step = parse_double(value);
  else return false;
  return true;
}

}  // namespace

RunConfig parse_config_text(std::string_view text, const std::string& origin) {
  RunConfig cfg = default_config();
  for (const IniEntry& e : parse_ini(text, origin, true)) {
    if (e.section != "pes" && e.section != "integrator" && e.section != "run") {
      if (e.section.empty()) parse_fail(origin, e.line, "key '" + e.key + "' outside a section");
      parse_fail(origin, e.line, "unknown section '" + e.section + "'");
    }
    bool known = false;
    try {
      if (e.section == "pes") known = set_pes_key(cfg.pes, e.key, e.value);
      else if (e.section == "integrator") known = set_integrator_key(cfg.integrator, e.key, e.value);
      else known = set_run_key(cfg, e.key, e.value);
    } catch (const std::exception& ex) {
      parse_fail(origin, e.line, std::string("key '") + e.key + "': " + ex.what());
    }
    if (!known)
      parse_fail(origin, e.line, "unknown key '" + e.key + "' in section [" + e.section + "]");
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[pes]\n" << serialize_pes_spec(cfg.pes);
  out << "\n[integrator]\n";
  out << "method = " << method_name(cfg.integrator.method) << "\n";
  out << "rel_tol = " << format_double(cfg.integrator.rel_tol) << "\n";
  out << "abs_tol = " << format_double(cfg.integrator.abs_tol) << "\n";
  out << "step_size = " << format_double(cfg.integrator.step_size) << "\n";
  out << "t_max = " << format_double(cfg.integrator.t_max) << "\n";
  out << "capture_radius = " << format_double(cfg.integrator.capture_radius) << "\n";
  out << "sample_interval = " << format_double(cfg.integrator.sample_interval) << "\n";
  out << "\n[run]\n";
  out << "experiment = " << cfg.experiment << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  out << "workers = " << cfg.workers << "\n";
  out << "h0 = " << format_double(cfg.h0) << "\n";
  out << "density = " << format_double(cfg.density) << "\n";
  out << "grid_ny = " << cfg.grid_ny << "\n";
  out << "grid_npy = " << cfg.grid_npy << "\n";
  out << "hist_bin_deg = " << format_double(cfg.hist_bin_deg) << "\n";
  out << "h0_min = " << format_double(cfg.h0_min) << "\n";
  out << "h0_max = " << format_double(cfg.h0_max) << "\n";
  out << "h0_step = " << format_double(cfg.h0_step) << "\n";
  if (cfg.xi_min) out << "xi_min = " << format_double(*cfg.xi_min) << "\n";
  if (cfg.xi_max) out << "xi_max = " << format_double(*cfg.xi_max) << "\n";
  if (cfg.xi_step) out << "xi_step = " << format_double(*cfg.xi_step) << "\n";
  return out.str();
}

PesSpec parse_pes_spec_text(std::string_view text, const std::string& origin) {
  PesSpec pes;
  for (const IniEntry& e : parse_ini(text, origin, false)) {
    bool known = false;
    try {
      known = set_pes_key(pes, e.key, e.value);
    } catch (const std::exception& ex) {
      parse_fail(origin, e.line, std::string("key '") + e.key + "': " + ex.what());
    }
    if (!known) parse_fail(origin, e.line, "unknown PES key '" + e.key + "'");
  }
  return pes;
}

PesSpec load_pes_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open PES file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pes_spec_text(buf.str(), path);
}

std::string serialize_pes_spec(const PesSpec& s) {
  std::ostringstream out;
  out << "barrier_height = " << format_double(s.barrier_height) << "\n";
  out << "saddle_x = " << format_double(s.saddle_x) << "\n";
  out << "vri_x = " << format_double(s.vri_x) << "\n";
  out << "well_x = " << format_double(s.well_x) << "\n";
  out << "well_y = " << format_double(s.well_y) << "\n";
  out << "well_energy = " << format_double(s.well_energy) << "\n";
  out << "mass_x = " << format_double(s.mass_x) << "\n";
  out << "mass_y = " << format_double(s.mass_y) << "\n";
  return out.str();
}

}  // namespace vrisim
