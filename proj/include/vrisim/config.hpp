#pragma once

#include "vrisim/integrate.hpp"
#include "vrisim/pes.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vrisim {

inline constexpr std::string_view kVersion = "0.1.0";

extern const std::vector<std::string> kExperimentNames;  // the CLI subcommands

/// Full description of one run: PES block, integrator block, one experiment
/// plus its parameters. Defaults reproduce the reference configuration
/// (barrier 0.5, wells (1.25, +-1) at -1, density 500, capture radius 0.2).
struct RunConfig {
  PesSpec pes;
  IntegratorConfig integrator;

  std::string experiment = "pes-info";
  std::string out_dir = "out";
  int workers = 0;  // 0 = all cores

  double h0 = 0.03;
  double density = 500.0;
  int grid_ny = 1024;
  int grid_npy = 1024;
  double hist_bin_deg = 10.0;

  // sweep grids; the xi grid defaults depend on the experiment and are filled
  // by resolve_experiment_defaults when unset
  double h0_min = 0.005;
  double h0_max = 0.1;
  double h0_step = 0.001;
  std::optional<double> xi_min;
  std::optional<double> xi_max;
  std::optional<double> xi_step;

  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig default_config();

/// Fills the unset xi-grid fields with the experiment's canonical grid
/// (sweep-surface: 0.2 .. 0.45 step 0.0025; sweep-slice: 0.025 .. 0.7 step
/// 0.025) and, for traces, turns path sampling on at 0.01 when disabled.
void resolve_experiment_defaults(RunConfig& cfg);

/// Sectioned flat key-value text. Unknown sections or keys are rejected with
/// the offending line number; within a section, a repeated key keeps the last
/// value. parse(serialize(c)) == c.
RunConfig parse_config_text(std::string_view text, const std::string& origin = "<config>");
RunConfig parse_config_file(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

/// Section-less flat form holding just the eight PES keys.
PesSpec parse_pes_spec_text(std::string_view text, const std::string& origin = "<pes>");
PesSpec load_pes_spec(const std::string& path);
std::string serialize_pes_spec(const PesSpec& spec);

const char* method_name(Method m);
Method parse_method(std::string_view name);

}  // namespace vrisim
