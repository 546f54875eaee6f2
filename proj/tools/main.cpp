#include "vrisim/config.hpp"
#include "vrisim/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

// Flag values live in optionals so that only flags the user actually passed
// override the config file; precedence is defaults < --config file < flags.
struct FlagSet {
  std::optional<std::string> config, out, method, grid;
  std::optional<int> workers;
  std::optional<double> h0, xi, density, tmax, radius;
  std::optional<double> rel_tol, abs_tol, step_size, sample_interval, bin_width;
  std::optional<double> h0_min, h0_max, h0_step, xi_min, xi_max, xi_step;
};

void add_common_options(CLI::App* sub, FlagSet& f) {
  sub->add_option("--config", f.config, "configuration file (sections [pes], [integrator], [run])");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--workers", f.workers, "worker threads (0 = all cores)");
  sub->add_option("--h0", f.h0, "total energy of the ensemble");
  sub->add_option("--xi", f.xi, "x-position of the valley-ridge inflection point");
  sub->add_option("--density", f.density, "trajectories per unit channel width");
  sub->add_option("--grid", f.grid, "slice grid resolution as NY,NPY");
  sub->add_option("--tmax", f.tmax, "timeout horizon");
  sub->add_option("--radius", f.radius, "well capture radius");
  sub->add_option("--method", f.method, "integrator: rk45 or symplectic4");
  sub->add_option("--rel-tol", f.rel_tol, "adaptive relative tolerance");
  sub->add_option("--abs-tol", f.abs_tol, "adaptive absolute tolerance");
  sub->add_option("--step-size", f.step_size, "fixed-step size (symplectic4)");
  sub->add_option("--sample-interval", f.sample_interval, "path sampling spacing (0 = off)");
  sub->add_option("--bin-width", f.bin_width, "angle histogram bin width in degrees");
  sub->add_option("--h0-min", f.h0_min, "sweep-surface energy grid start");
  sub->add_option("--h0-max", f.h0_max, "sweep-surface energy grid end");
  sub->add_option("--h0-step", f.h0_step, "sweep-surface energy grid step");
  sub->add_option("--xi-min", f.xi_min, "VRI sweep grid start");
  sub->add_option("--xi-max", f.xi_max, "VRI sweep grid end");
  sub->add_option("--xi-step", f.xi_step, "VRI sweep grid step");
}

void apply_flags(vrisim::RunConfig& cfg, const FlagSet& f) {
  if (f.out) cfg.out_dir = *f.out;
  if (f.workers) cfg.workers = *f.workers;
  if (f.h0) cfg.h0 = *f.h0;
  if (f.xi) cfg.pes.vri_x = *f.xi;
  if (f.density) cfg.density = *f.density;
  if (f.grid) {
    const auto comma = f.grid->find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("--grid expects NY,NPY");
    cfg.grid_ny = static_cast<int>(vrisim::parse_int(f.grid->substr(0, comma)));
    cfg.grid_npy = static_cast<int>(vrisim::parse_int(f.grid->substr(comma + 1)));
  }
  if (f.tmax) cfg.integrator.t_max = *f.tmax;
  if (f.radius) cfg.integrator.capture_radius = *f.radius;
  if (f.method) cfg.integrator.method = vrisim::parse_method(*f.method);
  if (f.rel_tol) cfg.integrator.rel_tol = *f.rel_tol;
  if (f.abs_tol) cfg.integrator.abs_tol = *f.abs_tol;
  if (f.step_size) cfg.integrator.step_size = *f.step_size;
  if (f.sample_interval) cfg.integrator.sample_interval = *f.sample_interval;
  if (f.bin_width) cfg.hist_bin_deg = *f.bin_width;
  if (f.h0_min) cfg.h0_min = *f.h0_min;
  if (f.h0_max) cfg.h0_max = *f.h0_max;
  if (f.h0_step) cfg.h0_step = *f.h0_step;
  if (f.xi_min) cfg.xi_min = *f.xi_min;
  if (f.xi_max) cfg.xi_max = *f.xi_max;
  if (f.xi_step) cfg.xi_step = *f.xi_step;
}

const char* subcommand_help(const std::string& name) {
  if (name == "pes-info") return "print surface diagnostics (coefficients, critical points, VRI, spectrum) as JSON";
  if (name == "line-run") return "classify one line ensemble and write its fate table";
  if (name == "sweep-surface") return "recrossing fraction over an (h0, xi) grid of line ensembles";
  if (name == "fate-map") return "fate map of one phase-space slice grid";
  if (name == "sweep-slice") return "fate maps, recross fractions, areas and quadratic fit over a xi grid";
  if (name == "traces") return "line ensemble with sampled trajectory paths";
  if (name == "stats") return "recrossing momentum/angle statistics of a line ensemble";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory-ensemble toolkit for a movable valley-ridge inflection point"};
  app.require_subcommand(1);

  FlagSet flags;
  for (const std::string& name : vrisim::kExperimentNames)
    add_common_options(app.add_subcommand(name, subcommand_help(name)), flags);

  CLI11_PARSE(app, argc, argv);

  try {
    vrisim::RunConfig cfg =
        flags.config ? vrisim::parse_config_file(*flags.config) : vrisim::default_config();
    cfg.experiment = app.get_subcommands().front()->get_name();
    apply_flags(cfg, flags);
    vrisim::run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
