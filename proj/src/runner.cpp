#include "vrisim/runner.hpp"

#include "vrisim/experiments.hpp"
#include "vrisim/numfmt.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace vrisim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Data files are streamed to <name>.partial and renamed on commit, so an
/// interrupted run never leaves a truncated file under the final name.
class AtomicFile {
 public:
  explicit AtomicFile(const fs::path& path)
      : final_(path),
        partial_(path.string() + ".partial"),
        out_(partial_, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot write '" + partial_.string() + "'");
  }

  std::ostream& out() { return out_; }

  void commit() {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed for '" + partial_.string() + "'");
    out_.close();
    fs::rename(partial_, final_);
  }

 private:
  fs::path final_;
  fs::path partial_;
  std::ofstream out_;
};

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  AtomicFile file(path);
  fn(file.out());
  file.commit();
}

json pes_json(const PesSpec& s) {
  return {{"barrier_height", s.barrier_height}, {"saddle_x", s.saddle_x},
          {"vri_x", s.vri_x},                   {"well_x", s.well_x},
          {"well_y", s.well_y},                 {"well_energy", s.well_energy},
          {"mass_x", s.mass_x},                 {"mass_y", s.mass_y}};
}

json integrator_json(const IntegratorConfig& ic) {
  return {{"method", method_name(ic.method)},
          {"rel_tol", ic.rel_tol},
          {"abs_tol", ic.abs_tol},
          {"step_size", ic.step_size},
          {"t_max", ic.t_max},
          {"capture_radius", ic.capture_radius},
          {"sample_interval", ic.sample_interval}};
}

json config_json(const RunConfig& cfg) {
  json run = {{"experiment", cfg.experiment},
              {"out_dir", cfg.out_dir},
              {"workers", cfg.workers},
              {"h0", cfg.h0},
              {"density", cfg.density},
              {"grid_ny", cfg.grid_ny},
              {"grid_npy", cfg.grid_npy},
              {"hist_bin_deg", cfg.hist_bin_deg},
              {"h0_min", cfg.h0_min},
              {"h0_max", cfg.h0_max},
              {"h0_step", cfg.h0_step}};
  if (cfg.xi_min) run["xi_min"] = *cfg.xi_min;
  if (cfg.xi_max) run["xi_max"] = *cfg.xi_max;
  if (cfg.xi_step) run["xi_step"] = *cfg.xi_step;
  return {{"pes", pes_json(cfg.pes)}, {"integrator", integrator_json(cfg.integrator)},
          {"run", run}};
}

json tally_json(const FateTally& t) {
  return {{"total", t.n},     {"top", t.top},         {"bottom", t.bottom},
          {"recross", t.recross}, {"timeout", t.timeout}};
}

class ManifestWriter {
 public:
  ManifestWriter(const RunConfig& cfg, fs::path out_dir)
      : out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
    doc_["version"] = std::string(kVersion);
    doc_["experiment"] = cfg.experiment;
    doc_["config"] = config_json(cfg);
  }

  json& doc() { return doc_; }

  /// Written last: a present manifest marks a completed run.
  void finish() {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    doc_["wall_time_s"] = std::chrono::duration<double>(elapsed).count();
    write_file(out_dir_ / "manifest.json", [&](std::ostream& os) { os << doc_.dump(2) << "\n"; });
  }

 private:
  fs::path out_dir_;
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

void write_ensemble_csv(std::ostream& os, const std::vector<State>& states) {
  os << "traj_id,y0,py0,px0\n";
  for (std::size_t i = 0; i < states.size(); ++i)
    os << i << ',' << format_double(states[i].y) << ',' << format_double(states[i].py) << ','
       << format_double(states[i].px) << '\n';
}

void write_fates_csv(std::ostream& os, const LineRunResult& run) {
  os << "traj_id,fate,t_exit,x,y,px,py,energy_drift\n";
  for (std::size_t i = 0; i < run.trajectories.size(); ++i) {
    const TrajectoryResult& r = run.trajectories[i];
    const State& e = r.exit_state;
    os << i << ',' << fate_name(r.fate) << ',' << format_double(r.elapsed) << ','
       << format_double(e.x) << ',' << format_double(e.y) << ',' << format_double(e.px) << ','
       << format_double(e.py) << ',' << format_double(r.energy_drift) << '\n';
  }
}

void write_paths_csv(std::ostream& os, const LineRunResult& run) {
  os << "traj_id,t,x,y,px,py\n";
  for (std::size_t i = 0; i < run.trajectories.size(); ++i)
    for (const State& s : run.trajectories[i].path)
      os << i << ',' << format_double(s.t) << ',' << format_double(s.x) << ','
         << format_double(s.y) << ',' << format_double(s.px) << ',' << format_double(s.py)
         << '\n';
}

void write_recross_timeseries_csv(std::ostream& os, const LineRunResult& run) {
  os << "traj_id,t,px,py,p_total,x,y\n";
  for (std::size_t i = 0; i < run.trajectories.size(); ++i) {
    if (run.trajectories[i].fate != Fate::Recross) continue;
    for (const State& s : run.trajectories[i].path)
      os << i << ',' << format_double(s.t) << ',' << format_double(s.px) << ','
         << format_double(s.py) << ',' << format_double(std::hypot(s.px, s.py)) << ','
         << format_double(s.x) << ',' << format_double(s.y) << '\n';
  }
}

void write_stats_csv(std::ostream& os, const RecrossStats& stats) {
  os << "traj_id,y0,theta_dev_deg,rel_dpx,abs_dpy,rel_dp_total,t_exit\n";
  for (const RecrossRecord& r : stats.records)
    os << r.traj_id << ',' << format_double(r.y0) << ',' << format_double(r.theta_dev_deg) << ','
       << format_double(r.rel_dpx) << ',' << format_double(r.abs_dpy) << ','
       << format_double(r.rel_dp_total) << ',' << format_double(r.t_exit) << '\n';
}

void write_histogram_csv(std::ostream& os, const AngleHistogram& hist) {
  os << "bin_center_deg,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    os << format_double(hist.bin_centers[i]) << ',' << hist.counts[i] << '\n';
}

void write_surface_csv(std::ostream& os, const SweepTable& table) {
  os << "H0,xi,N,frac_recross,frac_top,frac_bottom,frac_timeout\n";
  for (const SweepCell& c : table.cells)
    os << format_double(c.h0) << ',' << format_double(c.xi) << ',' << c.n << ','
       << format_double(c.frac_recross) << ',' << format_double(c.frac_top) << ','
       << format_double(c.frac_bottom) << ',' << format_double(c.frac_timeout) << '\n';
}

void write_fatemap_csv(std::ostream& os, const FateMap& map) {
  os << "iy,ipy,y,py,fate\n";
  const double dy = map.width / map.grid.n_y;
  const double dpy = 2.0 * map.py_max / map.grid.n_py;
  for (int iy = 0; iy < map.grid.n_y; ++iy) {
    const double y = (static_cast<double>(iy) + 0.5 - 0.5 * map.grid.n_y) * dy;
    for (int ipy = 0; ipy < map.grid.n_py; ++ipy) {
      const double py = (static_cast<double>(ipy) + 0.5 - 0.5 * map.grid.n_py) * dpy;
      os << iy << ',' << ipy << ',' << format_double(y) << ',' << format_double(py) << ','
         << cell_fate_name(map.cells[map.flat(iy, ipy)]) << '\n';
    }
  }
}

void write_slice_sweep_csv(std::ostream& os, const SliceSweepResult& sweep) {
  os << "xi,frac_recross,frac_top,frac_bottom,frac_timeout,slice_area\n";
  for (const SliceCell& c : sweep.cells)
    os << format_double(c.xi) << ',' << format_double(c.frac_recross) << ','
       << format_double(c.frac_top) << ',' << format_double(c.frac_bottom) << ','
       << format_double(c.frac_timeout) << ',' << format_double(c.area) << '\n';
}

json fit_json(const QuadraticFit& fit) {
  return {{"a", fit.a}, {"b", fit.b}, {"c", fit.c}, {"r2", fit.r2},
          {"residuals", fit.residuals}};
}

std::string map_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fatemap_%02zu.csv", index);
  return buf;
}

void progress_line(const std::string& label, std::size_t done, std::size_t total) {
  std::cerr << label << ": " << done << "/" << total << "\n";
}

// ---------------------------------------------------------------------------
// Experiment dispatch.
// ---------------------------------------------------------------------------

void run_line_run(const RunConfig& cfg, const fs::path& out, ManifestWriter& manifest) {
  const Pes pes = make_pes(cfg.pes);
  const LineRunResult run =
      run_line_experiment(pes, cfg.h0, cfg.density, cfg.integrator, cfg.workers);
  write_file(out / "ensemble.csv",
             [&](std::ostream& os) { write_ensemble_csv(os, run.initial_states); });
  write_file(out / "ensemble.json", [&](std::ostream& os) {
    const json side = {{"pes", pes_json(cfg.pes)},
                       {"h0", run.h0},
                       {"density", cfg.density},
                       {"width", run.width},
                       {"n", static_cast<int>(run.initial_states.size())}};
    os << side.dump(2) << "\n";
  });
  write_file(out / "fates.csv", [&](std::ostream& os) { write_fates_csv(os, run); });
  manifest.doc()["counts"] = tally_json(run.tally);
  manifest.doc()["width"] = run.width;
  manifest.doc()["max_energy_drift"] = run.max_drift;
  manifest.doc()["timeout_flagged"] = run.timeout_flagged;
}

void run_sweep_surface(const RunConfig& cfg, const fs::path& out, ManifestWriter& manifest) {
  const auto h0s = uniform_grid(cfg.h0_min, cfg.h0_max, cfg.h0_step);
  const auto xis = uniform_grid(*cfg.xi_min, *cfg.xi_max, *cfg.xi_step);
  const SweepTable table =
      sweep_surface(cfg.pes, h0s, xis, cfg.density, cfg.integrator, cfg.workers,
                    [](std::size_t d, std::size_t t) { progress_line("sweep-surface", d, t); });
  write_file(out / "surface.csv", [&](std::ostream& os) { write_surface_csv(os, table); });

  json failures = json::array();
  json flagged = json::array();
  for (const SweepCell& c : table.cells) {
    if (!c.error.empty())
      failures.push_back({{"h0", c.h0}, {"xi", c.xi}, {"error", c.error}});
    if (c.frac_timeout > kTimeoutFlagThreshold)
      flagged.push_back({{"h0", c.h0}, {"xi", c.xi}, {"frac_timeout", c.frac_timeout}});
  }
  manifest.doc()["grids"] = {{"h0", h0s}, {"xi", xis}};
  manifest.doc()["cells"] = static_cast<int>(table.cells.size());
  manifest.doc()["failed_cells"] = failures;
  manifest.doc()["timeout_flagged_cells"] = flagged;
}

void run_fate_map(const RunConfig& cfg, const fs::path& out, ManifestWriter& manifest) {
  const Pes pes = make_pes(cfg.pes);
  const FateMap map = fate_map(pes, {cfg.h0, cfg.grid_ny, cfg.grid_npy}, cfg.integrator,
                               cfg.workers);
  write_file(out / "fatemap.csv", [&](std::ostream& os) { write_fatemap_csv(os, map); });
  manifest.doc()["counts"] = tally_json(map.tally);
  manifest.doc()["width"] = map.width;
  manifest.doc()["py_max"] = map.py_max;
  manifest.doc()["max_energy_drift"] = map.max_drift;
  manifest.doc()["timeout_flagged"] = map.timeout_flagged;
}

void run_sweep_slice(const RunConfig& cfg, const fs::path& out, ManifestWriter& manifest) {
  const auto xis = uniform_grid(*cfg.xi_min, *cfg.xi_max, *cfg.xi_step);
  json map_files = json::array();
  const SliceSweepResult sweep = sweep_slice(
      cfg.pes, cfg.h0, xis, {cfg.h0, cfg.grid_ny, cfg.grid_npy}, cfg.integrator, cfg.workers,
      [&](std::size_t index, double xi, const FateMap& map) {
        const std::string name = map_file_name(index);
        write_file(out / name, [&](std::ostream& os) { write_fatemap_csv(os, map); });
        map_files.push_back({{"file", name}, {"xi", xi}, {"counts", tally_json(map.tally)}});
      },
      [](std::size_t d, std::size_t t) { progress_line("sweep-slice", d, t); });
  write_file(out / "slice_sweep.csv",
             [&](std::ostream& os) { write_slice_sweep_csv(os, sweep); });
  write_file(out / "fit.json",
             [&](std::ostream& os) { os << fit_json(sweep.fit).dump(2) << "\n"; });
  manifest.doc()["grids"] = {{"xi", xis}};
  manifest.doc()["maps"] = map_files;
  manifest.doc()["fit"] = fit_json(sweep.fit);
}

void run_traces(const RunConfig& cfg, const fs::path& out, ManifestWriter& manifest) {
  const Pes pes = make_pes(cfg.pes);
  const TraceResult trace =
      trace_ensemble(pes, cfg.h0, cfg.density, cfg.integrator, cfg.workers);
  write_file(out / "paths.csv", [&](std::ostream& os) { write_paths_csv(os, trace.line); });
  write_file(out / "fates.csv", [&](std::ostream& os) { write_fates_csv(os, trace.line); });
  write_file(out / "recross_timeseries.csv",
             [&](std::ostream& os) { write_recross_timeseries_csv(os, trace.line); });
  manifest.doc()["counts"] = tally_json(trace.line.tally);
  manifest.doc()["width"] = trace.line.width;
  manifest.doc()["max_energy_drift"] = trace.line.max_drift;
  manifest.doc()["limiting_top"] = trace.limiting_top;
  manifest.doc()["limiting_bottom"] = trace.limiting_bottom;
}

void run_stats(const RunConfig& cfg, const fs::path& out, ManifestWriter& manifest) {
  const Pes pes = make_pes(cfg.pes);
  const LineRunResult run =
      run_line_experiment(pes, cfg.h0, cfg.density, cfg.integrator, cfg.workers);
  const AngleHistogram hist = angle_histogram(run.stats, cfg.hist_bin_deg);
  write_file(out / "recross_stats.csv",
             [&](std::ostream& os) { write_stats_csv(os, run.stats); });
  write_file(out / "angle_histogram.csv",
             [&](std::ostream& os) { write_histogram_csv(os, hist); });
  manifest.doc()["counts"] = tally_json(run.tally);
  manifest.doc()["width"] = run.width;
  manifest.doc()["max_energy_drift"] = run.max_drift;
  manifest.doc()["histogram"] = {{"bin_width_deg", hist.bin_width_deg},
                                 {"total", hist.total},
                                 {"modal_center", hist.modal_center},
                                 {"modal_count", hist.modal_count},
                                 {"frac_within_30deg", hist.frac_within_30deg}};
}

}  // namespace

std::string pes_info_json(const RunConfig& cfg) {
  const Pes pes = make_pes(cfg.pes);
  json doc;
  doc["version"] = std::string(kVersion);
  doc["spec"] = pes_json(cfg.pes);
  {
    const Vec2 g = gradient(cfg.pes.well_x, cfg.pes.well_y, pes);
    doc["coefficients"] = {
        {"a", pes.coef.a},
        {"b", pes.coef.b},
        {"c", pes.coef.c},
        {"residuals",
         {{"well_energy",
           potential(cfg.pes.well_x, cfg.pes.well_y, pes) - cfg.pes.well_energy},
          {"grad_x", g.x},
          {"grad_y", g.y}}}};
  }
  json points = json::array();
  for (const CriticalPoint& p : critical_points(pes)) {
    points.push_back({{"x", p.position.x},
                      {"y", p.position.y},
                      {"energy", p.energy},
                      {"kind", p.kind == CriticalKind::Minimum ? "minimum" : "index-1 saddle"},
                      {"hessian_eigenvalues", {p.hessian_eigenvalues[0],
                                               p.hessian_eigenvalues[1]}}});
  }
  doc["critical_points"] = points;
  {
    const Vec2 v = locate_vri(pes);
    const VriResiduals res = vri_residuals(v.x, v.y, pes);
    doc["vri"] = {{"x", v.x},
                  {"y", v.y},
                  {"det_residual", res.det},
                  {"adjugate_residual", res.adjugate},
                  {"spec_vri_x_error", v.x - cfg.pes.vri_x}};
  }
  {
    const SaddleSpectrum s = saddle_eigenvalues(pes);
    doc["spectrum"] = {{"lambda_real", s.lambda_real},
                       {"lambda_imag", s.lambda_imag},
                       {"lambda_real_numeric", s.lambda_real_numeric},
                       {"lambda_imag_numeric", s.lambda_imag_numeric}};
  }
  doc["bottleneck"] = {{"h0", cfg.h0}, {"width", bottleneck_width(pes, cfg.h0)}};
  return doc.dump(2);
}

void run(const RunConfig& raw) {
  RunConfig cfg = raw;
  resolve_experiment_defaults(cfg);
  cfg.validate();

  if (cfg.experiment == "pes-info") {
    std::cout << pes_info_json(cfg) << "\n";
    return;
  }

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  ManifestWriter manifest(cfg, out);

  if (cfg.experiment == "line-run") run_line_run(cfg, out, manifest);
  else if (cfg.experiment == "sweep-surface") run_sweep_surface(cfg, out, manifest);
  else if (cfg.experiment == "fate-map") run_fate_map(cfg, out, manifest);
  else if (cfg.experiment == "sweep-slice") run_sweep_slice(cfg, out, manifest);
  else if (cfg.experiment == "traces") run_traces(cfg, out, manifest);
  else if (cfg.experiment == "stats") run_stats(cfg, out, manifest);
  else throw std::invalid_argument("unknown experiment '" + cfg.experiment + "'");

  manifest.finish();
}

}  // namespace vrisim
