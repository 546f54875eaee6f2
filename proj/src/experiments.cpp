#include "vrisim/experiments.hpp"

#include "vrisim/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vrisim {

void FateTally::add(Fate f) {
  ++n;
  switch (f) {
    case Fate::TopWell: ++top; break;
    case Fate::BottomWell: ++bottom; break;
    case Fate::Recross: ++recross; break;
    case Fate::Timeout: ++timeout; break;
  }
}

const char* cell_fate_name(CellFate f) {
  switch (f) {
    case CellFate::Top: return "TOP";
    case CellFate::Bottom: return "BOTTOM";
    case CellFate::Recross: return "RECROSS";
    case CellFate::Timeout: return "TIMEOUT";
    case CellFate::Inaccessible: return "INACCESSIBLE";
  }
  return "?";
}

namespace {

CellFate to_cell_fate(Fate f) {
  switch (f) {
    case Fate::TopWell: return CellFate::Top;
    case Fate::BottomWell: return CellFate::Bottom;
    case Fate::Recross: return CellFate::Recross;
    case Fate::Timeout: return CellFate::Timeout;
  }
  return CellFate::Timeout;
}

/// Integrates states[i] for every i, storing into results by index so the
/// outcome is identical for any worker count. Errors carry the trajectory id.
void integrate_ensemble(const std::vector<State>& states, const Pes& pes,
                        const IntegratorConfig& cfg, int workers,
                        std::vector<TrajectoryResult>& results) {
  results.resize(states.size());
  parallel_for(states.size(), workers, [&](std::size_t i) {
    try {
      results[i] = integrate(states[i], pes, cfg);
    } catch (const std::exception& e) {
      throw std::runtime_error("trajectory " + std::to_string(i) + ": " + e.what());
    }
  });
}

RecrossRecord make_recross_record(int id, const State& s0, const TrajectoryResult& r) {
  const State& e = r.exit_state;
  double theta = std::atan2(e.py, e.px) * 180.0 / std::numbers::pi;
  if (theta < 0.0) theta += 360.0;  // exit has px < 0, so theta lies in (90, 270)
  const double p0 = std::hypot(s0.px, s0.py);
  const double pe = std::hypot(e.px, e.py);
  return {id,       s0.y, 180.0 - theta, (e.px - s0.px) / s0.px, e.py - s0.py,
          (pe - p0) / p0, r.elapsed};
}

}  // namespace

LineRunResult run_line_experiment(const Pes& pes, double h0, double density,
                                  const IntegratorConfig& cfg, int workers) {
  LineRunResult out;
  out.h0 = h0;
  out.width = bottleneck_width(pes, h0);
  out.initial_states = line_ensemble({h0, density}, pes);
  integrate_ensemble(out.initial_states, pes, cfg, workers, out.trajectories);

  for (std::size_t i = 0; i < out.trajectories.size(); ++i) {
    const TrajectoryResult& r = out.trajectories[i];
    out.tally.add(r.fate);
    out.max_drift = std::max(out.max_drift, r.energy_drift);
    if (r.fate == Fate::Recross)
      out.stats.records.push_back(
          make_recross_record(static_cast<int>(i), out.initial_states[i], r));
  }
  out.timeout_flagged = out.tally.frac_timeout() > kTimeoutFlagThreshold;
  return out;
}

SweepTable sweep_surface(const PesSpec& base, const std::vector<double>& h0_values,
                         const std::vector<double>& xi_values, double density,
                         const IntegratorConfig& cfg, int workers, const ProgressFn& progress) {
  SweepTable table;
  table.h0_values = h0_values;
  table.xi_values = xi_values;
  table.cells.reserve(h0_values.size() * xi_values.size());
  const std::size_t total = h0_values.size() * xi_values.size();

  for (double h0 : h0_values) {
    for (double xi : xi_values) {
      SweepCell cell;
      cell.h0 = h0;
      cell.xi = xi;
      try {
        PesSpec spec = base;
        spec.vri_x = xi;
        const Pes pes = make_pes(spec);
        const LineRunResult run = run_line_experiment(pes, h0, density, cfg, workers);
        cell.n = run.tally.n;
        cell.frac_recross = run.tally.frac_recross();
        cell.frac_top = run.tally.frac_top();
        cell.frac_bottom = run.tally.frac_bottom();
        cell.frac_timeout = run.tally.frac_timeout();
        cell.max_drift = run.max_drift;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      table.cells.push_back(std::move(cell));
      if (progress) progress(table.cells.size(), total);
    }
  }
  return table;
}

FateMap fate_map(const Pes& pes, const SliceGridSpec& grid_spec, const IntegratorConfig& cfg,
                 int workers) {
  const SliceGrid grid = slice_grid(grid_spec, pes);
  FateMap map;
  map.grid = grid.spec;
  map.width = grid.width;
  map.py_max = grid.py_max;
  map.cells.assign(grid.accessible.size(), CellFate::Inaccessible);

  std::vector<TrajectoryResult> results;
  integrate_ensemble(grid.states, pes, cfg, workers, results);

  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto [iy, ipy] = grid.indices[i];
    map.cells[map.flat(iy, ipy)] = to_cell_fate(results[i].fate);
    map.tally.add(results[i].fate);
    map.max_drift = std::max(map.max_drift, results[i].energy_drift);
  }
  map.timeout_flagged = map.tally.frac_timeout() > kTimeoutFlagThreshold;
  return map;
}

double recross_fraction_slice(const FateMap& map) {
  if (map.tally.n == 0)
    throw std::invalid_argument("recross_fraction_slice: fate map has no accessible cells");
  return map.tally.frac_recross();
}

QuadraticFit quadratic_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("quadratic_fit: mismatched input lengths");
  const auto n = static_cast<Eigen::Index>(xs.size());
  if (n < 3) throw std::invalid_argument("quadratic_fit: needs at least 3 points");

  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = xs[i] * xs[i];
    design(i, 1) = xs[i];
    design(i, 2) = 1.0;
    rhs(i) = ys[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) throw std::invalid_argument("quadratic_fit: design is rank deficient");
  const Eigen::Vector3d beta = qr.solve(rhs);

  QuadraticFit fit;
  fit.a = beta(0);
  fit.b = beta(1);
  fit.c = beta(2);
  const Eigen::VectorXd resid = rhs - design * beta;
  fit.residuals.assign(resid.data(), resid.data() + n);
  const double ss_res = resid.squaredNorm();
  const double mean = rhs.mean();
  const double ss_tot = (rhs.array() - mean).matrix().squaredNorm();
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res > 0.0 ? 0.0 : 1.0);
  return fit;
}

SliceSweepResult sweep_slice(const PesSpec& base, double h0,
                             const std::vector<double>& xi_values,
                             const SliceGridSpec& grid_spec, const IntegratorConfig& cfg,
                             int workers, const MapSink& map_sink, const ProgressFn& progress) {
  SliceSweepResult out;
  out.cells.reserve(xi_values.size());
  for (std::size_t i = 0; i < xi_values.size(); ++i) {
    PesSpec spec = base;
    spec.vri_x = xi_values[i];
    const Pes pes = make_pes(spec);
    SliceGridSpec gs = grid_spec;
    gs.h0 = h0;
    const FateMap map = fate_map(pes, gs, cfg, workers);

    SliceCell cell;
    cell.xi = xi_values[i];
    cell.frac_recross = recross_fraction_slice(map);
    cell.frac_top = map.tally.frac_top();
    cell.frac_bottom = map.tally.frac_bottom();
    cell.frac_timeout = map.tally.frac_timeout();
    cell.area = slice_area(pes, h0);
    cell.max_drift = map.max_drift;
    out.cells.push_back(cell);
    if (map_sink) map_sink(i, xi_values[i], map);
    if (progress) progress(i + 1, xi_values.size());
  }

  std::vector<double> xs, ys;
  xs.reserve(out.cells.size());
  ys.reserve(out.cells.size());
  for (const SliceCell& c : out.cells) {
    xs.push_back(c.xi);
    ys.push_back(c.frac_recross);
  }
  out.fit = quadratic_fit(xs, ys);
  return out;
}

TraceResult trace_ensemble(const Pes& pes, double h0, double density,
                           const IntegratorConfig& cfg, int workers) {
  if (!(cfg.sample_interval > 0.0))
    throw std::invalid_argument("trace_ensemble: sample_interval must be > 0");
  TraceResult out;
  out.line = run_line_experiment(pes, h0, density, cfg, workers);

  double best_top = -1.0, best_bottom = -1.0;
  for (std::size_t i = 0; i < out.line.trajectories.size(); ++i) {
    const TrajectoryResult& r = out.line.trajectories[i];
    if (r.fate != Fate::Recross) continue;
    const double y0 = out.line.initial_states[i].y;
    if (y0 > 0.0 && r.elapsed > best_top) {
      best_top = r.elapsed;
      out.limiting_top = static_cast<int>(i);
    } else if (y0 < 0.0 && r.elapsed > best_bottom) {
      best_bottom = r.elapsed;
      out.limiting_bottom = static_cast<int>(i);
    }
  }
  return out;
}

AngleHistogram angle_histogram(const RecrossStats& stats, double bin_width_deg) {
  if (!(bin_width_deg > 0.0))
    throw std::invalid_argument("angle_histogram: bin width must be > 0");
  AngleHistogram hist;
  hist.bin_width_deg = bin_width_deg;
  hist.total = static_cast<int>(stats.records.size());
  if (stats.records.empty()) return hist;

  // bin k covers [(k - 0.5) w, (k + 0.5) w), so the k = 0 bin straddles zero
  auto bin_of = [&](double theta) {
    return static_cast<long>(std::floor(theta / bin_width_deg + 0.5));
  };
  long k_min = bin_of(stats.records.front().theta_dev_deg);
  long k_max = k_min;
  for (const RecrossRecord& r : stats.records) {
    const long k = bin_of(r.theta_dev_deg);
    k_min = std::min(k_min, k);
    k_max = std::max(k_max, k);
  }
  hist.counts.assign(static_cast<std::size_t>(k_max - k_min + 1), 0);
  hist.bin_centers.resize(hist.counts.size());
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    hist.bin_centers[i] = static_cast<double>(k_min + static_cast<long>(i)) * bin_width_deg;

  int within30 = 0;
  for (const RecrossRecord& r : stats.records) {
    ++hist.counts[static_cast<std::size_t>(bin_of(r.theta_dev_deg) - k_min)];
    if (std::abs(r.theta_dev_deg) <= 30.0) ++within30;
  }
  hist.frac_within_30deg = static_cast<double>(within30) / hist.total;

  hist.modal_count = 0;
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double center = hist.bin_centers[i];
    const bool better =
        hist.counts[i] > hist.modal_count ||
        (hist.counts[i] == hist.modal_count &&
         (std::abs(center) < std::abs(hist.modal_center) ||
          (std::abs(center) == std::abs(hist.modal_center) && center < hist.modal_center)));
    if (better) {
      hist.modal_count = hist.counts[i];
      hist.modal_center = center;
    }
  }
  return hist;
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("uniform_grid: bad bounds or step");
  const int n = static_cast<int>(std::floor((hi - lo) / step + 0.5)) + 1;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = lo + i * step;
  return grid;
}

}  // namespace vrisim
