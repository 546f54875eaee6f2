#pragma once

#include "vrisim/ensembles.hpp"
#include "vrisim/integrate.hpp"
#include "vrisim/pes.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vrisim {

/// Fate counts for one ensemble. Fractions use the full ensemble size as the
/// denominator, so the four classes always sum to 1 up to rounding.
struct FateTally {
  int n = 0;
  int top = 0;
  int bottom = 0;
  int recross = 0;
  int timeout = 0;

  void add(Fate f);
  double frac_top() const { return n ? static_cast<double>(top) / n : 0.0; }
  double frac_bottom() const { return n ? static_cast<double>(bottom) / n : 0.0; }
  double frac_recross() const { return n ? static_cast<double>(recross) / n : 0.0; }
  double frac_timeout() const { return n ? static_cast<double>(timeout) / n : 0.0; }
};

/// Per-recrossing-trajectory exit statistics at the x = 0 crossing.
struct RecrossRecord {
  int traj_id = 0;
  double y0 = 0.0;
  double theta_dev_deg = 0.0;  // deviation from horizontal of the exit direction, in (-90, 90)
  double rel_dpx = 0.0;        // (px_exit - px_0) / px_0
  double abs_dpy = 0.0;        // py_exit - py_0 (initial py is 0 on the line)
  double rel_dp_total = 0.0;   // (|p|_exit - |p|_0) / |p|_0
  double t_exit = 0.0;
};

struct RecrossStats {
  std::vector<RecrossRecord> records;
};

// Timeout share above which a run is flagged for review in the outputs.
inline constexpr double kTimeoutFlagThreshold = 0.005;

/// One line-ensemble experiment: integrate every member, tally fates, build
/// the recross statistics. Trajectories is index-aligned with the ensemble.
struct LineRunResult {
  double h0 = 0.0;
  double width = 0.0;
  std::vector<State> initial_states;
  std::vector<TrajectoryResult> trajectories;
  FateTally tally;
  RecrossStats stats;
  double max_drift = 0.0;
  bool timeout_flagged = false;
};

LineRunResult run_line_experiment(const Pes& pes, double h0, double density,
                                  const IntegratorConfig& cfg, int workers);

/// Sweep of line experiments over an (h0, vri_x) grid; coefficients are
/// re-solved for every vri_x. Cell failures are recorded and the sweep
/// continues.
struct SweepCell {
  double h0 = 0.0;
  double xi = 0.0;
  int n = 0;
  double frac_recross = 0.0;
  double frac_top = 0.0;
  double frac_bottom = 0.0;
  double frac_timeout = 0.0;
  double max_drift = 0.0;
  std::string error;  // empty on success
};

struct SweepTable {
  std::vector<double> h0_values;
  std::vector<double> xi_values;
  std::vector<SweepCell> cells;  // row-major, h0 outer, xi inner
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

SweepTable sweep_surface(const PesSpec& base, const std::vector<double>& h0_values,
                         const std::vector<double>& xi_values, double density,
                         const IntegratorConfig& cfg, int workers,
                         const ProgressFn& progress = {});

/// Per-cell fate labels on the phase-space slice; inaccessible cells carry
/// their own label and are excluded from every fraction.
enum class CellFate : std::uint8_t { Top, Bottom, Recross, Timeout, Inaccessible };

const char* cell_fate_name(CellFate f);

struct FateMap {
  SliceGridSpec grid;
  double width = 0.0;
  double py_max = 0.0;
  std::vector<CellFate> cells;  // n_y * n_py, row-major [iy * n_py + ipy]
  FateTally tally;              // accessible cells only
  double max_drift = 0.0;
  bool timeout_flagged = false;

  std::size_t flat(int iy, int ipy) const {
    return static_cast<std::size_t>(iy) * grid.n_py + ipy;
  }
};

FateMap fate_map(const Pes& pes, const SliceGridSpec& grid_spec, const IntegratorConfig& cfg,
                 int workers);

/// Recrossing area over total accessible area, by cell counting (cell-centered
/// grids make count and area fractions coincide). Throws when the map has no
/// accessible cells.
double recross_fraction_slice(const FateMap& map);

/// Ordinary least squares of f(x) = a x^2 + b x + c on a Vandermonde design
/// (QR factorization). Throws on fewer than 3 points or a rank-deficient
/// design.
struct QuadraticFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  std::vector<double> residuals;  // y_i - f(x_i)
  double r2 = 0.0;                // 1 - SS_res / SS_tot, mean-centered SS_tot
};

QuadraticFit quadratic_fit(std::span<const double> xs, std::span<const double> ys);

/// Slice-ensemble sweep over vri_x at fixed h0: per value, a fate map, its
/// recross fraction and the slice area; then a quadratic fit of fraction
/// against vri_x. map_sink, when set, receives each finished map (for
/// streaming to disk) before the next one is built.
struct SliceCell {
  double xi = 0.0;
  double frac_recross = 0.0;
  double frac_top = 0.0;
  double frac_bottom = 0.0;
  double frac_timeout = 0.0;
  double area = 0.0;
  double max_drift = 0.0;
};

struct SliceSweepResult {
  std::vector<SliceCell> cells;
  QuadraticFit fit;  // frac_recross against vri_x
};

using MapSink = std::function<void(std::size_t index, double xi, const FateMap&)>;

SliceSweepResult sweep_slice(const PesSpec& base, double h0,
                             const std::vector<double>& xi_values,
                             const SliceGridSpec& grid_spec, const IntegratorConfig& cfg,
                             int workers, const MapSink& map_sink = {},
                             const ProgressFn& progress = {});

/// Line experiment with path sampling kept, plus the two "limiting"
/// trajectories: the recrossing members with the latest exit time in each
/// half (y0 > 0 and y0 < 0).
struct TraceResult {
  LineRunResult line;
  int limiting_top = -1;     // trajectory id, -1 when the half has no recrossings
  int limiting_bottom = -1;
};

TraceResult trace_ensemble(const Pes& pes, double h0, double density,
                           const IntegratorConfig& cfg, int workers);

/// Histogram of exit-angle deviations with bins centered on multiples of the
/// bin width, so the central bin straddles 0. Empty stats give an empty
/// histogram.
struct AngleHistogram {
  double bin_width_deg = 10.0;
  std::vector<double> bin_centers;  // ascending, contiguous
  std::vector<int> counts;
  int total = 0;
  double modal_center = 0.0;  // meaningful only when total > 0
  int modal_count = 0;
  double frac_within_30deg = 0.0;
};

AngleHistogram angle_histogram(const RecrossStats& stats, double bin_width_deg);

/// Helper for grid specifications "lo, lo+step, ..., hi".
std::vector<double> uniform_grid(double lo, double hi, double step);

}  // namespace vrisim
