#pragma once

#include "vrisim/integrate.hpp"
#include "vrisim/pes.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace vrisim {

/// The configuration-space line ensemble: trajectories start on x = 0 with
/// purely horizontal momentum, uniformly spaced across the open channel.
struct LineEnsembleSpec {
  double h0 = 0.03;        // total energy, > 0
  double density = 500.0;  // trajectories per unit length of channel width

  void validate() const;
};

/// States with x = 0, py = 0, y on an endpoint-inclusive uniform grid over
/// [-W/2, W/2] (W the bottleneck width at h0), px >= 0 fixed by the energy.
/// Count is ceil(density * W). The y grid is bitwise mirror-symmetric and
/// every state sits on the h0 energy shell to 1e-14.
std::vector<State> line_ensemble(const LineEnsembleSpec& spec, const Pes& pes);

/// The phase-space slice ensemble: a cell-centered uniform grid on the
/// (y, py) plane at x = 0 with px > 0.
struct SliceGridSpec {
  double h0 = 0.03;
  int n_y = 1024;
  int n_py = 1024;

  void validate() const;
};

struct SliceGrid {
  SliceGridSpec spec;
  double width = 0.0;   // bottleneck width at h0; y spans [-width/2, width/2]
  double py_max = 0.0;  // py spans [-py_max, py_max]
  std::vector<std::uint8_t> accessible;       // n_y * n_py mask, row-major [iy * n_py + ipy]
  std::vector<State> states;                  // accessible cells, (iy, ipy) lexicographic
  std::vector<std::pair<int, int>> indices;   // (iy, ipy) per state

  double cell_dy() const { return width / spec.n_y; }
  double cell_dpy() const { return 2.0 * py_max / spec.n_py; }
  double cell_area() const { return cell_dy() * cell_dpy(); }
  std::size_t flat(int iy, int ipy) const {
    return static_cast<std::size_t>(iy) * spec.n_py + ipy;
  }
};

/// A cell is accessible iff the energy constraint leaves px^2 > 0 there; the
/// mask is bitwise symmetric under py -> -py and under (y, py) -> (-y, -py).
SliceGrid slice_grid(const SliceGridSpec& spec, const Pes& pes);

/// Area of the energetically accessible region {V(0,y) + py^2/(2 m2) <= h0}
/// of the slice, by quadrature after a substitution that removes the
/// square-root endpoint singularities (relative accuracy ~1e-12).
double slice_area(const Pes& pes, double h0);

}  // namespace vrisim
