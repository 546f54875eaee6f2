#include "vrisim/ensembles.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace vrisim {

void LineEnsembleSpec::validate() const {
  if (!(h0 > 0.0)) throw std::invalid_argument("LineEnsembleSpec: h0 must be > 0");
  if (!(density > 0.0)) throw std::invalid_argument("LineEnsembleSpec: density must be > 0");
}

void SliceGridSpec::validate() const {
  if (!(h0 > 0.0)) throw std::invalid_argument("SliceGridSpec: h0 must be > 0");
  if (n_y < 2 || n_py < 2)
    throw std::invalid_argument("SliceGridSpec: grid resolutions must be >= 2");
}

std::vector<State> line_ensemble(const LineEnsembleSpec& spec, const Pes& pes) {
  spec.validate();
  const double width = bottleneck_width(pes, spec.h0);
  const int n = static_cast<int>(std::ceil(spec.density * width));
  if (n < 2)
    throw std::invalid_argument("line_ensemble: density * width gives fewer than 2 trajectories");

  const double spacing = width / (n - 1);
  const double mid = 0.5 * static_cast<double>(n - 1);
  std::vector<State> states;
  states.reserve(n);
  for (int k = 0; k < n; ++k) {
    // (k - mid) is exact in floating point, so y_k == -y_{n-1-k} bitwise and
    // the midpoint of an odd-count ensemble sits at y = 0 exactly.
    const double y = (static_cast<double>(k) - mid) * spacing;
    const double q = 2.0 * pes.spec.mass_x * (spec.h0 - potential(0.0, y, pes));
    if (q < -1e-12)
      throw std::runtime_error("line_ensemble: state off the energy shell (width inconsistent)");
    states.push_back({0.0, y, q > 0.0 ? std::sqrt(q) : 0.0, 0.0, 0.0});
  }
  return states;
}

SliceGrid slice_grid(const SliceGridSpec& spec, const Pes& pes) {
  spec.validate();
  SliceGrid grid;
  grid.spec = spec;
  grid.width = bottleneck_width(pes, spec.h0);
  grid.py_max = std::sqrt(2.0 * pes.spec.mass_y * spec.h0);
  grid.accessible.assign(static_cast<std::size_t>(spec.n_y) * spec.n_py, 0);

  const double dy = grid.cell_dy();
  const double dpy = grid.cell_dpy();
  const double m1 = pes.spec.mass_x;
  const double m_ratio = pes.spec.mass_x / pes.spec.mass_y;

  for (int iy = 0; iy < spec.n_y; ++iy) {
    // cell centers; (iy + 0.5 - n/2) is exact, so the lattice is bitwise
    // symmetric under the mirror map
    const double y = (static_cast<double>(iy) + 0.5 - 0.5 * spec.n_y) * dy;
    const double v = potential(0.0, y, pes);
    for (int ipy = 0; ipy < spec.n_py; ++ipy) {
      const double py = (static_cast<double>(ipy) + 0.5 - 0.5 * spec.n_py) * dpy;
      const double q = 2.0 * m1 * (spec.h0 - v) - m_ratio * (py * py);
      if (q > 0.0) {
        grid.accessible[grid.flat(iy, ipy)] = 1;
        grid.states.push_back({0.0, y, std::sqrt(q), py, 0.0});
        grid.indices.emplace_back(iy, ipy);
      }
    }
  }
  return grid;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_smooth(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double slice_area(const Pes& pes, double h0) {
  if (!(h0 > 0.0)) throw std::domain_error("slice_area requires h0 > 0");
  const double alpha = pes.coef.a * pes.spec.vri_x;  // V(0,y) = alpha y^2 + beta y^4
  const double beta = pes.coef.b;
  const double y_edge = 0.5 * bottleneck_width(pes, h0);
  const double z1 = y_edge * y_edge;

  // h0 - V(0,y) = (z1 - y^2)(alpha + beta (z1 + y^2)); substituting
  // y = y_edge sin(u) absorbs the sqrt(z1 - y^2) endpoint singularity into a
  // smooth cos^2 factor.
  const double base = alpha + beta * z1;
  auto f = [&](double u) {
    const double s = std::sin(u);
    const double c = std::cos(u);
    return c * c * std::sqrt(std::max(base + beta * z1 * (s * s), 0.0));
  };
  const double half_pi = std::asin(1.0);
  const double integral = integrate_smooth(f, 0.0, half_pi, 1e-14);
  return 4.0 * std::sqrt(2.0 * pes.spec.mass_y) * z1 * integral;
}

}  // namespace vrisim
