#include "vrisim/pes.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace vrisim {

void PesSpec::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("PesSpec: " + what); };
  if (!(barrier_height > 0.0)) fail("barrier_height must be > 0");
  if (!(saddle_x > 0.0)) fail("saddle_x must be > 0");
  if (!(vri_x > 0.0 && vri_x < saddle_x)) fail("vri_x must lie strictly between 0 and saddle_x");
  if (!(well_x > saddle_x)) fail("well_x must be > saddle_x");
  if (!(well_y > 0.0)) fail("well_y must be > 0");
  if (!std::isfinite(well_energy)) fail("well_energy must be finite");
  if (!(mass_x > 0.0)) fail("mass_x must be > 0");
  if (!(mass_y > 0.0)) fail("mass_y must be > 0");
}

Coefficients solve_coefficients(const PesSpec& s) {
  const double yw = s.well_y;
  const double yw2 = yw * yw;
  const double yw3 = yw2 * yw;
  const double yw4 = yw2 * yw2;
  const double xw = s.well_x;
  const double sx2 = s.saddle_x * s.saddle_x;
  const double quartic = s.barrier_height / (sx2 * sx2);
  const double axis_v = quartic * xw * xw * (xw * xw - 2.0 * sx2);   // V(well_x, 0)
  const double axis_dv = 4.0 * quartic * xw * (xw * xw - sx2);       // dV/dx (well_x, 0)

  // rows: energy condition, x-gradient, y-gradient at (well_x, well_y)
  double m[3][4] = {
      {yw2 * (s.vri_x - xw), yw4, xw * yw4, s.well_energy - axis_v},
      {-yw2, 0.0, yw4, -axis_dv},
      {2.0 * yw * (s.vri_x - xw), 4.0 * yw3, 4.0 * xw * yw3, 0.0},
  };

  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (std::abs(m[piv][col]) < 1e-14) throw std::runtime_error("coefficient system singular");
    if (piv != col)
      for (int c = col; c < 4; ++c) std::swap(m[piv][c], m[col][c]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  double sol[3];
  for (int r = 2; r >= 0; --r) {
    double acc = m[r][3];
    for (int c = r + 1; c < 3; ++c) acc -= m[r][c] * sol[c];
    sol[r] = acc / m[r][r];
  }
  return {sol[0], sol[1], sol[2]};
}

Pes make_pes(const PesSpec& spec) {
  spec.validate();
  const double sx2 = spec.saddle_x * spec.saddle_x;
  return {spec, solve_coefficients(spec), spec.barrier_height / (sx2 * sx2)};
}

namespace {

std::array<double, 2> sym2_eigenvalues(const Sym2& h) {
  const double mean = 0.5 * (h.xx + h.yy);
  const double rad = std::hypot(0.5 * (h.xx - h.yy), h.xy);
  return {mean - rad, mean + rad};
}

Vec2 newton_refine(const Pes& pes, Vec2 seed) {
  Vec2 p = seed;
  for (int it = 0; it < 60; ++it) {
    const Vec2 g = gradient(p.x, p.y, pes);
    if (std::hypot(g.x, g.y) <= 1e-13) return p;
    const Sym2 h = hessian(p.x, p.y, pes);
    const double det = h.xx * h.yy - h.xy * h.xy;
    if (std::abs(det) < 1e-14)
      throw std::runtime_error("critical point search: singular Hessian near seed (" +
                               std::to_string(seed.x) + ", " + std::to_string(seed.y) + ")");
    p.x += (-g.x * h.yy + g.y * h.xy) / det;
    p.y += (-g.y * h.xx + g.x * h.xy) / det;
  }
  throw std::runtime_error("critical point search did not converge from seed (" +
                           std::to_string(seed.x) + ", " + std::to_string(seed.y) + ")");
}

}  // namespace

std::vector<CriticalPoint> critical_points(const Pes& pes) {
  const std::array<Vec2, 4> seeds = {{{0.0, 0.0},
                                      {pes.spec.saddle_x, 0.0},
                                      {pes.spec.well_x, pes.spec.well_y},
                                      {pes.spec.well_x, -pes.spec.well_y}}};
  std::vector<CriticalPoint> points;
  points.reserve(seeds.size());
  for (const Vec2& seed : seeds) {
    const Vec2 p = newton_refine(pes, seed);
    const Sym2 h = hessian(p.x, p.y, pes);
    const auto eig = sym2_eigenvalues(h);
    CriticalKind kind;
    if (eig[0] > 0.0)
      kind = CriticalKind::Minimum;
    else if (eig[0] < 0.0 && eig[1] > 0.0)
      kind = CriticalKind::Index1Saddle;
    else
      throw std::runtime_error("degenerate critical point at (" + std::to_string(p.x) + ", " +
                               std::to_string(p.y) + ")");
    points.push_back({p, potential(p.x, p.y, pes), kind, eig});
  }
  return points;
}

Vec2 locate_vri(const Pes& pes) {
  const double eps = 1e-6;
  const double lo = eps;
  const double hi = pes.spec.saddle_x - eps;
  auto det_on_axis = [&](double x) {
    const Sym2 h = hessian(x, 0.0, pes);
    return h.xx * h.yy - h.xy * h.xy;
  };

  // Scan resolution separates the VRI root from the V_xx zero at
  // saddle_x/sqrt(3) for any spec whose roots are > ~5e-4 apart.
  const int n = 2048;
  double xa = lo;
  double fa = det_on_axis(lo);
  for (int i = 1; i <= n; ++i) {
    const double xb = lo + (hi - lo) * (static_cast<double>(i) / n);
    const double fb = det_on_axis(xb);
    if (fa == 0.0 || (fa < 0.0) != (fb < 0.0)) {
      double a = xa, b = xb;
      if (fa == 0.0) b = xa;
      for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        if ((det_on_axis(mid) < 0.0) == (fa < 0.0))
          a = mid;
        else
          b = mid;
      }
      const double root = 0.5 * (a + b);
      const VriResiduals res = vri_residuals(root, 0.0, pes);
      if (std::abs(res.det) <= tolerances::analytic_identity &&
          std::abs(res.adjugate) <= tolerances::analytic_identity)
        return {root, 0.0};
    }
    xa = xb;
    fa = fb;
  }
  throw std::runtime_error("VRI not bracketed on (0, saddle_x)");
}

SaddleSpectrum saddle_eigenvalues(const Pes& pes) {
  SaddleSpectrum s;
  s.lambda_real = 2.0 * std::sqrt(pes.spec.barrier_height / pes.spec.mass_x) / pes.spec.saddle_x;
  s.lambda_imag = std::sqrt(2.0 * pes.coef.a * pes.spec.vri_x / pes.spec.mass_y);

  const Sym2 h = hessian(0.0, 0.0, pes);
  Eigen::Matrix4d jac = Eigen::Matrix4d::Zero();
  jac(0, 2) = 1.0 / pes.spec.mass_x;
  jac(1, 3) = 1.0 / pes.spec.mass_y;
  jac(2, 0) = -h.xx;
  jac(2, 1) = -h.xy;
  jac(3, 0) = -h.xy;
  jac(3, 1) = -h.yy;
  const Eigen::EigenSolver<Eigen::Matrix4d> es(jac);
  s.lambda_real_numeric = es.eigenvalues().real().maxCoeff();
  s.lambda_imag_numeric = es.eigenvalues().imag().maxCoeff();

  if (std::abs(s.lambda_real - s.lambda_real_numeric) > tolerances::analytic_identity ||
      std::abs(s.lambda_imag - s.lambda_imag_numeric) > tolerances::analytic_identity)
    throw std::runtime_error("saddle spectrum: closed form and numeric eigensolve disagree");
  return s;
}

double bottleneck_width(const Pes& pes, double h0) {
  if (!(h0 > 0.0))
    throw std::domain_error("bottleneck width requires energy above the origin saddle (h0 > 0)");
  const double alpha = pes.coef.a * pes.spec.vri_x;  // y^2 coefficient of V(0, y)
  const double beta = pes.coef.b;                    // y^4 coefficient
  const double disc = alpha * alpha + 4.0 * beta * h0;
  if (!(disc >= 0.0) || !(alpha + std::sqrt(disc) > 0.0))
    throw std::domain_error("bottleneck width: channel is not closed at this energy");
  const double y_sq = 2.0 * h0 / (alpha + std::sqrt(disc));
  return 2.0 * std::sqrt(y_sq);
}

}  // namespace vrisim
