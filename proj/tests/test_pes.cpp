#include "vrisim/pes.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace vrisim;

namespace {

// ---------------------------------------------------------------------------
// Test-side oracles, independent of the production code paths they check.
// ---------------------------------------------------------------------------

/// Cramer's-rule solve of the well-condition system.
Coefficients cramer_solve(const PesSpec& s) {
  const double yw = s.well_y, yw2 = yw * yw, yw3 = yw2 * yw, yw4 = yw2 * yw2;
  const double xw = s.well_x;
  const double sx2 = s.saddle_x * s.saddle_x;
  const double q = s.barrier_height / (sx2 * sx2);
  const double g = q * xw * xw * (xw * xw - 2.0 * sx2);
  const double gp = 4.0 * q * xw * (xw * xw - sx2);

  const double m[3][3] = {{yw2 * (s.vri_x - xw), yw4, xw * yw4},
                          {-yw2, 0.0, yw4},
                          {2.0 * yw * (s.vri_x - xw), 4.0 * yw3, 4.0 * xw * yw3}};
  const double r[3] = {s.well_energy - g, -gp, 0.0};

  auto det3 = [](const double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det3(m);
  REQUIRE(std::abs(d) > 1e-12);
  double sol[3];
  for (int c = 0; c < 3; ++c) {
    double mc[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) mc[i][j] = j == c ? r[i] : m[i][j];
    sol[c] = det3(mc) / d;
  }
  return {sol[0], sol[1], sol[2]};
}

/// Central finite differences of the potential.
Vec2 fd_gradient(double x, double y, const Pes& pes, double step = 1e-5) {
  return {(potential(x + step, y, pes) - potential(x - step, y, pes)) / (2.0 * step),
          (potential(x, y + step, pes) - potential(x, y - step, pes)) / (2.0 * step)};
}

/// Central finite differences of the gradient.
Sym2 fd_hessian(double x, double y, const Pes& pes, double step = 1e-5) {
  const Vec2 gxp = gradient(x + step, y, pes), gxm = gradient(x - step, y, pes);
  const Vec2 gyp = gradient(x, y + step, pes), gym = gradient(x, y - step, pes);
  return {(gxp.x - gxm.x) / (2.0 * step),
          0.5 * ((gxp.y - gxm.y) / (2.0 * step) + (gyp.x - gym.x) / (2.0 * step)),
          (gyp.y - gym.y) / (2.0 * step)};
}

/// Bisection for the smallest positive root of V(0, y) = h0. For a negative
/// quartic coefficient the barrier V(0, y) peaks at a finite y, so the
/// bracket end is placed at the peak; otherwise the bracket grows until it
/// straddles the root.
double channel_halfwidth_by_bisection(const Pes& pes, double h0) {
  const double alpha = pes.coef.a * pes.spec.vri_x;
  const double beta = pes.coef.b;
  auto f = [&](double y) { return potential(0.0, y, pes) - h0; };
  double hi;
  if (beta < 0.0) {
    hi = std::sqrt(-alpha / (2.0 * beta));  // barrier maximum along x = 0
    REQUIRE(f(hi) > 0.0);
  } else {
    hi = 1.0;
    while (f(hi) < 0.0) hi *= 2.0;
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double grad_norm(const Pes& pes, double x, double y) {
  const Vec2 g = gradient(x, y, pes);
  return std::hypot(g.x, g.y);
}

Pes default_pes(double xi = 0.3265) {
  PesSpec s;
  s.vri_x = xi;
  return make_pes(s);
}

}  // namespace

TEST_CASE("coefficient solve reproduces the reference values") {
  const Pes pes = default_pes();
  CHECK(pes.coef.a == doctest::Approx(1.4254534380075796).epsilon(1e-12));
  CHECK(pes.coef.b == doctest::Approx(0.634198827490525).epsilon(1e-12));
  CHECK(pes.coef.c == doctest::Approx(0.019203438007579884).epsilon(1e-9));

  const Coefficients oracle = cramer_solve(pes.spec);
  CHECK(std::abs(pes.coef.a - oracle.a) < 1e-12);
  CHECK(std::abs(pes.coef.b - oracle.b) < 1e-12);
  CHECK(std::abs(pes.coef.c - oracle.c) < 1e-12);

  CHECK(pes.coef.a > 0.0);
  CHECK(pes.coef.b > 0.0);
}

TEST_CASE("coefficient regression fixtures at xi = 0.1 and xi = 0.5") {
  const Pes p1 = default_pes(0.1);
  CHECK(p1.coef.a == doctest::Approx(1.144701086956522).epsilon(1e-12));
  CHECK(p1.coef.b == doctest::Approx(0.9851392663043478).epsilon(1e-12));
  CHECK(p1.coef.c == doctest::Approx(-0.26154891304347816).epsilon(1e-12));

  const Pes p5 = default_pes(0.5);
  CHECK(p5.coef.a == doctest::Approx(1.7552083333333333).epsilon(1e-12));
  CHECK(p5.coef.b == doctest::Approx(0.2220052083333334).epsilon(1e-12));
  CHECK(p5.coef.c == doctest::Approx(0.3489583333333333).epsilon(1e-12));
}

TEST_CASE("well conditions hold at both wells after the solve") {
  for (double xi : {0.1, 0.3265, 0.5}) {
    const Pes pes = default_pes(xi);
    const double xw = pes.spec.well_x, yw = pes.spec.well_y;
    CHECK(std::abs(potential(xw, yw, pes) - pes.spec.well_energy) <=
          tolerances::coefficient_residual);
    CHECK(grad_norm(pes, xw, yw) <= tolerances::coefficient_residual);
    // the mirror well follows from the y -> -y symmetry
    CHECK(potential(xw, -yw, pes) == potential(xw, yw, pes));
    CHECK(grad_norm(pes, xw, -yw) == grad_norm(pes, xw, yw));
  }
}

TEST_CASE("degenerate spec raises the singular-system error") {
  PesSpec s;
  s.well_y = 0.0;  // bypasses validate() on purpose; solve must still refuse
  CHECK_THROWS_WITH_AS(solve_coefficients(s), "coefficient system singular", std::runtime_error);
  CHECK_THROWS_AS(make_pes(s), std::invalid_argument);
}

TEST_CASE("spec validation names the violated constraint") {
  PesSpec s;
  s.vri_x = 1.5;
  CHECK_THROWS_WITH_AS(s.validate(), "PesSpec: vri_x must lie strictly between 0 and saddle_x",
                       std::invalid_argument);
}

TEST_CASE("potential values at the marked points") {
  const Pes pes = default_pes();
  CHECK(potential(0.0, 0.0, pes) == 0.0);
  CHECK(potential(1.0, 0.0, pes) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(potential(1.25, 1.0, pes) == doctest::Approx(-1.0).epsilon(1e-13));
}

TEST_CASE("potential is bitwise even in y") {
  const Pes pes = default_pes();
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> ux(-1.0, 2.0), uy(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = ux(rng), y = uy(rng);
    CHECK(potential(x, y, pes) == potential(x, -y, pes));
    const Vec2 gp = gradient(x, y, pes), gm = gradient(x, -y, pes);
    CHECK(gp.x == gm.x);
    CHECK(gp.y == -gm.y);
  }
}

TEST_CASE("gradient and hessian match finite differences") {
  const Pes pes = default_pes();
  CHECK(gradient(0.0, 0.0, pes).x == 0.0);
  CHECK(gradient(0.0, 0.0, pes).y == 0.0);
  CHECK(grad_norm(pes, 1.25, 1.0) <= 1e-12);

  std::mt19937 rng(987654);
  std::uniform_real_distribution<double> ux(-1.0, 2.0), uy(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = ux(rng), y = uy(rng);
    const Vec2 g = gradient(x, y, pes);
    const Vec2 fd = fd_gradient(x, y, pes);
    const double scale = std::max({1.0, std::abs(g.x), std::abs(g.y)});
    CHECK(std::abs(g.x - fd.x) / scale < tolerances::finite_difference);
    CHECK(std::abs(g.y - fd.y) / scale < tolerances::finite_difference);

    const Sym2 h = hessian(x, y, pes);
    const Sym2 fh = fd_hessian(x, y, pes);
    const double hscale = std::max({1.0, std::abs(h.xx), std::abs(h.xy), std::abs(h.yy)});
    CHECK(std::abs(h.xx - fh.xx) / hscale < tolerances::finite_difference);
    CHECK(std::abs(h.xy - fh.xy) / hscale < tolerances::finite_difference);
    CHECK(std::abs(h.yy - fh.yy) / hscale < tolerances::finite_difference);
  }
}

TEST_CASE("hessian at the origin and on the axis") {
  const Pes pes = default_pes();
  const Sym2 h = hessian(0.0, 0.0, pes);
  CHECK(h.xx == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(h.xy == 0.0);
  CHECK(h.yy == doctest::Approx(0.9308210850389495).epsilon(1e-12));
  for (double x : {-0.5, 0.3, 0.7, 1.6}) CHECK(hessian(x, 0.0, pes).xy == 0.0);
}

TEST_CASE("VRI residuals vanish at the VRI point and nowhere trivial") {
  const Pes pes = default_pes();
  const VriResiduals at_vri = vri_residuals(0.3265, 0.0, pes);
  CHECK(std::abs(at_vri.det) <= 1e-10);
  CHECK(std::abs(at_vri.adjugate) <= 1e-10);

  const VriResiduals at_origin = vri_residuals(0.0, 0.0, pes);
  CHECK(std::abs(at_origin.det) > 1.0);  // -2 * 2 a xi, a nondegenerate saddle

  // the determinant has a second zero on the axis where V_xx crosses zero,
  // but the adjugate condition rejects it
  const double x_vxx = pes.spec.saddle_x / std::sqrt(3.0);
  const VriResiduals at_vxx = vri_residuals(x_vxx, 0.0, pes);
  CHECK(std::abs(at_vxx.det) <= 1e-10);
  CHECK(std::abs(at_vxx.adjugate) > 1e-3);
}

TEST_CASE("determinant zero-curve extends off the axis") {
  // scan several horizontal lines; each must bracket at least one det sign
  // change inside the saddle-to-saddle region
  const Pes pes = default_pes();
  for (double y : {0.0, 0.1, 0.2, 0.3}) {
    int sign_changes = 0;
    double prev = vri_residuals(0.01, y, pes).det;
    for (int i = 1; i <= 200; ++i) {
      const double x = 0.01 + (0.99 - 0.01) * i / 200.0;
      const double cur = vri_residuals(x, y, pes).det;
      if ((prev < 0.0) != (cur < 0.0)) ++sign_changes;
      prev = cur;
    }
    CHECK(sign_changes >= 1);
  }
}

TEST_CASE("locate_vri recovers vri_x across the sweep grid") {
  for (int k = 1; k <= 28; ++k) {
    const double xi = 0.025 * k;
    const Pes pes = default_pes(xi);
    const Vec2 v = locate_vri(pes);
    CHECK(std::abs(v.x - xi) <= 1e-10);
    CHECK(v.y == 0.0);
    CHECK(std::abs(vri_residuals(v.x, v.y, pes).adjugate) <= 1e-10);
  }
}

TEST_CASE("locate_vri reports an unbracketed double root") {
  // when the VRI sits exactly on the V_xx zero the determinant touches zero
  // without a sign change
  const Pes pes = default_pes(1.0 / std::sqrt(3.0));
  CHECK_THROWS_WITH_AS(locate_vri(pes), "VRI not bracketed on (0, saddle_x)",
                       std::runtime_error);
}

TEST_CASE("critical points of the reference topography") {
  const Pes pes = default_pes();
  const auto points = critical_points(pes);
  REQUIRE(points.size() == 4);

  CHECK(points[0].kind == CriticalKind::Index1Saddle);
  CHECK(std::abs(points[0].position.x) <= 1e-12);
  CHECK(std::abs(points[0].energy) <= 1e-12);

  CHECK(points[1].kind == CriticalKind::Index1Saddle);
  CHECK(std::abs(points[1].position.x - 1.0) <= 1e-10);
  CHECK(std::abs(points[1].energy + 0.5) <= 1e-10);

  CHECK(points[2].kind == CriticalKind::Minimum);
  CHECK(std::abs(points[2].position.x - 1.25) <= 1e-10);
  CHECK(std::abs(points[2].position.y - 1.0) <= 1e-10);
  CHECK(std::abs(points[2].energy + 1.0) <= 1e-10);

  CHECK(points[3].kind == CriticalKind::Minimum);
  CHECK(points[3].position.y == -points[2].position.y);
  CHECK(points[3].energy == points[2].energy);

  for (const CriticalPoint& p : points)
    CHECK(grad_norm(pes, p.position.x, p.position.y) <= 1e-10);
}

TEST_CASE("saddle spectrum: closed form, numeric route and scaling") {
  const Pes pes = default_pes();
  const SaddleSpectrum s = saddle_eigenvalues(pes);
  CHECK(s.lambda_real == doctest::Approx(1.4142135623730951).epsilon(1e-14));
  CHECK(s.lambda_imag == doctest::Approx(0.9647907001101065).epsilon(1e-12));
  CHECK(std::abs(s.lambda_real - s.lambda_real_numeric) <= 1e-10);
  CHECK(std::abs(s.lambda_imag - s.lambda_imag_numeric) <= 1e-10);

  // with the y^2 coupling held fixed the transverse frequency scales as
  // sqrt(vri_x)
  Pes moved = pes;
  moved.spec.vri_x *= 4.0;
  const double li = std::sqrt(2.0 * moved.coef.a * moved.spec.vri_x / moved.spec.mass_y);
  CHECK(li == doctest::Approx(2.0 * s.lambda_imag).epsilon(1e-12));
}

TEST_CASE("bottleneck width: closed form vs bisection oracle") {
  const Pes pes = default_pes();
  CHECK(bottleneck_width(pes, 0.03) == doctest::Approx(0.4883285111442949).epsilon(1e-12));

  for (int k = 1; k <= 28; ++k) {
    const Pes p = default_pes(0.025 * k);
    for (double h0 : {0.005, 0.03, 0.1}) {
      const double w = bottleneck_width(p, h0);
      CHECK(std::abs(w - 2.0 * channel_halfwidth_by_bisection(p, h0)) <= 1e-10);
    }
  }
}

TEST_CASE("bottleneck width limits and monotonicity") {
  const Pes pes = default_pes();
  CHECK(bottleneck_width(pes, 1e-12) < 1e-5);
  double prev = 0.0;
  for (double h0 = 0.005; h0 <= 0.1 + 1e-12; h0 += 0.005) {
    const double w = bottleneck_width(pes, h0);
    CHECK(w > prev);
    prev = w;
  }
  CHECK_THROWS_AS(bottleneck_width(pes, 0.0), std::domain_error);
  CHECK_THROWS_AS(bottleneck_width(pes, -0.1), std::domain_error);
}
