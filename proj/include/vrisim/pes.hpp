#pragma once

#include <array>
#include <vector>

namespace vrisim {

/// Tolerances used by the analytic verification routines, collected in one
/// place. They sit well above double-precision noise and well below the O(1)
/// physical scales of the model.
namespace tolerances {
inline constexpr double coefficient_residual = 1e-12;  // well-condition residuals
inline constexpr double analytic_identity = 1e-10;     // closed form vs numeric route
inline constexpr double finite_difference = 1e-6;      // derivative cross-checks (relative)
}  // namespace tolerances

/// Design parameters of the two-saddle, two-well potential. The defaults are
/// the reference configuration used throughout: a barrier of height 0.5 at
/// the origin saddle, a lower saddle at (1, 0), and two symmetric wells at
/// (1.25, +-1) with energy -1.
struct PesSpec {
  double barrier_height = 0.5;  // energy of the origin saddle above V = 0
  double saddle_x = 1.0;        // x-coordinate of the lower saddle
  double vri_x = 0.3265;        // x-coordinate of the valley-ridge inflection point
  double well_x = 1.25;         // wells sit at (well_x, +-well_y)
  double well_y = 1.0;
  double well_energy = -1.0;
  double mass_x = 1.0;
  double mass_y = 1.0;

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;

  friend bool operator==(const PesSpec&, const PesSpec&) = default;
};

/// Free coefficients of the potential, fixed by requiring a critical point of
/// energy well_energy at (well_x, well_y): `a` multiplies y^2 (vri_x - x),
/// `b` multiplies y^4, `c` multiplies x y^4.
struct Coefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// A spec together with its solved coefficients; the unit every evaluation
/// routine takes. Build with make_pes().
struct Pes {
  PesSpec spec;
  Coefficients coef;
  double quartic = 0.0;  // barrier_height / saddle_x^4, cached for the hot path
};

/// Fixes (a, b, c) from the 3x3 linear system imposing V(well_x, well_y) =
/// well_energy and a vanishing gradient there; the mirror well follows by
/// symmetry. Elimination with partial pivoting. Throws std::runtime_error
/// ("coefficient system singular") on a degenerate spec.
Coefficients solve_coefficients(const PesSpec& spec);

/// Validates the spec, solves the coefficients and caches the quartic scale.
Pes make_pes(const PesSpec& spec);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Symmetric 2x2 matrix of second derivatives.
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
};

// The evaluation routines are the innermost loop of every experiment and are
// kept inline. y enters only through y^2 and y^2*y, so V and the x-derivative
// are bitwise even in y and the y-derivative is bitwise odd; the trajectory
// mirror symmetry of the whole toolkit rests on this.

inline double potential(double x, double y, const Pes& pes) {
  const double x2 = x * x;
  const double y2 = y * y;
  const double y4 = y2 * y2;
  const double sx2 = pes.spec.saddle_x * pes.spec.saddle_x;
  return pes.quartic * x2 * (x2 - 2.0 * sx2) + pes.coef.a * y2 * (pes.spec.vri_x - x) +
         y4 * (pes.coef.b + pes.coef.c * x);
}

inline Vec2 gradient(double x, double y, const Pes& pes) {
  const double y2 = y * y;
  const double y4 = y2 * y2;
  const double sx2 = pes.spec.saddle_x * pes.spec.saddle_x;
  const double gx =
      pes.quartic * (4.0 * x * x * x - 4.0 * sx2 * x) - pes.coef.a * y2 + pes.coef.c * y4;
  const double gy = 2.0 * pes.coef.a * y * (pes.spec.vri_x - x) +
                    4.0 * (y2 * y) * (pes.coef.b + pes.coef.c * x);
  return {gx, gy};
}

inline Sym2 hessian(double x, double y, const Pes& pes) {
  const double y2 = y * y;
  const double sx2 = pes.spec.saddle_x * pes.spec.saddle_x;
  return {pes.quartic * (12.0 * x * x - 4.0 * sx2),
          -2.0 * pes.coef.a * y + 4.0 * pes.coef.c * (y2 * y),
          2.0 * pes.coef.a * (pes.spec.vri_x - x) + 12.0 * y2 * (pes.coef.b + pes.coef.c * x)};
}

/// The two scalar conditions that vanish simultaneously exactly at a
/// valley-ridge inflection point: the determinant of the Hessian, and the
/// gradient contracted with the adjugate of the Hessian.
struct VriResiduals {
  double det = 0.0;
  double adjugate = 0.0;
};

inline VriResiduals vri_residuals(double x, double y, const Pes& pes) {
  const Sym2 h = hessian(x, y, pes);
  const Vec2 g = gradient(x, y, pes);
  const double det = h.xx * h.yy - h.xy * h.xy;
  const double adj = g.x * g.x * h.yy - 2.0 * g.x * g.y * h.xy + g.y * g.y * h.xx;
  return {det, adj};
}

enum class CriticalKind { Minimum, Index1Saddle };

struct CriticalPoint {
  Vec2 position;
  double energy = 0.0;
  CriticalKind kind = CriticalKind::Minimum;
  std::array<double, 2> hessian_eigenvalues{};  // ascending
};

/// The four critical points of the reference topography, refined by Newton
/// iteration from their analytic seeds and classified by Hessian eigenvalues:
/// origin saddle, lower saddle, upper well, lower well (in that order).
/// Throws std::runtime_error naming the seed on non-convergence.
std::vector<CriticalPoint> critical_points(const Pes& pes);

/// Locates the valley-ridge inflection point on the saddle-to-saddle axis by
/// scanning det(Hess) along y = 0 for sign changes, bisecting each bracket
/// and keeping the root where the adjugate condition also vanishes (the
/// determinant has a second, non-VRI zero where V_xx crosses zero). Throws
/// std::runtime_error("VRI not bracketed") when no root qualifies.
Vec2 locate_vri(const Pes& pes);

/// Linearization spectrum at the origin saddle: a real pair +-lambda_real and
/// an imaginary pair +-i lambda_imag. Both the closed form and a numeric
/// eigensolve of the 4x4 Jacobian of the equations of motion are returned;
/// the constructor verifies they agree to tolerances::analytic_identity.
struct SaddleSpectrum {
  double lambda_real = 0.0;
  double lambda_imag = 0.0;
  double lambda_real_numeric = 0.0;
  double lambda_imag_numeric = 0.0;
};

SaddleSpectrum saddle_eigenvalues(const Pes& pes);

/// Configuration-space width of the energetically open channel across the
/// origin saddle at energy h0 > 0: twice the smallest positive root of
/// V(0, y) = h0. Uses the cancellation-free quadratic root in y^2, which also
/// selects the bottleneck edge (not the outer re-opening of the channel) when
/// the y^4 coefficient is negative. Throws std::domain_error for h0 <= 0 or
/// when the channel is not closed at this energy.
double bottleneck_width(const Pes& pes, double h0);

}  // namespace vrisim
