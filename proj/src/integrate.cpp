#include "vrisim/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace vrisim {

void IntegratorConfig::validate() const {
  auto fail = [](const char* what) {
    throw std::invalid_argument(std::string("IntegratorConfig: ") + what);
  };
  if (method == Method::AdaptiveRk45) {
    if (!(rel_tol > 0.0)) fail("rel_tol must be > 0");
    if (!(abs_tol > 0.0)) fail("abs_tol must be > 0");
  } else {
    if (!(step_size > 0.0)) fail("step_size must be > 0");
  }
  if (!(t_max > 0.0)) fail("t_max must be > 0");
  if (!(capture_radius > 0.0)) fail("capture_radius must be > 0");
  if (!(sample_interval >= 0.0)) fail("sample_interval must be >= 0");
}

const char* fate_name(Fate f) {
  switch (f) {
    case Fate::TopWell: return "TOP";
    case Fate::BottomWell: return "BOTTOM";
    case Fate::Recross: return "RECROSS";
    case Fate::Timeout: return "TIMEOUT";
  }
  return "?";
}

IntegrationStalled::IntegrationStalled(const State& s)
    : std::runtime_error("integration stalled: step size underflow at t = " + std::to_string(s.t)),
      last_state(s) {}

namespace {

using Vec4 = std::array<double, 4>;

inline Vec4 deriv(const Vec4& u, const Pes& pes) {
  const Vec2 g = gradient(u[0], u[1], pes);
  return {u[2] / pes.spec.mass_x, u[3] / pes.spec.mass_y, -g.x, -g.y};
}

inline double energy_of(const Vec4& u, const Pes& pes) {
  return 0.5 * u[2] * u[2] / pes.spec.mass_x + 0.5 * u[3] * u[3] / pes.spec.mass_y +
         potential(u[0], u[1], pes);
}

// ---------------------------------------------------------------------------
// Dormand–Prince 5(4) pair with the classic quartic continuous extension.
// ---------------------------------------------------------------------------

constexpr double A21 = 1.0 / 5.0;
constexpr double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0;
constexpr double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0;
constexpr double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0,
                 A54 = -212.0 / 729.0;
constexpr double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0,
                 A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0;
constexpr double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0,
                 B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0;
constexpr double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0,
                 E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0;
constexpr double D1 = -12715105075.0 / 11282082432.0, D3 = 87487479700.0 / 32700410799.0,
                 D4 = -10690763975.0 / 1880347072.0, D5 = 701980252875.0 / 199316789632.0,
                 D6 = -1453857185.0 / 822651844.0, D7 = 69997945.0 / 29380423.0;

struct Rk45Work {
  Vec4 k1{}, k2{}, k3{}, k4{}, k5{}, k6{}, k7{}, u1{};
};

/// One step attempt from u with f(u) already in w.k1. Fills the remaining
/// stages and the 5th-order result, and returns the scaled error norm.
double dopri5_attempt(const Pes& pes, const Vec4& u, double h, double rtol, double atol,
                      Rk45Work& w) {
  Vec4 tmp;
  for (int i = 0; i < 4; ++i) tmp[i] = u[i] + h * (A21 * w.k1[i]);
  w.k2 = deriv(tmp, pes);
  for (int i = 0; i < 4; ++i) tmp[i] = u[i] + h * (A31 * w.k1[i] + A32 * w.k2[i]);
  w.k3 = deriv(tmp, pes);
  for (int i = 0; i < 4; ++i) tmp[i] = u[i] + h * (A41 * w.k1[i] + A42 * w.k2[i] + A43 * w.k3[i]);
  w.k4 = deriv(tmp, pes);
  for (int i = 0; i < 4; ++i)
    tmp[i] = u[i] + h * (A51 * w.k1[i] + A52 * w.k2[i] + A53 * w.k3[i] + A54 * w.k4[i]);
  w.k5 = deriv(tmp, pes);
  for (int i = 0; i < 4; ++i)
    tmp[i] = u[i] + h * (A61 * w.k1[i] + A62 * w.k2[i] + A63 * w.k3[i] + A64 * w.k4[i] +
                         A65 * w.k5[i]);
  w.k6 = deriv(tmp, pes);
  for (int i = 0; i < 4; ++i)
    w.u1[i] = u[i] + h * (B1 * w.k1[i] + B3 * w.k3[i] + B4 * w.k4[i] + B5 * w.k5[i] +
                          B6 * w.k6[i]);
  w.k7 = deriv(w.u1, pes);

  double err = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double sc = atol + rtol * std::max(std::abs(u[i]), std::abs(w.u1[i]));
    const double e =
        h * (E1 * w.k1[i] + E3 * w.k3[i] + E4 * w.k4[i] + E5 * w.k5[i] + E6 * w.k6[i] +
             E7 * w.k7[i]) /
        sc;
    err += e * e;
  }
  return std::sqrt(0.25 * err);
}

/// Quartic interpolant over one accepted step; at(0) reproduces the step's
/// initial state bitwise.
struct StepDense {
  Vec4 r1{}, r2{}, r3{}, r4{}, r5{};

  Vec4 at(double th) const {
    const double th1 = 1.0 - th;
    Vec4 out;
    for (int i = 0; i < 4; ++i)
      out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
    return out;
  }
};

StepDense make_dense(const Vec4& u, const Rk45Work& w, double h) {
  StepDense d;
  for (int i = 0; i < 4; ++i) {
    const double ydiff = w.u1[i] - u[i];
    const double bspl = h * w.k1[i] - ydiff;
    d.r1[i] = u[i];
    d.r2[i] = ydiff;
    d.r3[i] = bspl;
    d.r4[i] = ydiff - h * w.k7[i] - bspl;
    d.r5[i] = h * (D1 * w.k1[i] + D3 * w.k3[i] + D4 * w.k4[i] + D5 * w.k5[i] + D6 * w.k6[i] +
                   D7 * w.k7[i]);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Event machinery shared by both methods.
// ---------------------------------------------------------------------------

constexpr double kEntryMin = 1e-3;  // recross arming threshold in x

struct Events {
  double well_x, well_y, rr;

  double top(const Vec4& u) const {
    const double dx = u[0] - well_x;
    const double dy = u[1] - well_y;
    return dx * dx + dy * dy - rr;
  }
  double bottom(const Vec4& u) const {
    const double dx = u[0] - well_x;
    const double dy = u[1] + well_y;
    return dx * dx + dy * dy - rr;
  }
};

struct Crossing {
  int event;  // 0 top, 1 bottom, 2 recross (also the tie-break priority)
  double frac;
  Vec4 u;
};

/// Bisection on a continuous map frac -> state; precondition g(at(a)) > 0 and
/// g(at(b)) <= 0. Runs the bracket down to double-precision exhaustion, so the
/// surface residual at the returned state is far below the 1e-10 contract.
template <class AtFn, class GFn>
Crossing refine_crossing(const AtFn& at, double a, double b, const GFn& g, int event) {
  Vec4 ub = at(b);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (!(mid > a && mid < b)) break;
    const Vec4 um = at(mid);
    if (g(um) > 0.0) {
      a = mid;
    } else {
      b = mid;
      ub = um;
    }
  }
  return {event, b, ub};
}

inline Fate fate_of_event(int event) {
  return event == 0 ? Fate::TopWell : event == 1 ? Fate::BottomWell : Fate::Recross;
}

}  // namespace

double hamiltonian(const State& s, const Pes& pes) {
  return energy_of({s.x, s.y, s.px, s.py}, pes);
}

std::array<double, 4> vector_field(const State& s, const Pes& pes) {
  return deriv({s.x, s.y, s.px, s.py}, pes);
}

namespace {

TrajectoryResult integrate_rk45(const State& s0, const Pes& pes, const IntegratorConfig& cfg) {
  const Events ev{pes.spec.well_x, pes.spec.well_y, cfg.capture_radius * cfg.capture_radius};
  const double radius = cfg.capture_radius;

  Vec4 u{s0.x, s0.y, s0.px, s0.py};
  double t = s0.t;
  const double t_end = s0.t + cfg.t_max;
  const double e0 = energy_of(u, pes);

  TrajectoryResult res;
  const bool sampling = cfg.sample_interval > 0.0;
  long sample_k = 1;
  if (sampling) res.path.push_back(s0);

  auto finish = [&](Fate f, const Vec4& ue, double te) {
    res.fate = f;
    res.exit_state = {ue[0], ue[1], ue[2], ue[3], te};
    res.elapsed = te - s0.t;
    res.energy_drift = std::max(res.energy_drift, std::abs(energy_of(ue, pes) - e0));
    if (sampling) {
      if (!res.path.empty() && res.path.back().t == te) res.path.pop_back();
      res.path.push_back(res.exit_state);
    }
    return res;
  };

  bool armed = u[0] >= kEntryMin;

  // Upper bound on configuration-space speed on this energy shell, used to
  // skip event interpolation on steps that cannot reach any surface.
  const double vmax =
      1.3 * std::sqrt(std::max(2.0 * (e0 - pes.spec.well_energy), 0.0) /
                      std::min(pes.spec.mass_x, pes.spec.mass_y)) +
      1e-9;

  const double h_max = 0.25;
  double h = std::min(1e-3, std::min(h_max, cfg.t_max));
  Rk45Work w;
  w.k1 = deriv(u, pes);
  bool rejected_last = false;

  for (;;) {
    // A state already on the wrong side of a surface (initial condition
    // inside a circle, or an ulp-level seep past a crossing) is classified
    // right away.
    if (ev.top(u) <= 0.0) return finish(Fate::TopWell, u, t);
    if (ev.bottom(u) <= 0.0) return finish(Fate::BottomWell, u, t);
    if (armed && u[0] <= 0.0 && u[2] < 0.0) return finish(Fate::Recross, u, t);

    bool last = false;
    if (t + h >= t_end) {
      h = t_end - t;
      last = true;
    }
    if (!(h > 1e-13 * std::max(1.0, std::abs(t))))
      throw IntegrationStalled({u[0], u[1], u[2], u[3], t});

    const double err = dopri5_attempt(pes, u, h, cfg.rel_tol, cfg.abs_tol, w);
    if (!(err <= 1.0)) {
      double fac = std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0) : 0.2;
      h *= fac;
      rejected_last = true;
      continue;
    }
    const double t1 = last ? t_end : t + h;

    // --- event detection over the accepted step ---
    const double reach = vmax * h;
    const double gt0 = ev.top(u), gt1 = ev.top(w.u1);
    const double gb0 = ev.bottom(u), gb1 = ev.bottom(w.u1);
    const double capture_reach = (radius + reach) * (radius + reach);
    const bool want_top = std::min(gt0, gt1) + ev.rr <= capture_reach;
    const bool want_bot = std::min(gb0, gb1) + ev.rr <= capture_reach;
    const bool want_rec = armed && (u[0] <= reach || w.u1[0] <= reach);

    StepDense dense;
    bool have_dense = false;
    if (want_top || want_bot || want_rec) {
      dense = make_dense(u, w, h);
      have_dense = true;
      auto at = [&](double th) { return dense.at(th); };

      constexpr double thetas[5] = {0.2, 0.4, 0.6, 0.8, 1.0};
      double th_prev = 0.0;
      double gtp = gt0, gbp = gb0, xp = u[0];
      for (int si = 0; si < 5; ++si) {
        const double th = thetas[si];
        const Vec4 uc = dense.at(th);
        const double gtc = ev.top(uc);
        const double gbc = ev.bottom(uc);

        std::optional<Crossing> hit;
        auto consider = [&](const Crossing& c) {
          if (!hit || c.frac < hit->frac) hit = c;
        };
        if (want_top && gtp > 0.0 && gtc <= 0.0)
          consider(refine_crossing(at, th_prev, th, [&](const Vec4& v) { return ev.top(v); }, 0));
        if (want_bot && gbp > 0.0 && gbc <= 0.0)
          consider(
              refine_crossing(at, th_prev, th, [&](const Vec4& v) { return ev.bottom(v); }, 1));
        if (want_rec && xp > 0.0 && uc[0] <= 0.0) {
          const Crossing c =
              refine_crossing(at, th_prev, th, [](const Vec4& v) { return v[0]; }, 2);
          if (c.u[2] < 0.0) consider(c);  // descending crossing only
        }
        if (hit) {
          const double te = t + hit->frac * h;
          if (sampling) {
            long k = sample_k;
            while (s0.t + static_cast<double>(k) * cfg.sample_interval <= te) {
              const double ts = s0.t + static_cast<double>(k) * cfg.sample_interval;
              const Vec4 us = dense.at(std::clamp((ts - t) / h, 0.0, 1.0));
              res.path.push_back({us[0], us[1], us[2], us[3], ts});
              ++k;
            }
          }
          return finish(fate_of_event(hit->event), hit->u, te);
        }
        th_prev = th;
        gtp = gtc;
        gbp = gbc;
        xp = uc[0];
      }
    }

    // --- step accepted without an event ---
    res.energy_drift = std::max(res.energy_drift, std::abs(energy_of(w.u1, pes) - e0));
    if (sampling) {
      while (s0.t + static_cast<double>(sample_k) * cfg.sample_interval <= t1) {
        if (!have_dense) {
          dense = make_dense(u, w, h);
          have_dense = true;
        }
        const double ts = s0.t + static_cast<double>(sample_k) * cfg.sample_interval;
        const Vec4 us = dense.at(std::clamp((ts - t) / h, 0.0, 1.0));
        res.path.push_back({us[0], us[1], us[2], us[3], ts});
        ++sample_k;
      }
    }
    if (last) return finish(Fate::Timeout, w.u1, t_end);

    t = t1;
    u = w.u1;
    w.k1 = w.k7;
    armed = armed || u[0] >= kEntryMin;
    double fac = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2);
    fac = std::clamp(fac, 0.2, rejected_last ? 1.0 : 5.0);
    rejected_last = false;
    h = std::min(h * fac, h_max);
  }
}

// ---------------------------------------------------------------------------
// Fixed-step 4th-order symplectic splitting (Yoshida composition of
// kick-drift-kick leapfrog substeps), the conservation cross-check.
// ---------------------------------------------------------------------------

inline void leapfrog(Vec4& u, double dt, const Pes& pes) {
  Vec2 g = gradient(u[0], u[1], pes);
  u[2] -= 0.5 * dt * g.x;
  u[3] -= 0.5 * dt * g.y;
  u[0] += dt * u[2] / pes.spec.mass_x;
  u[1] += dt * u[3] / pes.spec.mass_y;
  g = gradient(u[0], u[1], pes);
  u[2] -= 0.5 * dt * g.x;
  u[3] -= 0.5 * dt * g.y;
}

inline void sym4_step(Vec4& u, double dt, const Pes& pes) {
  static const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
  static const double w0 = 1.0 - 2.0 * w1;
  leapfrog(u, w1 * dt, pes);
  leapfrog(u, w0 * dt, pes);
  leapfrog(u, w1 * dt, pes);
}

TrajectoryResult integrate_sym4(const State& s0, const Pes& pes, const IntegratorConfig& cfg) {
  const Events ev{pes.spec.well_x, pes.spec.well_y, cfg.capture_radius * cfg.capture_radius};

  Vec4 u{s0.x, s0.y, s0.px, s0.py};
  double t = s0.t;
  const double t_end = s0.t + cfg.t_max;
  const double e0 = energy_of(u, pes);

  TrajectoryResult res;
  const bool sampling = cfg.sample_interval > 0.0;
  long sample_k = 1;
  if (sampling) res.path.push_back(s0);

  auto finish = [&](Fate f, const Vec4& ue, double te) {
    res.fate = f;
    res.exit_state = {ue[0], ue[1], ue[2], ue[3], te};
    res.elapsed = te - s0.t;
    res.energy_drift = std::max(res.energy_drift, std::abs(energy_of(ue, pes) - e0));
    if (sampling) {
      if (!res.path.empty() && res.path.back().t == te) res.path.pop_back();
      res.path.push_back(res.exit_state);
    }
    return res;
  };

  bool armed = u[0] >= kEntryMin;

  for (;;) {
    if (ev.top(u) <= 0.0) return finish(Fate::TopWell, u, t);
    if (ev.bottom(u) <= 0.0) return finish(Fate::BottomWell, u, t);
    if (armed && u[0] <= 0.0 && u[2] < 0.0) return finish(Fate::Recross, u, t);

    const bool last = t + cfg.step_size >= t_end;
    const double h = last ? t_end - t : cfg.step_size;
    const double t1 = last ? t_end : t + h;

    const Vec4 u_pre = u;
    Vec4 u_post = u;
    if (h > 0.0) sym4_step(u_post, h, pes);

    // partial-step map from the pre-step state, used for event refinement and
    // path sampling; at(h) reproduces u_post bitwise
    auto at = [&](double tau) {
      Vec4 v = u_pre;
      if (tau > 0.0) sym4_step(v, tau, pes);
      return v;
    };

    std::optional<Crossing> hit;
    auto consider = [&](const Crossing& c) {
      if (!hit || c.frac < hit->frac) hit = c;
    };
    if (ev.top(u_pre) > 0.0 && ev.top(u_post) <= 0.0)
      consider(refine_crossing(at, 0.0, h, [&](const Vec4& v) { return ev.top(v); }, 0));
    if (ev.bottom(u_pre) > 0.0 && ev.bottom(u_post) <= 0.0)
      consider(refine_crossing(at, 0.0, h, [&](const Vec4& v) { return ev.bottom(v); }, 1));
    if (armed && u_pre[0] > 0.0 && u_post[0] <= 0.0) {
      const Crossing c = refine_crossing(at, 0.0, h, [](const Vec4& v) { return v[0]; }, 2);
      if (c.u[2] < 0.0) consider(c);
    }

    const double t_limit = hit ? t + hit->frac : t1;
    if (sampling) {
      while (s0.t + static_cast<double>(sample_k) * cfg.sample_interval <= t_limit) {
        const double ts = s0.t + static_cast<double>(sample_k) * cfg.sample_interval;
        const Vec4 us = at(std::clamp(ts - t, 0.0, h));
        res.path.push_back({us[0], us[1], us[2], us[3], ts});
        ++sample_k;
      }
    }
    if (hit) return finish(fate_of_event(hit->event), hit->u, t + hit->frac);

    res.energy_drift = std::max(res.energy_drift, std::abs(energy_of(u_post, pes) - e0));
    if (last) return finish(Fate::Timeout, u_post, t_end);
    t = t1;
    u = u_post;
    armed = armed || u[0] >= kEntryMin;
  }
}

}  // namespace

TrajectoryResult integrate(const State& s0, const Pes& pes, const IntegratorConfig& cfg) {
  cfg.validate();
  return cfg.method == Method::AdaptiveRk45 ? integrate_rk45(s0, pes, cfg)
                                            : integrate_sym4(s0, pes, cfg);
}

State integrate_for(const State& s0, const Pes& pes, const IntegratorConfig& cfg, double duration,
                    double* max_drift) {
  cfg.validate();
  if (duration < 0.0) throw std::invalid_argument("integrate_for: duration must be >= 0");
  if (max_drift) *max_drift = 0.0;
  if (duration == 0.0) return s0;

  Vec4 u{s0.x, s0.y, s0.px, s0.py};
  double t = s0.t;
  const double t_end = s0.t + duration;
  const double e0 = energy_of(u, pes);
  double drift = 0.0;

  if (cfg.method == Method::AdaptiveRk45) {
    const double h_max = 0.25;
    double h = std::min(1e-3, std::min(h_max, duration));
    Rk45Work w;
    w.k1 = deriv(u, pes);
    bool rejected_last = false;
    for (;;) {
      bool last = false;
      if (t + h >= t_end) {
        h = t_end - t;
        last = true;
      }
      if (!(h > 1e-13 * std::max(1.0, std::abs(t))))
        throw IntegrationStalled({u[0], u[1], u[2], u[3], t});
      const double err = dopri5_attempt(pes, u, h, cfg.rel_tol, cfg.abs_tol, w);
      if (!(err <= 1.0)) {
        h *= std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0) : 0.2;
        rejected_last = true;
        continue;
      }
      drift = std::max(drift, std::abs(energy_of(w.u1, pes) - e0));
      u = w.u1;
      if (last) break;
      t += h;
      w.k1 = w.k7;
      double fac = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2);
      fac = std::clamp(fac, 0.2, rejected_last ? 1.0 : 5.0);
      rejected_last = false;
      h = std::min(h * fac, h_max);
    }
  } else {
    for (;;) {
      const bool last = t + cfg.step_size >= t_end;
      const double h = last ? t_end - t : cfg.step_size;
      if (h > 0.0) sym4_step(u, h, pes);
      drift = std::max(drift, std::abs(energy_of(u, pes) - e0));
      if (last) break;
      t += h;
    }
  }
  if (max_drift) *max_drift = drift;
  return {u[0], u[1], u[2], u[3], t_end};
}

}  // namespace vrisim
