#pragma once

#include "vrisim/pes.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace vrisim {

/// A phase-space point with its time stamp.
struct State {
  double x = 0.0;
  double y = 0.0;
  double px = 0.0;
  double py = 0.0;
  double t = 0.0;

  friend bool operator==(const State&, const State&) = default;
};

enum class Method { AdaptiveRk45, FixedSymplectic4 };

struct IntegratorConfig {
  Method method = Method::AdaptiveRk45;
  double rel_tol = 1e-12;        // adaptive mode
  double abs_tol = 1e-12;        // adaptive mode
  double step_size = 0.005;      // fixed-step mode
  double t_max = 200.0;          // timeout horizon (duration from the initial time)
  double capture_radius = 0.2;   // well capture circles at (well_x, +-well_y)
  double sample_interval = 0.0;  // path sampling spacing; 0 disables sampling

  void validate() const;

  friend bool operator==(const IntegratorConfig&, const IntegratorConfig&) = default;
};

enum class Fate { TopWell, BottomWell, Recross, Timeout };

/// Fixed labels used in every CSV: TOP, BOTTOM, RECROSS, TIMEOUT.
const char* fate_name(Fate f);

struct TrajectoryResult {
  Fate fate = Fate::Timeout;
  State exit_state;            // localized on the triggering event surface
  double elapsed = 0.0;        // exit_state.t - initial t
  double energy_drift = 0.0;   // max |H(t) - H(0)| over accepted steps
  std::vector<State> path;     // sampled every sample_interval, exit state appended
};

/// Raised when the adaptive controller cannot make progress.
struct IntegrationStalled : std::runtime_error {
  explicit IntegrationStalled(const State& s);
  State last_state;
};

double hamiltonian(const State& s, const Pes& pes);

/// Right-hand side of the equations of motion (dx, dy, dpx, dpy)/dt. The
/// momentum components are exactly the negated gradient (same code path).
std::array<double, 4> vector_field(const State& s, const Pes& pes);

/// Integrates until the first of: capture by the circle of capture_radius
/// around the upper well (TopWell) or lower well (BottomWell); a crossing of
/// x = 0 with px < 0 after the trajectory has first reached x >= 1e-3
/// (Recross); or the timeout horizon (Timeout). Event states are refined by
/// bisection on the continuous step interpolant to surface residual well
/// below 1e-10.
TrajectoryResult integrate(const State& s0, const Pes& pes, const IntegratorConfig& cfg);

/// Integrates for a fixed duration with event detection disabled. Optionally
/// reports the max energy drift seen over the run.
State integrate_for(const State& s0, const Pes& pes, const IntegratorConfig& cfg,
                    double duration, double* max_drift = nullptr);

inline double energy_drift(const TrajectoryResult& r) { return r.energy_drift; }

}  // namespace vrisim
