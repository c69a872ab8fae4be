#pragma once

#include <limits>
#include <vector>

#include "magidyn/ode.hpp"
#include "magidyn/types.hpp"

namespace magidyn {

struct IntegratorOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  // Upper bound on any internal step. Infinity means no bound.
  double max_step = std::numeric_limits<double>::infinity();
  // Hard cap on attempted steps, a guard against runaway trajectories.
  long max_attempts = 50'000'000;
};

// Tolerances used for warm-start extension in sequential prediction.
inline IntegratorOptions warm_start_tolerances() {
  IntegratorOptions o;
  o.abs_tol = 1e-8;
  o.rel_tol = 1e-8;
  return o;
}

// Dormand-Prince 5(4) with per-step error control. x0 is the state at
// t_grid[0]; every output time is hit exactly (steps are clipped to it).
// Throws InvalidGrid for an unsorted grid, InvalidArgument for bad
// tolerances and StepSizeUnderflow when the controller fails.
Trajectory integrate(const OdeSystem& system, const Vector& x0, const Vector& theta,
                     const std::vector<double>& t_grid,
                     const IntegratorOptions& options = {});

}  // namespace magidyn
