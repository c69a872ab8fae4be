#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "magidyn/magi_posterior.hpp"
#include "magidyn/matern.hpp"
#include "magidyn/testbed.hpp"

namespace magidyn {

// How the sampler's mass matrix is chosen.
enum class Preconditioner {
  Identity,  // M = I
  Diagonal,  // M = diag of the Gauss-Newton Hessian at the start point
  Dense,     // M = Gauss-Newton Hessian at the start point
};

struct SolverSettings {
  long n_hmc = 16001;
  double burn_in_ratio = 0.5;
  int leapfrog_steps = 20;
  double initial_step_size = 0.1;
  double target_accept = 0.75;
  std::optional<ThetaPrior> prior;  // default: uniform on [0, 100] per parameter
  std::optional<std::vector<KernelHyper>> phi;  // exogenous, one per component
  std::optional<Vector> sigma;                  // exogenous noise sd per component
  std::optional<Matrix> x_init;                 // |tau_inf| x d warm start
  std::optional<Vector> theta_init;
  std::uint64_t seed = 0;
  // Move the start point to the posterior mode with damped Gauss-Newton
  // iterations before sampling.
  bool optimize_start = true;
  int max_optimizer_iterations = 200;
  Preconditioner preconditioner = Preconditioner::Dense;
};

struct PosteriorSamples {
  DiscretizedGrid grid;
  int d = 0;
  int p = 0;
  Matrix x_draws;      // kept x (|tau_inf| * d), component-major like flatten()
  Matrix theta_draws;  // kept x p
  Matrix sigma_draws;  // kept x d (constant columns when sigma is exogenous)
  Vector logp;         // log posterior of each kept draw
  std::vector<KernelHyper> phi;  // fitted or exogenous
  Vector sigma;        // noise sd the run started from (fitted or exogenous)
  bool sigma_sampled = false;
  Vector mu;           // centering means
  double accept_rate = 0.0;
  double burn_in_accept_rate = 0.0;
  double step_size = 0.0;
  long divergences = 0;
  long n_hmc = 0;
  std::vector<double> jitter_C, jitter_K;  // ladder rungs per component
  MagiState start;      // state the chain started from
  int optimizer_iterations = 0;

  long n_draws() const { return static_cast<long>(theta_draws.rows()); }
  Eigen::Index n_times() const { return static_cast<Eigen::Index>(grid.tau_inf.size()); }
  Matrix x_draw(long k) const;  // |tau_inf| x d
  Matrix x_mean() const;
  Vector theta_mean() const;
  Vector sigma_mean() const;
  MagiState last_state() const;
};

// Full MAGI run: fit or accept (phi, sigma) per component, build kernel
// bundles on grid.tau_inf, initialize (X, theta), sample with HMC and return
// the kept draws. obs.times must equal grid.tau_obs; rows may be entirely
// missing. Throws InvalidArgument for inconsistent inputs (including phi
// without sigma), FitFailed, NotPositiveDefinite.
PosteriorSamples magi_solver(const ObservationSet& obs, const DiscretizedGrid& grid,
                             const OdeSystem& system, const SolverSettings& settings);

// Builds the posterior model magi_solver would sample, without sampling.
// The fitted phi and sigma are written to phi_out / sigma_out.
MagiModel build_model(const ObservationSet& obs, const DiscretizedGrid& grid,
                      const OdeSystem& system, const SolverSettings& settings,
                      std::vector<KernelHyper>* phi_out = nullptr, Vector* sigma_out = nullptr);

// Linear interpolation of each component's observations onto tau_inf,
// constant beyond the first and last observation; components without any
// observation take `fallback`.
Matrix interpolate_observations(const ObservationSet& obs, const DiscretizedGrid& grid,
                                const Vector& fallback);

}  // namespace magidyn
