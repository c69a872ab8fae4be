#pragma once

#include <vector>

#include "magidyn/kernel_bundle.hpp"
#include "magidyn/magi_grid.hpp"
#include "magidyn/ode.hpp"
#include "magidyn/types.hpp"

namespace magidyn {

// Independent uniform priors on a box; log density 0 inside, -inf outside.
struct ThetaPrior {
  Vector lower;
  Vector upper;

  static ThetaPrior uniform(int p, double lo = 0.0, double hi = 100.0);
  bool contains(const Vector& theta) const;
  Vector median() const { return 0.5 * (lower + upper); }
};

// Bounds of the flat prior on log sigma.
inline constexpr double kLogSigmaMin = -13.815510557964274;  // log 1e-6
inline constexpr double kLogSigmaMax = 6.907755278982137;    // log 1e3

// Everything the joint posterior over (X, theta, log sigma) depends on.
struct MagiModel {
  const OdeSystem* system = nullptr;
  DiscretizedGrid grid;
  std::vector<KernelBundle> bundles;  // one per component, on grid.tau_inf
  Matrix y;                           // |tau_obs| x d, NaN where missing
  Vector mu;                          // per-component centering mean
  ThetaPrior prior;
  bool sample_sigma = true;
  Vector sigma_fixed;                 // used when sample_sigma is false

  int dim() const { return system->dim(); }
  int n_params() const { return system->n_params(); }
  Eigen::Index n_times() const { return static_cast<Eigen::Index>(grid.tau_inf.size()); }
  // Length of the flattened HMC position.
  Eigen::Index flat_size() const;
};

struct MagiState {
  Matrix X;          // |tau_inf| x d
  Vector theta;      // p
  Vector log_sigma;  // d, or empty when sigma is fixed
};

// Flattened order: X column by column (component-major), then theta, then
// log sigma if sampled.
Vector flatten(const MagiState& s);
MagiState unflatten(const MagiModel& model, const Vector& flat);

struct PosteriorTerms {
  double gp_prior = 0.0;     // sum_i log N(x_i - mu_i; 0, C_i)
  double observation = 0.0;  // sum_i sum_obs log N(y; x, sigma_i^2)
  double manifold = 0.0;     // sum_i log N(f_i - m_i (x_i - mu_i); 0, K_i)
  double theta_prior = 0.0;  // 0 or -inf
  double sigma_prior = 0.0;  // 0 or -inf
  double total() const { return gp_prior + observation + manifold + theta_prior + sigma_prior; }
};

PosteriorTerms posterior_terms(const MagiModel& model, const MagiState& state);
double log_posterior(const MagiModel& model, const MagiState& state);
Vector grad_log_posterior(const MagiModel& model, const MagiState& state);

// Value and gradient over the flattened position; the HMC target.
double log_posterior_flat(const MagiModel& model, const Vector& flat, Vector* grad);

// Gauss-Newton approximation of the Hessian of -log posterior at `flat`
// (flattened order). Used to precondition the sampler.
Matrix gauss_newton_hessian(const MagiModel& model, const Vector& flat);

// max over grid times and components of |f_i - (m_i (x_i - mu_i))|, the
// size of the manifold-constraint violation.
double manifold_discrepancy(const MagiModel& model, const MagiState& state);

}  // namespace magidyn
