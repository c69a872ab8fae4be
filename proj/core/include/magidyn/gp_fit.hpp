#pragma once

#include <optional>
#include <vector>

#include "magidyn/matern.hpp"
#include "magidyn/types.hpp"

namespace magidyn {

// log N(y; mu*1, C_obs + sigma^2 I) over the non-missing entries of y.
// Returns -inf when the covariance cannot be factored.
double gp_marginal_loglik(const Vector& y, const std::vector<double>& times,
                          const KernelHyper& h, double sigma, double mu);

struct GpFit {
  KernelHyper hyper;
  double sigma = 0.0;
  double mu = 0.0;
  double loglik = 0.0;
  int starts_converged = 0;
};

// Maximum marginal likelihood over (log phi1, log phi2, log sigma, mu) with a
// Nelder-Mead simplex from a fixed multi-start set:
//   phi2 in {2 dt, span/8, span/2}, phi1 = sample variance,
//   sigma in {0.01, 0.1, 0.5} x sample sd, mu = sample mean.
// Throws FitFailed with fewer than 3 observations, zero variance, or when no
// start yields a finite likelihood.
GpFit fit_phi_sigma(const Vector& y, const std::vector<double>& times);

// Same search with sigma held fixed (the 3 phi2 starts only).
GpFit fit_phi(const Vector& y, const std::vector<double>& times, double sigma);

// The start points used by fit_phi_sigma as (phi1, phi2, sigma, mu) rows;
// exposed so callers can check the returned optimum dominates every start.
Matrix fit_start_points(const Vector& y, const std::vector<double>& times);

}  // namespace magidyn
