#include "magidyn/gp_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include "magidyn/errors.hpp"
#include "magidyn/kernel_bundle.hpp"
#include "magidyn/testbed.hpp"

namespace magidyn {

namespace {

constexpr int kMaxIter = 3000;
constexpr double kSimplexTol = 1e-7;
constexpr double kBad = 1e300;

struct Observed {
  Vector y;
  std::vector<double> t;
  double mean = 0.0, var = 0.0, dt = 0.0, span = 0.0;
};

Observed select_observed(const Vector& y, const std::vector<double>& times) {
  if (static_cast<std::size_t>(y.size()) != times.size())
    throw InvalidArgument("gp fit: values and times differ in length");
  Observed o;
  std::vector<double> vals;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (is_missing(y[i])) continue;
    vals.push_back(y[i]);
    o.t.push_back(times[static_cast<std::size_t>(i)]);
  }
  o.y = Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  if (o.y.size() < 3) throw FitFailed("gp fit: need at least 3 observations");
  o.mean = o.y.mean();
  o.var = (o.y.array() - o.mean).square().sum() / static_cast<double>(o.y.size() - 1);
  o.span = o.t.back() - o.t.front();
  o.dt = o.span / static_cast<double>(o.t.size() - 1);
  if (!(o.var > 0.0) || !std::isfinite(o.var)) throw FitFailed("gp fit: data have zero variance");
  if (!(o.span > 0.0)) throw FitFailed("gp fit: observation times have zero span");
  return o;
}

double loglik_observed(const Observed& o, const KernelHyper& h, double sigma, double mu) {
  Matrix A = matern_cov(o.t, h);
  A.diagonal().array() += sigma * sigma;
  JitteredCholesky f;
  try {
    f = jittered_cholesky(A);
  } catch (const NotPositiveDefinite&) {
    return -std::numeric_limits<double>::infinity();
  }
  const Vector r = o.y.array() - mu;
  const Vector w = f.L.triangularView<Eigen::Lower>().solve(r);
  const double n = static_cast<double>(r.size());
  return -0.5 * w.squaredNorm() - 0.5 * f.logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

struct Problem {
  const Observed* obs;
  bool fit_sigma;
  double fixed_sigma;
};

// Parameter vector: (log phi1, log phi2, [log sigma,] mu).
double objective(const gsl_vector* v, void* params) {
  const auto* pr = static_cast<const Problem*>(params);
  const Observed& o = *pr->obs;
  const double lphi1 = gsl_vector_get(v, 0), lphi2 = gsl_vector_get(v, 1);
  const double lsig = pr->fit_sigma ? gsl_vector_get(v, 2) : 0.0;
  const double mu = gsl_vector_get(v, pr->fit_sigma ? 3 : 2);
  // Box guards keep the search away from numerically meaningless corners.
  // A bandwidth below the mean observation spacing cannot be told apart from
  // noise, so phi2 is floored there.
  const double lvar = std::log(o.var);
  if (lphi1 < lvar - 25.0 || lphi1 > lvar + 25.0) return kBad;
  if (lphi2 < std::log(o.dt) || lphi2 > std::log(o.span) + 5.0) return kBad;
  if (pr->fit_sigma && (lsig < 0.5 * lvar - 25.0 || lsig > 0.5 * lvar + 5.0)) return kBad;
  const double sigma = pr->fit_sigma ? std::exp(lsig) : pr->fixed_sigma;
  const double ll = loglik_observed(o, {std::exp(lphi1), std::exp(lphi2)}, sigma, mu);
  return std::isfinite(ll) ? -ll : kBad;
}

bool objective_value_is_bad(const Problem& pr, const Vector& x) {
  gsl_vector* v = gsl_vector_alloc(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) gsl_vector_set(v, static_cast<std::size_t>(i), x[i]);
  const double f = objective(v, const_cast<Problem*>(&pr));
  gsl_vector_free(v);
  return !(f < kBad);
}

struct Candidate {
  Vector x;
  double value;
  bool converged;
};

Candidate run_simplex(const Problem& pr, const Vector& start, const Vector& steps) {
  const auto n = static_cast<std::size_t>(start.size());
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* ss = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x, i, start[static_cast<Eigen::Index>(i)]);
    gsl_vector_set(ss, i, steps[static_cast<Eigen::Index>(i)]);
  }
  gsl_multimin_function fn;
  fn.n = n;
  fn.f = &objective;
  fn.params = const_cast<Problem*>(&pr);
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(m, &fn, x, ss);
  bool converged = false;
  for (int it = 0; it < kMaxIter; ++it) {
    if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), kSimplexTol) == GSL_SUCCESS) {
      converged = true;
      break;
    }
  }
  Candidate c;
  c.x.resize(start.size());
  for (std::size_t i = 0; i < n; ++i) c.x[static_cast<Eigen::Index>(i)] = gsl_vector_get(m->x, i);
  c.value = m->fval;
  c.converged = converged;
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(x);
  gsl_vector_free(ss);
  return c;
}

GpFit fit_impl(const Observed& o, bool fit_sigma, double fixed_sigma) {
  gsl_set_error_handler_off();
  const double sd = std::sqrt(o.var);
  const double phi2_starts[] = {2.0 * o.dt, o.span / 8.0, o.span / 2.0};
  const double sigma_starts[] = {0.01, 0.1, 0.5};
  Problem pr{&o, fit_sigma, fixed_sigma};
  const Eigen::Index dim = fit_sigma ? 4 : 3;

  Candidate best{Vector(), kBad, false};
  int converged = 0;
  for (double p2 : phi2_starts) {
    for (double sf : sigma_starts) {
      Vector x0(dim), steps(dim);
      x0[0] = std::log(o.var);
      x0[1] = std::log(p2);
      steps[0] = 1.0;
      steps[1] = 0.5;
      if (fit_sigma) {
        x0[2] = std::log(sf * sd);
        steps[2] = 1.0;
      }
      x0[dim - 1] = o.mean;
      steps[dim - 1] = 0.5 * sd;
      if (objective_value_is_bad(pr, x0)) continue;
      Candidate c = run_simplex(pr, x0, steps);
      // One restart from the optimum guards against simplex collapse.
      if (c.value < kBad) {
        Candidate r = run_simplex(pr, c.x, 0.2 * steps);
        if (r.value <= c.value) c = r;
      }
      if (c.converged) ++converged;
      if (c.value < best.value) best = c;
      if (!fit_sigma) break;  // sigma starts are irrelevant
    }
  }
  if (!(best.value < kBad)) throw FitFailed("gp fit: no start produced a finite likelihood");
  GpFit out;
  out.hyper = {std::exp(best.x[0]), std::exp(best.x[1])};
  out.sigma = fit_sigma ? std::exp(best.x[2]) : fixed_sigma;
  out.mu = best.x[dim - 1];
  out.loglik = -best.value;
  out.starts_converged = converged;
  return out;
}

}  // namespace

double gp_marginal_loglik(const Vector& y, const std::vector<double>& times, const KernelHyper& h,
                          double sigma, double mu) {
  validate(h);
  if (!(sigma >= 0.0)) throw InvalidArgument("gp_marginal_loglik: sigma must be >= 0");
  if (static_cast<std::size_t>(y.size()) != times.size())
    throw InvalidArgument("gp_marginal_loglik: values and times differ in length");
  Observed o;
  std::vector<double> vals;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (is_missing(y[i])) continue;
    vals.push_back(y[i]);
    o.t.push_back(times[static_cast<std::size_t>(i)]);
  }
  if (vals.empty()) return 0.0;
  o.y = Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  return loglik_observed(o, h, sigma, mu);
}

Matrix fit_start_points(const Vector& y, const std::vector<double>& times) {
  const Observed o = select_observed(y, times);
  const double sd = std::sqrt(o.var);
  Matrix s(9, 4);
  int r = 0;
  for (double p2 : {2.0 * o.dt, o.span / 8.0, o.span / 2.0})
    for (double sf : {0.01, 0.1, 0.5}) s.row(r++) << o.var, p2, sf * sd, o.mean;
  return s;
}

GpFit fit_phi_sigma(const Vector& y, const std::vector<double>& times) {
  return fit_impl(select_observed(y, times), true, 0.0);
}

GpFit fit_phi(const Vector& y, const std::vector<double>& times, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("fit_phi: sigma must be >= 0");
  return fit_impl(select_observed(y, times), false, sigma);
}

}  // namespace magidyn
