#pragma once

#include <optional>
#include <vector>

#include "magidyn/magi_solver.hpp"
#include "magidyn/types.hpp"

namespace magidyn {

// Column-wise summary of a draws matrix (one draw per row).
struct ColumnSummary {
  Vector mean, sd, lo, hi;  // lo/hi: 2.5% and 97.5% quantiles
};

// Sample quantile with linear interpolation between order statistics
// (Hyndman & Fan type 7). `sorted` must be ascending and nonempty.
double quantile_sorted(const std::vector<double>& sorted, double p);

// sd uses the n-1 denominator (0 for a single draw). Throws InvalidArgument
// for an empty matrix.
ColumnSummary summarize_columns(const Matrix& draws);

struct PosteriorSummary {
  std::vector<double> times;
  Matrix x_mean, x_sd, x_lo, x_hi;  // |times| x d
  ColumnSummary theta;
  ColumnSummary sigma;
};
PosteriorSummary summarize(const PosteriorSamples& samples);

// (1/N) sum_k |draw_k - truth| / |truth| per parameter. Throws
// InvalidArgument if any truth entry is zero or no draws are given.
Vector scaled_l1(const Matrix& theta_draws, const Vector& truth);
// Same quantity under its other name.
inline Vector mape(const Matrix& theta_draws, const Vector& truth) {
  return scaled_l1(theta_draws, truth);
}

struct SmaeResult {
  Vector value;               // per component
  std::vector<long> excluded;  // rows skipped because |truth| < 1e-9
  long rows = 0;
};

// (1/|tau|) sum_t |pred - truth| / |truth| per component over rows whose
// truth magnitude is at least 1e-9; skipped rows are counted. Grids must
// match (absolute tolerance 1e-9).
SmaeResult smae(const Trajectory& pred, const Trajectory& truth);

// Fraction of draws (beta, rho, sigma) judged stable: rho < rho_critical
// when sigma - beta - 1 > 0, else rho < 1. sigma_override replaces every
// draw's sigma.
double stability_probability(const Matrix& theta_draws,
                             std::optional<double> sigma_override = std::nullopt);

struct MetricReport {
  Vector theta_true;
  Vector scaled_l1;  // per parameter
  Vector mape;       // per parameter
  std::optional<SmaeResult> smae;
  double stability_probability = 0.0;
  std::optional<double> sigma_override;
  long n_draws = 0;
};

MetricReport make_report(const Matrix& theta_draws, const Vector& theta_true,
                         std::optional<double> sigma_override = std::nullopt);

}  // namespace magidyn
