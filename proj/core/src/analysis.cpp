#include "magidyn/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "magidyn/errors.hpp"

namespace magidyn {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

ColumnSummary summarize_columns(const Matrix& draws) {
  if (draws.rows() == 0) throw InvalidArgument("summarize: no draws");
  const Eigen::Index n = draws.rows(), k = draws.cols();
  ColumnSummary s;
  s.mean = draws.colwise().mean().transpose();
  s.sd.resize(k);
  s.lo.resize(k);
  s.hi.resize(k);
  std::vector<double> col(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < k; ++j) {
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      col[static_cast<std::size_t>(i)] = draws(i, j);
      const double e = draws(i, j) - s.mean[j];
      ss += e * e;
    }
    s.sd[j] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    std::sort(col.begin(), col.end());
    s.lo[j] = quantile_sorted(col, 0.025);
    s.hi[j] = quantile_sorted(col, 0.975);
  }
  return s;
}

PosteriorSummary summarize(const PosteriorSamples& ps) {
  PosteriorSummary out;
  out.times = ps.grid.tau_inf;
  const ColumnSummary xs = summarize_columns(ps.x_draws);
  const Eigen::Index n = ps.n_times();
  auto reshape = [&](const Vector& v) { return Matrix(Eigen::Map<const Matrix>(v.data(), n, ps.d)); };
  out.x_mean = reshape(xs.mean);
  out.x_sd = reshape(xs.sd);
  out.x_lo = reshape(xs.lo);
  out.x_hi = reshape(xs.hi);
  out.theta = summarize_columns(ps.theta_draws);
  out.sigma = summarize_columns(ps.sigma_draws);
  return out;
}

Vector scaled_l1(const Matrix& draws, const Vector& truth) {
  if (draws.rows() == 0) throw InvalidArgument("scaled_l1: no draws");
  if (draws.cols() != truth.size()) throw InvalidArgument("scaled_l1: dimension mismatch");
  if ((truth.array() == 0.0).any()) throw InvalidArgument("scaled_l1: true value is zero");
  Vector out(truth.size());
  for (Eigen::Index j = 0; j < truth.size(); ++j)
    out[j] = (draws.col(j).array() - truth[j]).abs().mean() / std::abs(truth[j]);
  return out;
}

SmaeResult smae(const Trajectory& pred, const Trajectory& truth) {
  if (pred.times.size() != truth.times.size() || pred.values.rows() != truth.values.rows() ||
      pred.values.cols() != truth.values.cols())
    throw InvalidArgument("smae: trajectories differ in shape");
  for (std::size_t i = 0; i < pred.times.size(); ++i)
    if (std::abs(pred.times[i] - truth.times[i]) > 1e-9)
      throw InvalidArgument("smae: trajectories are on different grids");
  const Eigen::Index d = truth.values.cols();
  SmaeResult r;
  r.rows = static_cast<long>(truth.values.rows());
  r.value = Vector::Zero(d);
  r.excluded.assign(static_cast<std::size_t>(d), 0);
  for (Eigen::Index c = 0; c < d; ++c) {
    double sum = 0.0;
    long used = 0;
    for (Eigen::Index i = 0; i < truth.values.rows(); ++i) {
      const double x = truth.values(i, c);
      if (std::abs(x) < 1e-9) {
        ++r.excluded[static_cast<std::size_t>(c)];
        continue;
      }
      sum += std::abs(pred.values(i, c) - x) / std::abs(x);
      ++used;
    }
    r.value[c] = used > 0 ? sum / static_cast<double>(used) : 0.0;
  }
  return r;
}

double stability_probability(const Matrix& draws, std::optional<double> sigma_override) {
  if (draws.rows() == 0) throw InvalidArgument("stability_probability: no draws");
  if (draws.cols() != 3) throw InvalidArgument("stability_probability: expects (beta, rho, sigma)");
  long stable = 0;
  for (Eigen::Index k = 0; k < draws.rows(); ++k) {
    const double beta = draws(k, 0), rho = draws(k, 1);
    const double sigma = sigma_override ? *sigma_override : draws(k, 2);
    const double den = sigma - beta - 1.0;
    const bool ok = den > 0.0 ? rho < sigma * (sigma + beta + 3.0) / den : rho < 1.0;
    if (ok) ++stable;
  }
  return static_cast<double>(stable) / static_cast<double>(draws.rows());
}

MetricReport make_report(const Matrix& theta_draws, const Vector& theta_true,
                         std::optional<double> sigma_override) {
  MetricReport r;
  r.theta_true = theta_true;
  r.scaled_l1 = scaled_l1(theta_draws, theta_true);
  r.mape = r.scaled_l1;
  r.stability_probability = stability_probability(theta_draws, sigma_override);
  r.sigma_override = sigma_override;
  r.n_draws = static_cast<long>(theta_draws.rows());
  return r;
}

}  // namespace magidyn
