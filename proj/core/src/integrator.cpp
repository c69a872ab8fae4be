#include "magidyn/integrator.hpp"

#include <algorithm>
#include <cmath>

#include "magidyn/errors.hpp"

namespace magidyn {

namespace {

// Dormand & Prince (1980) tableau, as in Hairer, Norsett & Wanner (DOPRI5).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - bhat (error estimator weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

Trajectory integrate(const OdeSystem& sys, const Vector& x0, const Vector& theta,
                     const std::vector<double>& t_grid, const IntegratorOptions& opt) {
  if (t_grid.empty()) throw InvalidGrid("integrate: empty time grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw InvalidGrid("integrate: time grid must be strictly increasing");
  if (!(opt.abs_tol > 0.0) || !(opt.rel_tol > 0.0))
    throw InvalidArgument("integrate: tolerances must be positive");
  if (!(opt.max_step > 0.0)) throw InvalidArgument("integrate: max_step must be positive");
  if (x0.size() != sys.dim()) throw InvalidArgument("integrate: x0 has wrong dimension");
  if (!all_finite(x0)) throw InvalidArgument("integrate: x0 is not finite");

  const int d = sys.dim();
  Trajectory out;
  out.times = t_grid;
  out.values.resize(static_cast<Eigen::Index>(t_grid.size()), d);
  out.values.row(0) = x0.transpose();
  if (t_grid.size() == 1) return out;

  auto rhs = [&](double t, const Vector& x) { return sys.f(x, t, theta); };

  auto err_scale = [&](const Vector& a, const Vector& b) {
    return (opt.abs_tol + opt.rel_tol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array())
        .matrix();
  };

  double t = t_grid.front();
  Vector x = x0;
  Vector k1 = rhs(t, x);
  if (!all_finite(k1)) throw StepSizeUnderflow("integrate: non-finite derivative at start");

  // Initial step guess (Hairer, Norsett & Wanner, II.4).
  double h;
  {
    const Vector sc = err_scale(x, x);
    const double d0 = std::sqrt((x.array() / sc.array()).square().mean());
    const double d1 = std::sqrt((k1.array() / sc.array()).square().mean());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    const Vector x1 = x + h0 * k1;
    const Vector f1 = rhs(t + h0, x1);
    const double d2 =
        std::sqrt(((f1 - k1).array() / sc.array()).square().mean()) / h0;
    const double h1 = (std::max(d1, d2) <= 1e-15)
                          ? std::max(1e-6, h0 * 1e-3)
                          : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
    h = std::min(100.0 * h0, h1);
    if (!std::isfinite(h) || h <= 0.0) h = 1e-6;
  }
  h = std::min(h, opt.max_step);

  Vector k2(d), k3(d), k4(d), k5(d), k6(d), k7(d), xs(d), xn(d);
  long attempts = 0;
  bool last_rejected = false;

  for (std::size_t gi = 1; gi < t_grid.size(); ++gi) {
    const double target = t_grid[gi];
    while (t < target) {
      if (++attempts > opt.max_attempts)
        throw StepSizeUnderflow("integrate: step budget exhausted");
      bool hits_target = false;
      double hstep = std::min(h, opt.max_step);
      if (t + hstep >= target || target - (t + hstep) < 1e-12 * std::abs(target)) {
        hstep = target - t;
        hits_target = true;
      }
      const double min_h = 16.0 * std::numeric_limits<double>::epsilon() *
                           std::max(1.0, std::abs(t));
      if (hstep < min_h && !hits_target)
        throw StepSizeUnderflow("integrate: step size underflow at t=" + std::to_string(t));

      xs = x + hstep * a21 * k1;
      k2 = rhs(t + c2 * hstep, xs);
      xs = x + hstep * (a31 * k1 + a32 * k2);
      k3 = rhs(t + c3 * hstep, xs);
      xs = x + hstep * (a41 * k1 + a42 * k2 + a43 * k3);
      k4 = rhs(t + c4 * hstep, xs);
      xs = x + hstep * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      k5 = rhs(t + c5 * hstep, xs);
      xs = x + hstep * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      k6 = rhs(t + hstep, xs);
      xn = x + hstep * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = rhs(t + hstep, xn);

      double err = std::numeric_limits<double>::infinity();
      if (all_finite(xn) && all_finite(k7)) {
        const Vector e =
            hstep * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const Vector sc = err_scale(x, xn);
        err = std::sqrt((e.array() / sc.array()).square().mean());
        if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
      }

      if (err <= 1.0) {
        t = hits_target ? target : t + hstep;
        x = xn;
        k1 = k7;  // first-same-as-last
        double fac = err == 0.0 ? kMaxFactor : kSafety * std::pow(err, -0.2);
        fac = std::clamp(fac, kMinFactor, last_rejected ? 1.0 : kMaxFactor);
        // Do not let a clipped landing step shrink the controller's proposal.
        h = hits_target ? std::max(h, hstep * fac) : hstep * fac;
        last_rejected = false;
      } else {
        const double fac = std::isfinite(err)
                               ? std::clamp(kSafety * std::pow(err, -0.2), kMinFactor, 1.0)
                               : kMinFactor;
        h = hstep * fac;
        last_rejected = true;
        if (h < min_h)
          throw StepSizeUnderflow("integrate: step size underflow at t=" +
                                  std::to_string(t));
      }
    }
    out.values.row(static_cast<Eigen::Index>(gi)) = x.transpose();
  }
  return out;
}

}  // namespace magidyn
