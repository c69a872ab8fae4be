#include "magidyn/matern.hpp"

#include <cmath>

#include "magidyn/bessel.hpp"
#include "magidyn/errors.hpp"

namespace magidyn {

namespace {

constexpr double kNu = kMaternNu;
// Below this scaled lag the small-argument limits are exact to rounding.
constexpr double kSmallU = 1e-8;

const double kNorm = std::pow(2.0, 1.0 - kNu) / std::tgamma(kNu);
// lim_{u->0} u^(nu-1) K_(nu-1)(u)
const double kLimitG1 = std::pow(2.0, kNu - 2.0) * std::tgamma(kNu - 1.0);

}  // namespace

void validate(const KernelHyper& h) {
  if (!(h.phi1 > 0.0) || !std::isfinite(h.phi1) || !(h.phi2 > 0.0) || !std::isfinite(h.phi2))
    throw InvalidArgument("kernel hyperparameters must be finite and > 0");
}

double matern_k(double d, const KernelHyper& h) {
  const double u = std::sqrt(2.0 * kNu) * std::abs(d) / h.phi2;
  if (u < kSmallU) return h.phi1;
  return h.phi1 * kNorm * std::pow(u, kNu) * bessel_k(kNu, u);
}

MaternDerivs matern_derivatives(double d, const KernelHyper& h) {
  const double a = std::sqrt(2.0 * kNu) / h.phi2;
  const double u = a * std::abs(d);
  const double scale = h.phi1 * kNorm * a * a;
  MaternDerivs out;
  if (u < kSmallU) {
    out.value = h.phi1;
    out.d_ds = -scale * d * kLimitG1;
    out.d_dt = -out.d_ds;
    out.d2_dsdt = scale * kLimitG1;
    return out;
  }
  double k[3];  // K_{nu-2}, K_{nu-1}, K_nu
  bessel_k_sequence(kNu - 2.0, u, 3, k);
  const double unu = std::pow(u, kNu);
  const double g1 = unu / u * k[1];  // u^(nu-1) K_(nu-1)(u)
  out.value = h.phi1 * kNorm * unu * k[2];
  out.d_ds = -scale * d * g1;
  out.d_dt = -out.d_ds;
  // k''(d) = -scale * (g1 - u^nu K_(nu-2)(u)); d2k/dsdt = -k''(d)
  out.d2_dsdt = scale * (g1 - unu * k[0]);
  return out;
}

}  // namespace magidyn
