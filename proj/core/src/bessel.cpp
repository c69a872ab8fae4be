#include "magidyn/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "magidyn/errors.hpp"

namespace magidyn {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 100000;

// Coefficients of 1/Gamma(z) = sum c_k z^k (Abramowitz & Stegun 6.1.34).
constexpr double kRecipGamma[] = {
    1.0000000000000000,  0.5772156649015329,  -0.6558780715202538,
    -0.0420026350340952, 0.1665386113822915,  -0.0421977345555443,
    -0.0096219715278770, 0.0072189432466630,  -0.0011651675918591,
    -0.0002152416741149, 0.0001280502823882,  -0.0000201348547807,
    -0.0000012504934821, 0.0000011330272320,  -0.0000002056338417,
};

// Temme's auxiliary gammas for |mu| <= 1/2:
//   gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu),  gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2
// plus gampl = 1/G(1+mu), gammi = 1/G(1-mu).
void temme_gammas(double mu, double& gam1, double& gam2, double& gampl, double& gammi) {
  gampl = 1.0 / std::tgamma(1.0 + mu);
  gammi = 1.0 / std::tgamma(1.0 - mu);
  if (std::abs(mu) < 0.1) {
    // Even/odd parts of the series avoid the cancellation in gam1.
    const double m2 = mu * mu;
    double p = 1.0, g1 = 0.0, g2 = 0.0;
    for (int k = 1; k < 15; k += 2) {
      g2 += kRecipGamma[k - 1] * p;
      g1 -= kRecipGamma[k] * p;
      p *= m2;
    }
    gam1 = g1;
    gam2 = g2;
  } else {
    gam1 = (gammi - gampl) / (2.0 * mu);
    gam2 = 0.5 * (gammi + gampl);
  }
}

// K_mu(x) and K_{mu+1}(x) for |mu| <= 1/2.
void k_pair(double mu, double x, double& kmu, double& kmu1) {
  const double pi = std::numbers::pi;
  const double mu2 = mu * mu;
  if (x < 2.0) {
    const double x2 = 0.5 * x;
    const double pimu = pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    double gam1, gam2, gampl, gammi;
    temme_gammas(mu, gam1, gam2, gampl, gammi);
    double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl;
    double q = 0.5 / (e * gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    for (int i = 1; i <= kMaxIter; ++i) {
      ff = (i * ff + p + q) / (i * i - mu2);
      c *= d / i;
      p /= i - mu;
      q /= i + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
      if (i == kMaxIter) throw Error("bessel_k: series failed to converge");
    }
    kmu = sum;
    kmu1 = sum1 * 2.0 / x;
  } else {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1, c = a1, a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= kMaxIter; ++i) {
      a -= 2 * (i - 1);
      c = -a * c / i;
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::abs(dels / s) < kEps) break;
      if (i == kMaxIter) throw Error("bessel_k: continued fraction failed to converge");
    }
    h *= a1;
    kmu = std::sqrt(pi / (2.0 * x)) * std::exp(-x) / s;
    kmu1 = kmu * (mu + x + 0.5 - h) / x;
  }
}

}  // namespace

void bessel_k_sequence(double nu0, double x, int count, double* out) {
  if (!(nu0 >= 0.0) || !std::isfinite(nu0))
    throw InvalidArgument("bessel_k: order must be finite and >= 0");
  if (!(x > 0.0)) throw InvalidArgument("bessel_k: argument must be > 0");
  if (count < 1) throw InvalidArgument("bessel_k: count must be >= 1");
  if (std::isinf(x)) {
    for (int i = 0; i < count; ++i) out[i] = 0.0;
    return;
  }
  const int nl = static_cast<int>(nu0 + 0.5);
  const double mu = nu0 - nl;
  double k0, k1;
  k_pair(mu, x, k0, k1);
  // Recur K_{m+1} = K_{m-1} + 2 m / x K_m up to nu0, then keep going.
  for (int i = 1; i <= nl; ++i) {
    const double next = (mu + i) * (2.0 / x) * k1 + k0;
    k0 = k1;
    k1 = next;
  }
  out[0] = k0;
  if (count > 1) out[1] = k1;
  for (int i = 2; i < count; ++i) {
    const double next = (nu0 + i - 1) * (2.0 / x) * k1 + k0;
    k0 = k1;
    k1 = next;
    out[i] = k1;
  }
}

double bessel_k(double nu, double x) {
  double v;
  bessel_k_sequence(nu, x, 1, &v);
  return v;
}

}  // namespace magidyn
