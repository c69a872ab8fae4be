#pragma once

namespace magidyn {

// Smoothness of the Matern kernel used throughout.
inline constexpr double kMaternNu = 2.01;

struct KernelHyper {
  double phi1 = 1.0;  // variance scale
  double phi2 = 1.0;  // length scale (time units)
};

// Throws InvalidArgument unless both entries are finite and > 0.
void validate(const KernelHyper& h);

// k(d) = phi1 * 2^(1-nu)/Gamma(nu) * u^nu * K_nu(u), u = sqrt(2 nu)|d|/phi2;
// k(0) = phi1.
double matern_k(double d, const KernelHyper& h);

// Value and derivatives of k(s, t) with d = s - t.
struct MaternDerivs {
  double value = 0.0;
  double d_ds = 0.0;     // dk/ds
  double d_dt = 0.0;     // dk/dt = -dk/ds
  double d2_dsdt = 0.0;  // d^2 k / ds dt, equals the derivative-process variance at d = 0
};
MaternDerivs matern_derivatives(double d, const KernelHyper& h);

}  // namespace magidyn
