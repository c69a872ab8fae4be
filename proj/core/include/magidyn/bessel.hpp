#pragma once

namespace magidyn {

// Modified Bessel function of the second kind K_nu(x) for real nu >= 0 and
// x > 0. Temme's series for x < 2, Steed's continued fraction otherwise, then
// upward recurrence in the order (Temme 1975; Press et al., "bessik").
double bessel_k(double nu, double x);

// K_{nu0}(x), K_{nu0+1}(x), ..., K_{nu0+count-1}(x) into out[0..count-1].
// nu0 >= 0, x > 0, count >= 1. One evaluation costs about the same as a
// single bessel_k call.
void bessel_k_sequence(double nu0, double x, int count, double* out);

}  // namespace magidyn
