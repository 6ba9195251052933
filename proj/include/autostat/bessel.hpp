#pragma once

// Exponentially scaled modified Bessel functions I0e(z) = exp(-z) I0(z) and
// I1e(z) = exp(-z) I1(z) for z >= 0.  The periodic kernel needs these in
// scaled form: exp(1/l^2) overflows for small lengthscales long before the
// kernel value itself becomes extreme.
//
// Power series below z = 20, asymptotic expansion above; both reach
// ~1e-13 relative accuracy, so analytic kernel gradients stay consistent
// with finite differences of the same code path.

#include <cmath>

namespace autostat {

namespace detail {

inline double bessel_series_i0(double z) {
  double q = 0.25 * z * z;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 120; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

inline double bessel_series_i1(double z) {
  double q = 0.25 * z * z;
  double term = 0.5 * z, sum = term;
  for (int k = 1; k < 120; ++k) {
    term *= q / (static_cast<double>(k) * (k + 1));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// exp(-z) I_nu(z) * sqrt(2 pi z) ~ sum of asymptotic terms, mu = 4 nu^2.
inline double bessel_asymptotic(double z, double mu) {
  double sum = 1.0, term = 1.0;
  double prev = std::abs(term);
  for (int k = 1; k < 30; ++k) {
    double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (8.0 * z * k);
    if (std::abs(term) >= prev) break;  // series started diverging
    sum += term;
    prev = std::abs(term);
    if (prev < 1e-17) break;
  }
  return sum / std::sqrt(2.0 * M_PI * z);
}

}  // namespace detail

inline double bessel_i0e(double z) {
  if (z < 20.0) return std::exp(-z) * detail::bessel_series_i0(z);
  return detail::bessel_asymptotic(z, 0.0);
}

inline double bessel_i1e(double z) {
  if (z < 20.0) return std::exp(-z) * detail::bessel_series_i1(z);
  return detail::bessel_asymptotic(z, 4.0);
}

}  // namespace autostat
