#pragma once

// Independent reference computations for the unit tests. Nothing here calls
// into the library's quadrature or root finders.

#include <cmath>
#include <functional>

namespace oracle {

// Composite Simpson on [a,b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  double h = (b - a) / n, s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Plain bisection for the sign change of f on [lo,hi].
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-14) {
  double flo = f(lo);
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi), fm = f(mid);
    if ((fm > 0) == (flo > 0)) { lo = mid; flo = fm; } else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Canonical game closed forms (r = λ = 1).
inline double g1_delta(double mu, double A) { return mu - (1.0 - A) / 3.0; }
inline double g1_down(double mu, double A) { return mu - 0.5 + A / 3.0; }
inline double g1_psi_ld(double A) { return (1.0 - A) / 3.0; }
inline double g1_psi_ud(double A) { return 0.5 - A / 3.0; }

// TOL with C = 2/3, δ̄ = 1 for the canonical game: 3D²/(6D+4).
inline double g1_tol(double D) { return 3.0 * D * D / (6.0 * D + 4.0); }

}  // namespace oracle
