#pragma once

namespace rotavg {

// Regularized lower / upper incomplete gamma functions P(a, x), Q(a, x).
// Series expansion for x < a + 1, Lentz continued fraction otherwise.
double RegularizedGammaP(double a, double x);
double RegularizedGammaQ(double a, double x);

// Upper incomplete gamma Gamma(a, x) = int_x^inf t^(a-1) e^-t dt for a > 0,
// x >= 0; relative accuracy better than 1e-10.
double UpperIncompleteGamma(double a, double x);

// CDF of the chi distribution with `dof` degrees of freedom.
double ChiCdf(int dof, double x);

// k with ChiCdf(dof, k) = alpha, by bisection (|CDF(k) - alpha| < 1e-10).
double ChiQuantile(int dof, double alpha);

}  // namespace rotavg
