#include "rotavg/special_functions.h"

#include <cmath>
#include <limits>

#include "rotavg/errors.h"

namespace rotavg {
namespace {

constexpr int kMaxIterations = 10000;
constexpr double kEpsilon = 1e-17;

void CheckArguments(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a) || std::isnan(x)) {
    throw InvalidArgumentError("incomplete gamma needs a > 0 and x >= 0");
  }
}

// log(x^a e^-x / Gamma(a))
double LogPrefactor(double a, double x) {
  return a * std::log(x) - x - std::lgamma(a);
}

// P(a, x) by the power series, valid for x < a + 1.
double GammaSeries(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double denom = a;
  for (int n = 0; n < kMaxIterations; ++n) {
    denom += 1.0;
    term *= x / denom;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEpsilon) break;
  }
  return sum * std::exp(LogPrefactor(a, x));
}

// Q(a, x) by the continued fraction (modified Lentz), valid for x >= a + 1.
double GammaContinuedFraction(double a, double x) {
  constexpr double kTiny = std::numeric_limits<double>::min() / kEpsilon;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEpsilon) break;
  }
  return std::exp(LogPrefactor(a, x)) * h;
}

}  // namespace

double RegularizedGammaP(double a, double x) {
  CheckArguments(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return GammaSeries(a, x);
  return 1.0 - GammaContinuedFraction(a, x);
}

double RegularizedGammaQ(double a, double x) {
  CheckArguments(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - GammaSeries(a, x);
  return GammaContinuedFraction(a, x);
}

double UpperIncompleteGamma(double a, double x) {
  return std::tgamma(a) * RegularizedGammaQ(a, x);
}

double ChiCdf(int dof, double x) {
  if (dof < 1) throw InvalidArgumentError("chi distribution needs dof >= 1");
  if (x <= 0.0) return 0.0;
  return RegularizedGammaP(0.5 * dof, 0.5 * x * x);
}

double ChiQuantile(int dof, double alpha) {
  if (dof < 1 || !(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgumentError("ChiQuantile needs dof >= 1 and alpha in (0,1)");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (ChiCdf(dof, hi) < alpha) {
    lo = hi;
    hi *= 2.0;
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (ChiCdf(dof, mid) < alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace rotavg
