#include "rotavg/robust_loss.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <utility>

#include "rotavg/errors.h"
#include "rotavg/special_functions.h"

namespace rotavg {
namespace {

void CheckSquaredResidual(double s) {
  if (!(s >= 0.0)) {
    throw InvalidArgumentError("robust loss needs a non-negative residual");
  }
}

constexpr std::array<std::pair<LossType, std::string_view>, 8> kLossNames = {{
    {LossType::kTrivial, "trivial"},
    {LossType::kHuber, "huber"},
    {LossType::kSoftL1, "soft_l1"},
    {LossType::kCauchy, "cauchy"},
    {LossType::kTukey, "tukey"},
    {LossType::kGemanMcClure, "gm"},
    {LossType::kLHalf, "l_half"},
    {LossType::kMagsac, "magsac"},
}};

}  // namespace

LossSpec::LossSpec(LossType type, double scale) : type_(type), scale_(scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidArgumentError("loss scale must be positive and finite");
  }
}

LossSpec LossSpec::Trivial() { return LossSpec(); }
LossSpec LossSpec::Huber(double delta) {
  return LossSpec(LossType::kHuber, delta);
}
LossSpec LossSpec::SoftL1(double scale) {
  return LossSpec(LossType::kSoftL1, scale);
}
LossSpec LossSpec::Cauchy(double c) { return LossSpec(LossType::kCauchy, c); }
LossSpec LossSpec::Tukey(double c) { return LossSpec(LossType::kTukey, c); }
LossSpec LossSpec::GemanMcClure(double c) {
  return LossSpec(LossType::kGemanMcClure, c);
}
LossSpec LossSpec::LHalf(double scale) {
  return LossSpec(LossType::kLHalf, scale);
}

LossSpec LossSpec::Magsac(double sigma_max, int nu, double alpha) {
  if (nu < 2) {
    throw InvalidArgumentError("magsac needs nu >= 2");
  }
  if (!(alpha > 0.5 && alpha < 1.0)) {
    throw InvalidArgumentError("magsac needs alpha in (0.5, 1)");
  }
  LossSpec spec(LossType::kMagsac, sigma_max);
  spec.nu_ = nu;
  spec.alpha_ = alpha;
  spec.k_ = ChiQuantile(nu, alpha);
  const double a = 0.5 * (nu - 1);
  const double normalizer = 1.0 / (std::pow(2.0, 0.5 * nu) * std::tgamma(0.5 * nu));
  spec.magsac_factor_ = normalizer * std::pow(2.0, a);
  spec.gamma_at_k_ = UpperIncompleteGamma(a, 0.5 * spec.k_ * spec.k_);
  spec.max_weight_ = MagsacWeight(spec, 0.0);
  return spec;
}

LossSpec LossSpec::Make(LossType type, double scale, int nu, double alpha) {
  switch (type) {
    case LossType::kTrivial:
      return Trivial();
    case LossType::kMagsac:
      return Magsac(scale, nu, alpha);
    default:
      return LossSpec(type, scale);
  }
}

LossEval LossSpec::Evaluate(double squared_residual) const {
  if (type_ == LossType::kMagsac) {
    CheckSquaredResidual(squared_residual);
    return MagsacLoss(*this, std::sqrt(squared_residual));
  }
  return ClassicLoss(*this, squared_residual);
}

LossEval ClassicLoss(const LossSpec& spec, double s) {
  CheckSquaredResidual(s);
  const double a = spec.scale();
  const double a2 = a * a;
  switch (spec.type()) {
    case LossType::kTrivial:
      return {s, 1.0};
    case LossType::kHuber: {
      if (s <= a2) return {s, 1.0};
      const double r = std::sqrt(s);
      return {2.0 * a * r - a2, a / r};
    }
    case LossType::kSoftL1: {
      const double root = std::sqrt(1.0 + s / a2);
      return {2.0 * a2 * (root - 1.0), 1.0 / root};
    }
    case LossType::kCauchy: {
      return {a2 * std::log1p(s / a2), 1.0 / (1.0 + s / a2)};
    }
    case LossType::kTukey: {
      if (s >= a2) return {a2 / 3.0, 0.0};
      const double x = s / a2;
      const double t = 1.0 - x;
      // 1 - t^3 without cancellation at small x.
      return {a2 / 3.0 * x * (3.0 - 3.0 * x + x * x), t * t};
    }
    case LossType::kGemanMcClure: {
      const double denom = a2 + s;
      return {a2 * s / denom, (a2 * a2) / (denom * denom)};
    }
    case LossType::kLHalf: {
      // Smooth power loss, grows like |r|^(1/2).
      const double base = 1.0 + s / a2;
      const double root4 = std::sqrt(std::sqrt(base));
      return {4.0 * a2 * (root4 - 1.0), root4 / base};
    }
    case LossType::kMagsac:
      break;
  }
  throw InvalidArgumentError("ClassicLoss called with the magsac loss");
}

double MagsacWeight(const LossSpec& spec, double residual) {
  if (spec.type() != LossType::kMagsac) {
    throw InvalidArgumentError("MagsacWeight needs a magsac loss spec");
  }
  if (!(residual >= 0.0)) {
    throw InvalidArgumentError("magsac residual must be non-negative");
  }
  const double sigma_max = spec.scale();
  if (residual >= spec.k() * sigma_max) return 0.0;
  const double a = 0.5 * (spec.nu() - 1);
  const double x = residual * residual / (2.0 * sigma_max * sigma_max);
  const double weight = spec.magsac_factor_ / sigma_max *
                        (UpperIncompleteGamma(a, x) - spec.gamma_at_k_);
  return weight > 0.0 ? weight : 0.0;
}

LossEval MagsacLoss(const LossSpec& spec, double residual) {
  const double w = MagsacWeight(spec, residual);
  LossEval eval;
  eval.value = spec.max_weight_ - w;
  const double sigma_max = spec.scale();
  if (residual >= spec.k() * sigma_max) {
    eval.weight = 0.0;
    return eval;
  }
  // d(rho)/ds = -w'(r) / (2r)
  //           = M 2^(a-1) x^(a-1) e^-x / sigma_max^3,  x = r^2 / (2 sigma^2)
  // The x^(a-1) factor diverges at r = 0 for nu = 2; x is floored there.
  const double a = 0.5 * (spec.nu() - 1);
  double x = residual * residual / (2.0 * sigma_max * sigma_max);
  if (a < 1.0) x = std::max(x, 1e-12);
  const double x_pow = a == 1.0 ? 1.0 : std::pow(x, a - 1.0);
  eval.weight = 0.5 * spec.magsac_factor_ * x_pow * std::exp(-x) /
                (sigma_max * sigma_max * sigma_max);
  return eval;
}

std::string_view LossName(LossType type) {
  for (const auto& [t, name] : kLossNames) {
    if (t == type) return name;
  }
  return "unknown";
}

LossType ParseLossType(std::string_view name) {
  for (const auto& [t, n] : kLossNames) {
    if (n == name) return t;
  }
  std::ostringstream msg;
  msg << "unknown loss '" << name << "'";
  throw InvalidArgumentError(msg.str());
}

const std::vector<LossType>& AllLossTypes() {
  static const std::vector<LossType> types = [] {
    std::vector<LossType> out;
    for (const auto& [t, name] : kLossNames) out.push_back(t);
    return out;
  }();
  return types;
}

}  // namespace rotavg
