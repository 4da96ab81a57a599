#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rotavg {

enum class LossType {
  kTrivial,
  kHuber,
  kSoftL1,
  kCauchy,
  kTukey,
  kGemanMcClure,
  kLHalf,
  kMagsac,
};

// Loss value and IRLS weight d(rho)/ds at a squared residual s.
struct LossEval {
  double value = 0.0;
  double weight = 0.0;
};

// A robust loss rho(s) applied to the squared residual norm s = |r|^2.
//
// The classic losses are scaled so that rho(s) ~= s and rho'(0) = 1. All of
// them are concave in s, which is what makes every IRLS step
// non-increasing.
//
// Magsac marginalizes the trimmed chi inlier density over a uniform prior
// sigma ~ U(0, sigma_max):
//
//   w(r) = 1/sigma_max * M(nu) * 2^((nu-1)/2) *
//          (Gamma((nu-1)/2, r^2 / (2 sigma_max^2)) - Gamma((nu-1)/2, k^2/2))
//
// for r < k sigma_max and 0 beyond, with M(nu) = 1 / (2^(nu/2) Gamma(nu/2))
// and k the alpha-quantile of the chi distribution with nu degrees of
// freedom. The loss is rho = w(0) - w(r).
class LossSpec {
 public:
  // Defaults to the trivial (least-squares) loss.
  LossSpec() = default;

  static LossSpec Trivial();
  static LossSpec Huber(double delta);
  static LossSpec SoftL1(double scale);
  static LossSpec Cauchy(double c);
  static LossSpec Tukey(double c);
  static LossSpec GemanMcClure(double c);
  static LossSpec LHalf(double scale);
  // nu >= 2, alpha in (0.5, 1). Throws InvalidArgumentError otherwise.
  static LossSpec Magsac(double sigma_max, int nu = 3, double alpha = 0.99);
  // Scale is interpreted as sigma_max for Magsac and ignored for Trivial.
  static LossSpec Make(LossType type, double scale, int nu = 3,
                       double alpha = 0.99);

  LossType type() const { return type_; }
  double scale() const { return scale_; }
  int nu() const { return nu_; }
  double alpha() const { return alpha_; }
  // Chi quantile k (Magsac only).
  double k() const { return k_; }
  // w(0) (Magsac only).
  double max_weight() const { return max_weight_; }

  // rho and d(rho)/ds at squared residual s >= 0.
  LossEval Evaluate(double squared_residual) const;

 private:
  LossSpec(LossType type, double scale);

  LossType type_ = LossType::kTrivial;
  double scale_ = 1.0;
  int nu_ = 3;
  double alpha_ = 0.99;
  double k_ = 0.0;
  // Magsac constants: M(nu) 2^a with a = (nu-1)/2, Gamma(a, k^2/2), w(0).
  double magsac_factor_ = 0.0;
  double gamma_at_k_ = 0.0;
  double max_weight_ = 0.0;

  friend double MagsacWeight(const LossSpec& spec, double residual);
  friend LossEval MagsacLoss(const LossSpec& spec, double residual);
};

// Classic (non-Magsac) losses. Throws InvalidArgumentError for s < 0.
LossEval ClassicLoss(const LossSpec& spec, double squared_residual);

// Marginalized inlier weight w(r) for a residual norm r >= 0.
double MagsacWeight(const LossSpec& spec, double residual);

// rho(r) = w(0) - w(r) with the IRLS weight taken with respect to s = r^2.
LossEval MagsacLoss(const LossSpec& spec, double residual);

std::string_view LossName(LossType type);
// Accepts the names printed by LossName(). Throws InvalidArgumentError.
LossType ParseLossType(std::string_view name);
const std::vector<LossType>& AllLossTypes();

}  // namespace rotavg
