#include "rotavg/robust_loss.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "rotavg/errors.h"

namespace rotavg {
namespace {

const std::vector<LossType> kClassic = {
    LossType::kTrivial, LossType::kHuber,        LossType::kSoftL1,
    LossType::kCauchy,  LossType::kTukey,        LossType::kGemanMcClure,
    LossType::kLHalf};

TEST(ClassicLoss, HandValues) {
  const LossEval trivial = LossSpec::Trivial().Evaluate(0.09);
  EXPECT_DOUBLE_EQ(trivial.value, 0.09);
  EXPECT_DOUBLE_EQ(trivial.weight, 1.0);
  EXPECT_DOUBLE_EQ(LossSpec::Huber(1.0).Evaluate(0.25).value, 0.25);
  const LossEval cauchy = LossSpec::Cauchy(1.0).Evaluate(1.0);
  EXPECT_NEAR(cauchy.value, std::log(2.0), 1e-15);
  EXPECT_NEAR(cauchy.weight, 0.5, 1e-15);
}

TEST(ClassicLoss, MatchesReferenceFormulas) {
  for (LossType type : kClassic) {
    for (double scale : {0.02, 0.3, 2.0}) {
      const LossSpec spec = LossSpec::Make(type, scale);
      const std::string name(LossName(type));
      for (double u : {0.0, 1e-6, 0.01, 0.5, 0.99, 1.0, 1.01, 3.0, 100.0}) {
        const double s = u * scale * scale;
        const double expected = oracle::ClassicLossValue(name.c_str(), s, scale);
        EXPECT_NEAR(spec.Evaluate(s).value, expected,
                    1e-13 * std::max(1e-3, std::abs(expected)))
            << name << " s=" << s;
      }
    }
  }
}

TEST(ClassicLoss, WeightIsDerivative) {
  for (LossType type : kClassic) {
    const LossSpec spec = LossSpec::Make(type, 0.5);
    for (double s : {1e-4, 0.01, 0.1, 0.2, 0.3, 1.0, 4.0}) {
      const double h = 1e-6 * s;
      const double fd =
          (spec.Evaluate(s + h).value - spec.Evaluate(s - h).value) / (2 * h);
      EXPECT_NEAR(spec.Evaluate(s).weight, fd, 1e-6) << LossName(type);
    }
  }
}

TEST(ClassicLoss, ShapeProperties) {
  for (LossType type : kClassic) {
    const LossSpec spec = LossSpec::Make(type, 0.7);
    EXPECT_EQ(spec.Evaluate(0.0).value, 0.0);
    EXPECT_DOUBLE_EQ(spec.Evaluate(0.0).weight, 1.0) << LossName(type);
    double previous = 0.0;
    for (int n = 1; n <= 1000; ++n) {
      const LossEval e = spec.Evaluate(0.01 * n);
      EXPECT_GE(e.value, previous);
      EXPECT_GE(e.weight, 0.0);
      previous = e.value;
    }
  }
}

TEST(ClassicLoss, NegativeArgumentIsInvalid) {
  EXPECT_THROW(LossSpec::Cauchy(1.0).Evaluate(-1e-3), InvalidArgumentError);
  EXPECT_THROW(LossSpec::Cauchy(-1.0), InvalidArgumentError);
  EXPECT_THROW(LossSpec::Huber(0.0), InvalidArgumentError);
}

TEST(Magsac, Validation) {
  EXPECT_THROW(LossSpec::Magsac(1.0, 1), InvalidArgumentError);
  EXPECT_THROW(LossSpec::Magsac(1.0, 3, 0.5), InvalidArgumentError);
  EXPECT_THROW(LossSpec::Magsac(1.0, 3, 1.0), InvalidArgumentError);
  EXPECT_THROW(LossSpec::Magsac(0.0), InvalidArgumentError);
  const LossSpec spec = LossSpec::Magsac(0.02);
  EXPECT_EQ(spec.nu(), 3);
  EXPECT_EQ(spec.alpha(), 0.99);
  EXPECT_NEAR(spec.k(), 3.3682, 1e-3);
}

TEST(Magsac, ClosedFormForThreeDegreesOfFreedom) {
  const LossSpec spec = LossSpec::Magsac(1.0, 3, 0.99);
  const double k = spec.k();
  auto expected = [k](double r) {
    return 2.0 / std::sqrt(2.0 * M_PI) *
           (std::exp(-r * r / 2.0) - std::exp(-k * k / 2.0));
  };
  EXPECT_NEAR(MagsacWeight(spec, 0.0), 0.7951, 1e-4);
  for (double r : {0.0, 0.1, 0.5, 1.0, 2.0, 3.0, 3.3}) {
    EXPECT_NEAR(MagsacWeight(spec, r), expected(r), 1e-14);
  }
  EXPECT_EQ(MagsacWeight(spec, k), 0.0);
  EXPECT_NEAR(MagsacLoss(spec, 1.0).value,
              2.0 / std::sqrt(2.0 * M_PI) * (1.0 - std::exp(-0.5)), 1e-14);
  EXPECT_NEAR(MagsacLoss(spec, 1.0).value, 0.31394, 1e-5);
}

TEST(Magsac, WeightMatchesQuadrature) {
  for (int nu : {2, 3, 4}) {
    for (double alpha : {0.95, 0.99}) {
      for (double sigma_max : {0.02, 0.1, 1.0}) {
        const LossSpec spec = LossSpec::Magsac(sigma_max, nu, alpha);
        const double r_max = 1.5 * spec.k() * sigma_max;
        for (int n = 0; n <= 60; ++n) {
          const double r = r_max * n / 60.0;
          EXPECT_NEAR(MagsacWeight(spec, r),
                      oracle::MagsacWeightQuadrature(r, sigma_max, nu, alpha),
                      1e-6)
              << "nu=" << nu << " alpha=" << alpha << " sigma=" << sigma_max
              << " r=" << r;
        }
      }
    }
  }
}

TEST(Magsac, LossShape) {
  for (double sigma_max : {0.02, 0.1, 1.0}) {
    const LossSpec spec = LossSpec::Magsac(sigma_max);
    const double cutoff = spec.k() * sigma_max;
    EXPECT_EQ(MagsacLoss(spec, 0.0).value, 0.0);
    double previous = 0.0;
    for (int n = 1; n < 1000; ++n) {
      const double value = MagsacLoss(spec, cutoff * n / 1000.0).value;
      EXPECT_GT(value, previous);
      previous = value;
    }
    for (double factor : {1.0, 1.001, 2.0, 100.0}) {
      EXPECT_EQ(MagsacLoss(spec, factor * cutoff).value, spec.max_weight());
      EXPECT_EQ(MagsacLoss(spec, factor * cutoff).weight, 0.0);
    }
    const double below = MagsacWeight(spec, cutoff * (1.0 - 1e-15));
    EXPECT_LE(below, 1e-12);
    EXPECT_GE(below, 0.0);
    EXPECT_NEAR(MagsacLoss(spec, cutoff * (1.0 - 1e-15)).value,
                spec.max_weight(), 1e-12);
  }
}

TEST(Magsac, IrlsWeightIsDerivative) {
  for (int nu : {2, 3, 4}) {
    const LossSpec spec = LossSpec::Magsac(0.5, nu);
    for (double r : {0.05, 0.2, 0.5, 1.0, 1.5}) {
      const double s = r * r;
      const double h = 1e-7 * s;
      const double fd = (spec.Evaluate(s + h).value -
                         spec.Evaluate(s - h).value) / (2.0 * h);
      EXPECT_NEAR(spec.Evaluate(s).weight, fd, 1e-5 * std::max(1.0, fd));
    }
    EXPECT_TRUE(std::isfinite(spec.Evaluate(0.0).weight));
    EXPECT_GE(spec.Evaluate(0.0).weight, 0.0);
  }
}

TEST(Names, RoundTrip) {
  EXPECT_EQ(AllLossTypes().size(), 8u);
  for (LossType type : AllLossTypes()) {
    EXPECT_EQ(ParseLossType(LossName(type)), type);
  }
  EXPECT_EQ(LossName(LossType::kGemanMcClure), "gm");
  EXPECT_THROW(ParseLossType("l2"), InvalidArgumentError);
}

// One IRLS step on a location model never increases the robust cost.
TEST(Irls, LocationStepDoesNotIncreaseCost) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> inlier(0.0, 0.1);
  std::uniform_real_distribution<double> outlier(-3.0, 3.0);
  std::uniform_real_distribution<double> start(-0.5, 0.5);
  for (LossType type : AllLossTypes()) {
    const LossSpec spec = LossSpec::Make(type, 0.3);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> x;
      for (int n = 0; n < 30; ++n) x.push_back(n % 4 == 0 ? outlier(rng) : inlier(rng));
      auto cost = [&](double mu) {
        double c = 0.0;
        for (double v : x) c += spec.Evaluate((v - mu) * (v - mu)).value;
        return c;
      };
      double mu = start(rng);
      for (int step = 0; step < 5; ++step) {
        double num = 0.0, den = 0.0;
        for (double v : x) {
          const double w = spec.Evaluate((v - mu) * (v - mu)).weight;
          num += w * v;
          den += w;
        }
        if (den <= 0.0) break;
        const double next = num / den;
        EXPECT_LE(cost(next), cost(mu) + 1e-12) << LossName(type);
        mu = next;
      }
    }
  }
}

}  // namespace
}  // namespace rotavg
