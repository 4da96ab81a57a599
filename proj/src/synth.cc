#include "rotavg/synth.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rotavg/errors.h"

namespace rotavg {
namespace {

constexpr double kDegToRad = M_PI / 180.0;

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Draws a connected Erdos-Renyi pair set.
std::vector<EdgeKey> ConnectedPairs(const SynthConfig& config,
                                    std::uint64_t* stream) {
  const int n = config.n_cameras;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    CounterRng rng(config.seed, (*stream)++);
    std::vector<EdgeKey> pairs;
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    int components = n;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (rng.Uniform() < config.edge_density) {
          pairs.emplace_back(a, b);
          const int ra = find(a);
          const int rb = find(b);
          if (ra != rb) {
            parent[std::max(ra, rb)] = std::min(ra, rb);
            --components;
          }
        }
      }
    }
    if (components <= 1) return pairs;
  }
  std::ostringstream msg;
  msg << "no connected graph after " << config.max_retries
      << " retries; increase the edge density";
  throw DataError(msg.str());
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(SplitMix64(seed) ^ SplitMix64(stream + 0x632be59bd9b4e019ULL)) {}

std::uint64_t CounterRng::NextU64() {
  return SplitMix64(key_ + 0x9e3779b97f4a7c15ULL * (++counter_));
}

double CounterRng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double CounterRng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  spare_ = radius * std::sin(2.0 * M_PI * u2);
  has_spare_ = true;
  return radius * std::cos(2.0 * M_PI * u2);
}

Eigen::Vector3d CounterRng::Normal3() {
  const double x = Normal();
  const double y = Normal();
  const double z = Normal();
  return {x, y, z};
}

Rotation CounterRng::UniformRotation() {
  const double w = Normal();
  const double x = Normal();
  const double y = Normal();
  const double z = Normal();
  return Rotation::FromQuaternion(w, x, y, z);
}

void ValidateSynthConfig(const SynthConfig& config) {
  if (config.n_cameras < 2) {
    throw InvalidArgumentError("synth needs at least 2 cameras");
  }
  if (!(config.edge_density > 0.0 && config.edge_density <= 1.0)) {
    throw InvalidArgumentError("edge density must be in (0, 1]");
  }
  if (!(config.outlier_fraction >= 0.0 && config.outlier_fraction <= 1.0)) {
    throw InvalidArgumentError("outlier fraction must be in [0, 1]");
  }
  if (config.noise.empty()) {
    throw InvalidArgumentError("noise mixture is empty");
  }
  double total = 0.0;
  for (const NoiseComponent& c : config.noise) {
    if (!(c.fraction >= 0.0) || !(c.sigma_deg >= 0.0) ||
        !std::isfinite(c.sigma_deg)) {
      throw InvalidArgumentError(
          "noise components need fraction >= 0 and finite sigma >= 0");
    }
    total += c.fraction;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgumentError("noise fractions must sum to 1");
  }
  if (config.max_retries < 0) {
    throw InvalidArgumentError("max_retries must be non-negative");
  }
}

SynthScene GenerateGraph(const SynthConfig& config) {
  ValidateSynthConfig(config);
  std::uint64_t stream = 0;
  const std::vector<EdgeKey> pairs = ConnectedPairs(config, &stream);
  CounterRng rng(config.seed, 1000003 + stream);

  SynthScene scene;
  std::vector<Rotation> gt(config.n_cameras);
  for (int n = 0; n < config.n_cameras; ++n) {
    gt[n] = rng.UniformRotation();
    scene.graph.AddNode({n, gt[n]});
  }

  double sigma_min = config.noise.front().sigma_deg;
  for (const NoiseComponent& c : config.noise) {
    sigma_min = std::min(sigma_min, c.sigma_deg);
  }
  auto draw_component = [&]() -> const NoiseComponent& {
    const double u = rng.Uniform();
    double cumulative = 0.0;
    for (const NoiseComponent& c : config.noise) {
      cumulative += c.fraction;
      if (u < cumulative) return c;
    }
    return config.noise.back();
  };
  auto draw_inliers = [&](double sigma_deg) {
    const double quality =
        sigma_deg > 0.0 && sigma_min > 0.0 ? std::sqrt(sigma_min / sigma_deg)
                                           : 1.0;
    const double n = 200.0 * quality * std::exp(0.5 * rng.Normal());
    return std::max<std::int64_t>(15, std::llround(n));
  };

  // Outlier selection by a partial Fisher-Yates shuffle.
  const std::size_t num_outliers = static_cast<std::size_t>(
      std::llround(config.outlier_fraction * static_cast<double>(pairs.size())));
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = 0; k < num_outliers; ++k) {
    const std::size_t pick =
        k + static_cast<std::size_t>(rng.Uniform() *
                                     static_cast<double>(pairs.size() - k));
    std::swap(order[k], order[std::min(pick, pairs.size() - 1)]);
  }
  std::vector<bool> is_outlier(pairs.size(), false);
  for (std::size_t k = 0; k < num_outliers; ++k) is_outlier[order[k]] = true;

  for (std::size_t e = 0; e < pairs.size(); ++e) {
    const auto [a, b] = pairs[e];
    const NoiseComponent& component = draw_component();
    const double sigma = component.sigma_deg * kDegToRad;
    const Eigen::Vector3d eps = sigma * rng.Normal3();

    EdgeMeasurement edge;
    edge.i = a;
    edge.j = b;
    edge.inlier_count = draw_inliers(component.sigma_deg);
    double reported_sigma = sigma;
    if (is_outlier[e]) {
      edge.rotation = rng.UniformRotation();
      reported_sigma = sigma_min * kDegToRad;
      scene.outlier_edges.push_back(edge.key());
    } else {
      edge.rotation = ExpSO3(eps) * gt[a] * gt[b].Inverse();
    }
    if (config.report_true_covariance && reported_sigma > 0.0) {
      edge.covariance =
          reported_sigma * reported_sigma * Eigen::Matrix3d::Identity();
    }
    scene.edge_sigma_deg.emplace(edge.key(), component.sigma_deg);
    scene.graph.AddEdge(std::move(edge));
  }
  return scene;
}

TwoViewScene GenerateTwoViewScene(int n_points, double pixel_sigma,
                                  const Rotation& rotation,
                                  const Eigen::Vector3d& baseline,
                                  const CameraIntrinsics& intrinsics_i,
                                  const CameraIntrinsics& intrinsics_j,
                                  std::uint64_t seed) {
  if (n_points < 8) {
    throw InvalidArgumentError("two-view scenes need at least 8 points");
  }
  if (!(baseline.norm() > 1e-12)) {
    throw InvalidArgumentError("two-view scene needs a non-zero baseline");
  }
  if (!(pixel_sigma >= 0.0)) {
    throw InvalidArgumentError("pixel sigma must be non-negative");
  }
  CounterRng rng(seed, 0);
  TwoViewScene scene;
  scene.geometry.rotation = rotation;
  scene.geometry.translation = baseline.normalized();
  scene.geometry.intrinsics_i = intrinsics_i;
  scene.geometry.intrinsics_j = intrinsics_j;

  const Eigen::Matrix3d R = rotation.matrix();
  const long max_draws = 1000L * n_points;
  for (long draw = 0;
       draw < max_draws && static_cast<int>(scene.points.size()) < n_points;
       ++draw) {
    const Eigen::Vector3d xi(rng.Uniform(-2.0, 2.0), rng.Uniform(-2.0, 2.0),
                             rng.Uniform(4.0, 8.0));
    const Eigen::Vector3d xj = R * (xi + baseline);
    if (xj.z() < 0.1) continue;
    const Eigen::Vector3d pi = intrinsics_i.K() * xi;
    const Eigen::Vector3d pj = intrinsics_j.K() * xj;
    Correspondence exact;
    exact.p = pi.hnormalized();
    exact.p_prime = pj.hnormalized();
    Correspondence noisy = exact;
    noisy.p.x() += pixel_sigma * rng.Normal();
    noisy.p.y() += pixel_sigma * rng.Normal();
    noisy.p_prime.x() += pixel_sigma * rng.Normal();
    noisy.p_prime.y() += pixel_sigma * rng.Normal();
    scene.points.push_back(xi);
    scene.exact.push_back(exact);
    scene.geometry.inliers.push_back(noisy);
  }
  if (static_cast<int>(scene.points.size()) < n_points) {
    throw DataError("two-view scene: too few points visible in both views");
  }
  return scene;
}

}  // namespace rotavg
