#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Core>

#include "rotavg/so3.h"
#include "rotavg/two_view.h"
#include "rotavg/view_graph.h"

namespace rotavg {

// Counter-based generator: the n-th draw is SplitMix64(seed, n), so a stream
// is fully determined by (seed, stream) and independent of the platform's
// standard-library distributions.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t NextU64();
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Standard normal (Box-Muller; both variates are used).
  double Normal();
  Eigen::Vector3d Normal3();
  // Uniform on SO(3).
  Rotation UniformRotation();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct NoiseComponent {
  double fraction = 1.0;
  double sigma_deg = 1.0;
};

struct SynthConfig {
  int n_cameras = 50;
  double edge_density = 0.25;
  std::vector<NoiseComponent> noise = {{0.5, 0.5}, {0.5, 5.0}};
  double outlier_fraction = 0.1;
  std::uint64_t seed = 7;
  bool report_true_covariance = true;
  // Retries (with fresh random streams) until the graph is connected.
  int max_retries = 100;
};

// Throws InvalidArgumentError unless fractions sum to 1 (1e-9), every
// sigma is >= 0, density is in (0, 1] and the outlier fraction in [0, 1].
void ValidateSynthConfig(const SynthConfig& config);

struct SynthScene {
  ViewGraph graph;
  std::vector<EdgeKey> outlier_edges;
  // Noise level each edge was drawn with (degrees); outliers keep the
  // component they were assigned before replacement.
  std::map<EdgeKey, double> edge_sigma_deg;
};

// Random view graph with ground truth on every node.
//
// Inlier edge (i, j) measures Exp(eps) R_i R_j^T with eps ~ N(0, sigma^2 I),
// sigma drawn from the mixture. Outlier edges carry uniform random
// rotations but keep the covariance of the smallest mixture sigma, so they
// look confident. Inlier counts are larger for the less noisy components:
//   n = max(15, round(200 sqrt(sigma_min / sigma) exp(0.5 z))), z ~ N(0,1).
// Zero-sigma components produce exact measurements without covariance.
SynthScene GenerateGraph(const SynthConfig& config);

struct TwoViewScene {
  TwoViewGeometry geometry;  // at the true pose, noisy inliers
  std::vector<Eigen::Vector3d> points;  // view-i camera coordinates
  std::vector<Correspondence> exact;    // noise-free projections
};

// Points uniform in the box [-2, 2] x [-2, 2] x [4, 8] of camera i, kept only
// when they are at least 0.1 in front of camera j, where
// X_j = rotation * (X_i + baseline). Both projections get N(0, pixel_sigma^2)
// noise per coordinate. Throws InvalidArgumentError for n_points < 8 or a
// zero baseline.
TwoViewScene GenerateTwoViewScene(int n_points, double pixel_sigma,
                                  const Rotation& rotation,
                                  const Eigen::Vector3d& baseline,
                                  const CameraIntrinsics& intrinsics_i,
                                  const CameraIntrinsics& intrinsics_j,
                                  std::uint64_t seed);

}  // namespace rotavg
