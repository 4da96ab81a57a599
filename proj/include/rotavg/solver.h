#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rotavg/robust_loss.h"
#include "rotavg/so3.h"
#include "rotavg/view_graph.h"

namespace rotavg {

// How edge residuals are scaled before the robust loss.
enum class Weighting {
  kNone,         // r
  kInlierCount,  // r * sqrt(n / mean n)
  kCovTrace,     // r * sqrt(3 / trace C)
  kCovFro,       // r * sqrt(|C^-1|_F / sqrt(3))
  kCovFull,      // D^T r with D D^T = C^-1
};

std::string_view WeightingName(Weighting weighting);
Weighting ParseWeighting(std::string_view name);
const std::vector<Weighting>& AllWeightings();

// Default loss scale (sigma_max for Magsac): radians for kNone and
// kInlierCount, whitened units for the covariance modes.
double DefaultLossScale(LossType loss, Weighting weighting);

struct SolverConfig {
  LossSpec loss;
  Weighting weighting = Weighting::kNone;
  int max_outer_irls = 32;
  int max_inner_gn = 10;
  double gradient_tol = 1e-10;
  double step_tol = 1e-12;
  double cost_rel_tol = 1e-9;
  double damping_init = 1e-4;
  // Edges lacking the data a weighting mode needs get unit scaling instead of
  // raising ConfigError.
  bool unit_weight_fallback = true;
  // For redescending losses AverageRotations first solves with unweighted
  // SoftL1 at its default scale, then refines with the configured loss and
  // weighting.
  bool warm_start = true;
  // Worker threads for per-edge evaluation. Results do not depend on it.
  int num_threads = 1;
};

// Throws ConfigError on non-positive tolerances or iteration caps.
void ValidateSolverConfig(const SolverConfig& config);

struct AveragingResult {
  std::map<ViewId, Rotation> rotations;
  double final_cost = 0.0;
  int outer_iterations = 0;
  bool converged = false;
  std::string termination;
  // Final IRLS weights d(rho)/ds and unweighted residual angles (radians).
  std::map<EdgeKey, double> edge_weights;
  std::map<EdgeKey, double> edge_residual_norms;
  // Robust cost at the initial point and after every outer iteration.
  std::vector<double> cost_history;
  // Edges that fell back to unit scaling (missing covariance/inliers).
  int num_fallback_edges = 0;
};

// Per-edge linear scaling W such that the weighted residual is W * r.
class EdgeWhitening {
 public:
  EdgeWhitening(const ViewGraph& graph, Weighting weighting,
                bool unit_weight_fallback);

  const Eigen::Matrix3d& Matrix(const EdgeKey& key) const {
    return matrices_.at(key);
  }
  int num_fallback_edges() const { return num_fallback_; }
  double mean_inliers() const { return mean_inliers_; }

 private:
  std::map<EdgeKey, Eigen::Matrix3d> matrices_;
  int num_fallback_ = 0;
  double mean_inliers_ = 1.0;
};

// Scaling matrix of a single edge. mean_inliers is the graph-wide mean
// inlier count. Sets *fell_back when unit scaling had to be substituted; if
// fell_back is null a missing field raises ConfigError instead.
Eigen::Matrix3d EdgeWhiteningMatrix(const EdgeMeasurement& edge,
                                    Weighting weighting, double mean_inliers,
                                    bool* fell_back);

Eigen::Vector3d EdgeWeightedResidual(const EdgeMeasurement& edge,
                                     const Rotation& ri, const Rotation& rj,
                                     Weighting weighting,
                                     double mean_inliers = 1.0);

// sum_e rho(|W_e r_e|^2), summed in edge key order.
double Cost(const ViewGraph& graph, const std::map<ViewId, Rotation>& rotations,
            const SolverConfig& config);

// sum_e |R_ij R_j - R_i|_F^2; zero exactly when every R_ij = R_i R_j^T.
double ChordalCost(const ViewGraph& graph,
                   const std::map<ViewId, Rotation>& rotations);

// IRLS outer loop around damped Gauss-Newton on R_i <- R_i Exp(d_i). The
// smallest id is held at its initial rotation. Throws DataError if the graph
// is disconnected or init misses a node, NumericalError on a non-finite cost.
AveragingResult Solve(const ViewGraph& graph,
                      const std::map<ViewId, Rotation>& init,
                      const SolverConfig& config);

// True for losses whose influence decays for large residuals (everything but
// trivial, huber and soft_l1).
bool IsRedescending(LossType type);

// Splits the graph into connected components, initializes each from its
// maximum spanning tree and solves them independently.
AveragingResult AverageRotations(const ViewGraph& graph,
                                 const SolverConfig& config,
                                 TreeWeight tree_weight = TreeWeight::kAuto);

}  // namespace rotavg
