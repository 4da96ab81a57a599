#include "rotavg/solver.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "parallel.h"
#include "rotavg/errors.h"

namespace rotavg {
namespace {

// Graphs with up to 64 nodes use a dense solve of the normal equations.
constexpr int kDenseSolveMaxParams = 3 * 63;

constexpr std::array<std::pair<Weighting, std::string_view>, 5>
    kWeightingNames = {{
        {Weighting::kNone, "none"},
        {Weighting::kInlierCount, "inlier_count"},
        {Weighting::kCovTrace, "cov_trace"},
        {Weighting::kCovFro, "cov_fro"},
        {Weighting::kCovFull, "cov_full"},
    }};

std::string EdgeLabel(const EdgeKey& key) {
  std::ostringstream out;
  out << "edge (" << key.first << ", " << key.second << ")";
  return out.str();
}

double MeanInlierCount(const ViewGraph& graph) {
  double sum = 0.0;
  int count = 0;
  for (const auto& [key, edge] : graph.edges()) {
    if (edge.inlier_count) {
      sum += static_cast<double>(*edge.inlier_count);
      ++count;
    }
  }
  return count > 0 && sum > 0.0 ? sum / count : 1.0;
}

struct EdgeBlock {
  Eigen::Vector3d residual;           // unweighted
  Eigen::Vector3d weighted_residual;  // W r
  Eigen::Matrix3d jac_i;              // W dr/dd_i
  Eigen::Matrix3d jac_j;              // W dr/dd_j
};

// Flattened view of a connected graph for the solver.
class Problem {
 public:
  Problem(const ViewGraph& graph, const SolverConfig& config)
      : config_(config),
        whitening_(graph, config.weighting, config.unit_weight_fallback) {
    for (const auto& [id, node] : graph.nodes()) {
      index_.emplace(id, static_cast<int>(ids_.size()));
      ids_.push_back(id);
    }
    for (const auto& [key, edge] : graph.edges()) {
      edges_.push_back(&edge);
      endpoints_.emplace_back(index_.at(edge.i), index_.at(edge.j));
      scaling_.push_back(whitening_.Matrix(key));
    }
  }

  std::size_t num_nodes() const { return ids_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<ViewId>& ids() const { return ids_; }
  const EdgeMeasurement& edge(std::size_t e) const { return *edges_[e]; }
  int num_fallback_edges() const { return whitening_.num_fallback_edges(); }

  std::vector<EdgeBlock> Evaluate(const std::vector<Rotation>& rotations,
                                  bool with_jacobians) const {
    std::vector<EdgeBlock> blocks(edges_.size());
    internal::ParallelFor(
        edges_.size(), config_.num_threads, [&](std::size_t e) {
          const auto [i, j] = endpoints_[e];
          EdgeBlock& block = blocks[e];
          block.residual = RelativeResidual(rotations[i], rotations[j],
                                            edges_[e]->rotation);
          block.weighted_residual = scaling_[e] * block.residual;
          if (with_jacobians) {
            // r(d) = Log(E Exp(R_i (d_j - d_i)))
            const Eigen::Matrix3d d_r =
                scaling_[e] * RightJacobianInverse(block.residual) *
                rotations[i].matrix();
            block.jac_i = -d_r;
            block.jac_j = d_r;
          }
        });
    return blocks;
  }

  double RobustCost(const std::vector<EdgeBlock>& blocks,
                    std::vector<double>* weights) const {
    double cost = 0.0;
    if (weights) weights->resize(blocks.size());
    for (std::size_t e = 0; e < blocks.size(); ++e) {
      const LossEval eval =
          config_.loss.Evaluate(blocks[e].weighted_residual.squaredNorm());
      if (!std::isfinite(eval.value)) {
        throw NumericalError("non-finite cost at " +
                             EdgeLabel(edges_[e]->key()));
      }
      cost += eval.value;
      if (weights) (*weights)[e] = std::max(0.0, eval.weight);
    }
    return cost;
  }

  static double WeightedSquares(const std::vector<EdgeBlock>& blocks,
                                const std::vector<double>& weights) {
    double sum = 0.0;
    for (std::size_t e = 0; e < blocks.size(); ++e) {
      sum += weights[e] * blocks[e].weighted_residual.squaredNorm();
    }
    return sum;
  }

  const std::pair<int, int>& endpoints(std::size_t e) const {
    return endpoints_[e];
  }

 private:
  const SolverConfig& config_;
  EdgeWhitening whitening_;
  std::map<ViewId, int> index_;
  std::vector<ViewId> ids_;
  std::vector<const EdgeMeasurement*> edges_;
  std::vector<std::pair<int, int>> endpoints_;
  std::vector<Eigen::Matrix3d> scaling_;
};

// Normal equations H d = -g over the free nodes (node 0 is the gauge).
struct NormalEquations {
  int num_params = 0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd dense;
  Eigen::SparseMatrix<double> sparse;
  Eigen::VectorXd diagonal;
  bool is_sparse = false;
};

NormalEquations Assemble(const Problem& problem,
                         const std::vector<EdgeBlock>& blocks,
                         const std::vector<double>& weights) {
  NormalEquations eq;
  eq.num_params = 3 * (static_cast<int>(problem.num_nodes()) - 1);
  eq.is_sparse = eq.num_params > kDenseSolveMaxParams;
  eq.gradient = Eigen::VectorXd::Zero(eq.num_params);
  eq.diagonal = Eigen::VectorXd::Zero(eq.num_params);
  std::vector<Eigen::Triplet<double>> triplets;
  if (eq.is_sparse) {
    triplets.reserve(problem.num_edges() * 36);
  } else {
    eq.dense = Eigen::MatrixXd::Zero(eq.num_params, eq.num_params);
  }

  auto add_block = [&](int a, int b, const Eigen::Matrix3d& m) {
    if (eq.is_sparse) {
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          triplets.emplace_back(a + r, b + c, m(r, c));
        }
      }
    } else {
      eq.dense.block<3, 3>(a, b) += m;
    }
  };

  for (std::size_t e = 0; e < blocks.size(); ++e) {
    const double w = weights[e];
    if (w == 0.0) continue;
    const EdgeBlock& block = blocks[e];
    const auto [i, j] = problem.endpoints(e);
    // Parameter offsets; the gauge node (index 0) has none.
    const int pi = i == 0 ? -1 : 3 * (i - 1);
    const int pj = j == 0 ? -1 : 3 * (j - 1);
    if (pi >= 0) {
      eq.gradient.segment<3>(pi) +=
          w * block.jac_i.transpose() * block.weighted_residual;
      add_block(pi, pi, w * block.jac_i.transpose() * block.jac_i);
    }
    if (pj >= 0) {
      eq.gradient.segment<3>(pj) +=
          w * block.jac_j.transpose() * block.weighted_residual;
      add_block(pj, pj, w * block.jac_j.transpose() * block.jac_j);
    }
    if (pi >= 0 && pj >= 0) {
      const Eigen::Matrix3d cross = w * block.jac_i.transpose() * block.jac_j;
      add_block(pi, pj, cross);
      add_block(pj, pi, cross.transpose());
    }
  }

  if (eq.is_sparse) {
    eq.sparse.resize(eq.num_params, eq.num_params);
    eq.sparse.setFromTriplets(triplets.begin(), triplets.end());
    eq.diagonal = eq.sparse.diagonal();
  } else {
    eq.diagonal = eq.dense.diagonal();
  }
  return eq;
}

// Solves (H + lambda * D) d = -g with D = max(diag(H), floor).
bool SolveDamped(const NormalEquations& eq, double lambda,
                 Eigen::VectorXd* step) {
  const double floor =
      1e-12 * std::max(1.0, eq.diagonal.cwiseAbs().maxCoeff());
  const Eigen::VectorXd damping =
      lambda * eq.diagonal.cwiseMax(floor);
  if (eq.is_sparse) {
    Eigen::SparseMatrix<double> system = eq.sparse;
    for (int k = 0; k < eq.num_params; ++k) {
      system.coeffRef(k, k) += damping(k);
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(system);
    if (solver.info() != Eigen::Success) return false;
    *step = solver.solve(-eq.gradient);
    return solver.info() == Eigen::Success && step->allFinite();
  }
  Eigen::MatrixXd system = eq.dense;
  system.diagonal() += damping;
  Eigen::LDLT<Eigen::MatrixXd> solver(system);
  if (solver.info() != Eigen::Success) return false;
  *step = solver.solve(-eq.gradient);
  return step->allFinite();
}

std::vector<Rotation> Retract(const std::vector<Rotation>& rotations,
                              const Eigen::VectorXd& step) {
  std::vector<Rotation> updated = rotations;
  for (std::size_t n = 1; n < rotations.size(); ++n) {
    updated[n] = rotations[n] *
                 ExpSO3(step.segment<3>(3 * static_cast<int>(n - 1)));
  }
  return updated;
}

}  // namespace

std::string_view WeightingName(Weighting weighting) {
  for (const auto& [w, name] : kWeightingNames) {
    if (w == weighting) return name;
  }
  return "unknown";
}

Weighting ParseWeighting(std::string_view name) {
  for (const auto& [w, n] : kWeightingNames) {
    if (n == name) return w;
  }
  std::ostringstream msg;
  msg << "unknown weighting '" << name << "'";
  throw InvalidArgumentError(msg.str());
}

const std::vector<Weighting>& AllWeightings() {
  static const std::vector<Weighting> all = [] {
    std::vector<Weighting> out;
    for (const auto& [w, name] : kWeightingNames) out.push_back(w);
    return out;
  }();
  return all;
}

double DefaultLossScale(LossType loss, Weighting weighting) {
  const bool whitened = weighting == Weighting::kCovTrace ||
                        weighting == Weighting::kCovFro ||
                        weighting == Weighting::kCovFull;
  if (whitened) return loss == LossType::kMagsac ? 4.0 : 2.0;
  return weighting == Weighting::kInlierCount ? 0.06 : 0.02;
}

void ValidateSolverConfig(const SolverConfig& config) {
  if (config.max_outer_irls < 1 || config.max_inner_gn < 1) {
    throw ConfigError("iteration caps must be at least 1");
  }
  if (!(config.gradient_tol > 0.0) || !(config.step_tol > 0.0) ||
      !(config.cost_rel_tol > 0.0) || !(config.damping_init > 0.0)) {
    throw ConfigError("solver tolerances and damping must be positive");
  }
  if (config.num_threads < 1) {
    throw ConfigError("thread count must be at least 1");
  }
}

Eigen::Matrix3d EdgeWhiteningMatrix(const EdgeMeasurement& edge,
                                    Weighting weighting, double mean_inliers,
                                    bool* fell_back) {
  const Eigen::Matrix3d identity = Eigen::Matrix3d::Identity();
  auto missing = [&](const char* what) {
    if (fell_back == nullptr) {
      throw ConfigError(EdgeLabel(edge.key()) + " has no " + what +
                        " required by weighting '" +
                        std::string(WeightingName(weighting)) + "'");
    }
    *fell_back = true;
    return identity;
  };
  if (fell_back) *fell_back = false;

  switch (weighting) {
    case Weighting::kNone:
      return identity;
    case Weighting::kInlierCount:
      if (!edge.inlier_count) return missing("inlier count");
      return std::sqrt(static_cast<double>(*edge.inlier_count) /
                       mean_inliers) *
             identity;
    case Weighting::kCovTrace:
      if (!edge.covariance) return missing("covariance");
      return std::sqrt(3.0 / edge.covariance->trace()) * identity;
    case Weighting::kCovFro: {
      if (!edge.whitener) return missing("covariance");
      const Eigen::Matrix3d information =
          *edge.whitener * edge.whitener->transpose();
      return std::sqrt(information.norm() / std::sqrt(3.0)) * identity;
    }
    case Weighting::kCovFull:
      if (!edge.whitener) return missing("whitener");
      return edge.whitener->transpose();
  }
  return identity;
}

EdgeWhitening::EdgeWhitening(const ViewGraph& graph, Weighting weighting,
                             bool unit_weight_fallback)
    : mean_inliers_(MeanInlierCount(graph)) {
  for (const auto& [key, edge] : graph.edges()) {
    bool fell_back = false;
    matrices_.emplace(
        key, EdgeWhiteningMatrix(edge, weighting, mean_inliers_,
                                 unit_weight_fallback ? &fell_back : nullptr));
    if (fell_back) ++num_fallback_;
  }
}

Eigen::Vector3d EdgeWeightedResidual(const EdgeMeasurement& edge,
                                     const Rotation& ri, const Rotation& rj,
                                     Weighting weighting,
                                     double mean_inliers) {
  bool fell_back = false;
  return EdgeWhiteningMatrix(edge, weighting, mean_inliers, &fell_back) *
         RelativeResidual(ri, rj, edge.rotation);
}

double Cost(const ViewGraph& graph,
            const std::map<ViewId, Rotation>& rotations,
            const SolverConfig& config) {
  const EdgeWhitening whitening(graph, config.weighting,
                                config.unit_weight_fallback);
  double cost = 0.0;
  for (const auto& [key, edge] : graph.edges()) {
    const Eigen::Vector3d r = whitening.Matrix(key) *
                              RelativeResidual(rotations.at(edge.i),
                                               rotations.at(edge.j),
                                               edge.rotation);
    cost += config.loss.Evaluate(r.squaredNorm()).value;
  }
  return cost;
}

double ChordalCost(const ViewGraph& graph,
                   const std::map<ViewId, Rotation>& rotations) {
  double cost = 0.0;
  for (const auto& [key, edge] : graph.edges()) {
    cost += (edge.rotation.matrix() * rotations.at(edge.j).matrix() -
             rotations.at(edge.i).matrix())
                .squaredNorm();
  }
  return cost;
}

AveragingResult Solve(const ViewGraph& graph,
                      const std::map<ViewId, Rotation>& init,
                      const SolverConfig& config) {
  ValidateSolverConfig(config);
  if (!IsConnected(graph)) {
    throw DataError("view graph is not connected; solve each component");
  }
  const Problem problem(graph, config);

  std::vector<Rotation> rotations;
  rotations.reserve(problem.num_nodes());
  for (const ViewId id : problem.ids()) {
    const auto it = init.find(id);
    if (it == init.end()) {
      throw DataError("initial rotations miss node " + std::to_string(id));
    }
    rotations.push_back(it->second);
  }

  AveragingResult result;
  result.num_fallback_edges = problem.num_fallback_edges();
  std::vector<EdgeBlock> blocks = problem.Evaluate(rotations, true);
  double cost = problem.RobustCost(blocks, nullptr);
  result.cost_history.push_back(cost);
  result.termination = "max_outer_irls";

  if (problem.num_nodes() > 1) {
    double lambda = config.damping_init;
    for (int outer = 0; outer < config.max_outer_irls; ++outer) {
      std::vector<double> weights;
      problem.RobustCost(blocks, &weights);
      const std::vector<Rotation> outer_start = rotations;
      const std::vector<EdgeBlock> outer_blocks = blocks;

      bool stationary = false;
      bool tiny_step = false;
      double weighted = Problem::WeightedSquares(blocks, weights);
      for (int inner = 0; inner < config.max_inner_gn; ++inner) {
        const NormalEquations eq = Assemble(problem, blocks, weights);
        if (eq.gradient.lpNorm<Eigen::Infinity>() < config.gradient_tol) {
          stationary = inner == 0;
          break;
        }
        bool accepted = false;
        for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
          Eigen::VectorXd step;
          if (!SolveDamped(eq, lambda, &step)) {
            lambda *= 10.0;
            continue;
          }
          if (step.norm() < config.step_tol) {
            tiny_step = true;
            break;
          }
          std::vector<Rotation> candidate = Retract(rotations, step);
          std::vector<EdgeBlock> candidate_blocks =
              problem.Evaluate(candidate, true);
          const double candidate_weighted =
              Problem::WeightedSquares(candidate_blocks, weights);
          if (candidate_weighted < weighted) {
            rotations = std::move(candidate);
            blocks = std::move(candidate_blocks);
            weighted = candidate_weighted;
            lambda = std::max(lambda * 0.1, 1e-12);
            accepted = true;
          } else {
            lambda *= 10.0;
          }
        }
        if (!accepted) break;
      }

      const double new_cost = problem.RobustCost(blocks, nullptr);
      if (new_cost > cost) {
        // Keep the previous iterate if the robust cost went up.
        rotations = outer_start;
        blocks = outer_blocks;
        result.outer_iterations = outer + 1;
        result.converged = true;
        result.termination = "cost_rel_tol";
        break;
      }
      const double previous = cost;
      cost = new_cost;
      result.cost_history.push_back(cost);
      result.outer_iterations = outer + 1;
      if (stationary) {
        result.converged = true;
        result.termination = "gradient_tol";
        break;
      }
      if (previous - cost <=
          config.cost_rel_tol * std::max(previous, 1e-300)) {
        result.converged = true;
        result.termination = tiny_step ? "step_tol" : "cost_rel_tol";
        break;
      }
    }
  } else {
    result.converged = true;
    result.termination = "gradient_tol";
  }

  std::vector<double> weights;
  result.final_cost = problem.RobustCost(blocks, &weights);
  for (std::size_t n = 0; n < problem.num_nodes(); ++n) {
    result.rotations.emplace(problem.ids()[n], rotations[n]);
  }
  for (std::size_t e = 0; e < problem.num_edges(); ++e) {
    const EdgeKey key = problem.edge(e).key();
    result.edge_weights.emplace(key, weights[e]);
    result.edge_residual_norms.emplace(key, blocks[e].residual.norm());
  }
  return result;
}

bool IsRedescending(LossType type) {
  return type != LossType::kTrivial && type != LossType::kHuber &&
         type != LossType::kSoftL1;
}

AveragingResult AverageRotations(const ViewGraph& graph,
                                 const SolverConfig& config,
                                 TreeWeight tree_weight) {
  AveragingResult merged;
  merged.converged = true;
  bool first = true;
  for (const ViewGraph& component : ConnectedComponents(graph)) {
    const std::map<ViewId, Rotation> init =
        SpanningTreeInit(component, tree_weight);
    AveragingResult part;
    if (config.warm_start && IsRedescending(config.loss.type())) {
      SolverConfig warm = config;
      warm.weighting = Weighting::kNone;
      warm.loss = LossSpec::SoftL1(
          DefaultLossScale(LossType::kSoftL1, Weighting::kNone));
      part = Solve(component, Solve(component, init, warm).rotations, config);
    } else {
      part = Solve(component, init, config);
    }
    merged.rotations.merge(part.rotations);
    merged.edge_weights.merge(part.edge_weights);
    merged.edge_residual_norms.merge(part.edge_residual_norms);
    merged.final_cost += part.final_cost;
    merged.outer_iterations =
        std::max(merged.outer_iterations, part.outer_iterations);
    merged.num_fallback_edges += part.num_fallback_edges;
    if (first || (merged.converged && !part.converged)) {
      merged.termination = part.termination;
    }
    merged.converged = merged.converged && part.converged;
    first = false;
    if (merged.cost_history.size() < part.cost_history.size()) {
      merged.cost_history.resize(part.cost_history.size(),
                                 merged.cost_history.empty()
                                     ? 0.0
                                     : merged.cost_history.back());
    }
    for (std::size_t k = 0; k < merged.cost_history.size(); ++k) {
      merged.cost_history[k] +=
          k < part.cost_history.size() ? part.cost_history[k]
                                       : part.cost_history.back();
    }
  }
  return merged;
}

}  // namespace rotavg
