#include "rotavg/view_graph.h"

#include <algorithm>
#include <numeric>
#include <queue>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "rotavg/errors.h"

namespace rotavg {
namespace {

std::string EdgeName(const EdgeMeasurement& edge) {
  std::ostringstream out;
  out << "edge (" << edge.i << ", " << edge.j << ")";
  return out.str();
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t Find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool Union(std::size_t a, std::size_t b) {
    a = Find(a);
    b = Find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

std::map<ViewId, std::size_t> IndexNodes(const ViewGraph& graph) {
  std::map<ViewId, std::size_t> index;
  for (const auto& [id, node] : graph.nodes()) {
    index.emplace(id, index.size());
  }
  return index;
}

}  // namespace

void ValidateCovariance(const Eigen::Matrix3d& cov) {
  if (!cov.allFinite()) {
    throw DataError("covariance has non-finite entries");
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DataError("covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov,
                                                     Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw DataError("covariance is not positive definite");
  }
}

Eigen::Matrix3d WhitenerFromCovariance(const Eigen::Matrix3d& cov) {
  ValidateCovariance(cov);
  // With P the order-reversing permutation and P C P = L L^T, the lower
  // triangular D = P L^-T P satisfies D D^T = C^-1.
  const Eigen::Matrix3d reversed = cov.reverse();
  Eigen::LLT<Eigen::Matrix3d> llt(0.5 * (reversed + reversed.transpose()));
  if (llt.info() != Eigen::Success) {
    throw DataError("covariance has no Cholesky factor");
  }
  const Eigen::Matrix3d l_inverse =
      llt.matrixL().solve(Eigen::Matrix3d::Identity());
  return l_inverse.transpose().reverse();
}

void EdgeMeasurement::SetCovariance(const Eigen::Matrix3d& cov) {
  whitener = WhitenerFromCovariance(cov);
  covariance = cov;
}

void ViewGraph::AddNode(ViewNode node) {
  if (node.id < 0) {
    throw DataError("node id " + std::to_string(node.id) + " is negative");
  }
  const ViewId id = node.id;
  if (!nodes_.emplace(id, std::move(node)).second) {
    throw DataError("duplicate node id " + std::to_string(id));
  }
}

void ViewGraph::AddEdge(EdgeMeasurement edge) {
  if (edge.i == edge.j) {
    throw DataError(EdgeName(edge) + " is a self loop");
  }
  if (!HasNode(edge.i) || !HasNode(edge.j)) {
    throw DataError(EdgeName(edge) + " references a missing node");
  }
  if (edge.inlier_count && *edge.inlier_count < 0) {
    throw DataError(EdgeName(edge) + " has a negative inlier count");
  }
  if (edges_.count(edge.key()) > 0) {
    throw DataError(EdgeName(edge) + " duplicates an existing pair");
  }
  if (edge.covariance) {
    try {
      edge.SetCovariance(*edge.covariance);
    } catch (const DataError& e) {
      throw DataError(EdgeName(edge) + ": " + e.what());
    }
  } else {
    edge.whitener.reset();
  }
  const EdgeKey key = edge.key();
  edges_.emplace(key, std::move(edge));
}

const ViewNode& ViewGraph::Node(ViewId id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) {
    throw DataError("unknown node id " + std::to_string(id));
  }
  return it->second;
}

const EdgeMeasurement& ViewGraph::Edge(const EdgeKey& key) const {
  const auto it = edges_.find(key);
  if (it == edges_.end()) {
    throw DataError("unknown edge (" + std::to_string(key.first) + ", " +
                    std::to_string(key.second) + ")");
  }
  return it->second;
}

EdgeMeasurement& ViewGraph::MutableEdge(const EdgeKey& key) {
  const auto it = edges_.find(key);
  if (it == edges_.end()) {
    throw DataError("unknown edge (" + std::to_string(key.first) + ", " +
                    std::to_string(key.second) + ")");
  }
  return it->second;
}

std::vector<ViewGraph> ConnectedComponents(const ViewGraph& graph) {
  const std::map<ViewId, std::size_t> index = IndexNodes(graph);
  std::vector<ViewId> ids;
  ids.reserve(index.size());
  for (const auto& [id, idx] : index) ids.push_back(id);

  UnionFind sets(ids.size());
  for (const auto& [key, edge] : graph.edges()) {
    sets.Union(index.at(key.first), index.at(key.second));
  }

  // Roots are the smallest index of each set, so iterating roots in index
  // order yields components ordered by smallest node id.
  std::map<std::size_t, std::size_t> component_of_root;
  std::vector<ViewGraph> components;
  for (std::size_t n = 0; n < ids.size(); ++n) {
    const std::size_t root = sets.Find(n);
    auto [it, inserted] = component_of_root.emplace(root, components.size());
    if (inserted) components.emplace_back();
    components[it->second].AddNode(graph.Node(ids[n]));
  }
  for (const auto& [key, edge] : graph.edges()) {
    const std::size_t root = sets.Find(index.at(key.first));
    components[component_of_root.at(root)].AddEdge(edge);
  }
  return components;
}

bool IsConnected(const ViewGraph& graph) {
  return ConnectedComponents(graph).size() <= 1;
}

double EdgeTreeWeight(const EdgeMeasurement& edge, TreeWeight criterion) {
  switch (criterion) {
    case TreeWeight::kInlierCount:
      if (!edge.inlier_count) {
        throw DataError("edge (" + std::to_string(edge.i) + ", " +
                        std::to_string(edge.j) + ") has no inlier count");
      }
      return static_cast<double>(*edge.inlier_count);
    case TreeWeight::kInverseCovTrace:
      if (!edge.covariance) {
        throw DataError("edge (" + std::to_string(edge.i) + ", " +
                        std::to_string(edge.j) + ") has no covariance");
      }
      return 1.0 / edge.covariance->trace();
    case TreeWeight::kUnit:
    case TreeWeight::kAuto:
      break;
  }
  return 1.0;
}

TreeWeight ResolveTreeWeight(const ViewGraph& graph, TreeWeight criterion) {
  if (criterion != TreeWeight::kAuto) return criterion;
  const auto& edges = graph.edges();
  if (!edges.empty() &&
      std::all_of(edges.begin(), edges.end(),
                  [](const auto& kv) { return kv.second.inlier_count; })) {
    return TreeWeight::kInlierCount;
  }
  if (!edges.empty() &&
      std::all_of(edges.begin(), edges.end(),
                  [](const auto& kv) { return kv.second.covariance; })) {
    return TreeWeight::kInverseCovTrace;
  }
  return TreeWeight::kUnit;
}

std::vector<EdgeKey> MaximumSpanningTree(const ViewGraph& graph,
                                         TreeWeight criterion) {
  criterion = ResolveTreeWeight(graph, criterion);
  struct Candidate {
    double weight;
    EdgeKey key;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(graph.NumEdges());
  for (const auto& [key, edge] : graph.edges()) {
    candidates.push_back({EdgeTreeWeight(edge, criterion), key});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.weight > b.weight;
                   });

  const std::map<ViewId, std::size_t> index = IndexNodes(graph);
  UnionFind sets(index.size());
  std::vector<EdgeKey> tree;
  for (const Candidate& c : candidates) {
    if (sets.Union(index.at(c.key.first), index.at(c.key.second))) {
      tree.push_back(c.key);
    }
  }
  if (graph.NumNodes() > 0 && tree.size() + 1 != graph.NumNodes()) {
    throw DataError(
        "view graph is not connected; split it with ConnectedComponents() "
        "and initialize each component separately");
  }
  std::sort(tree.begin(), tree.end());
  return tree;
}

std::map<ViewId, Rotation> SpanningTreeInit(const ViewGraph& graph,
                                            TreeWeight criterion) {
  std::map<ViewId, Rotation> rotations;
  if (graph.NumNodes() == 0) return rotations;

  std::map<ViewId, std::vector<ViewId>> adjacency;
  for (const EdgeKey& key : MaximumSpanningTree(graph, criterion)) {
    adjacency[key.first].push_back(key.second);
    adjacency[key.second].push_back(key.first);
  }

  const ViewId root = graph.nodes().begin()->first;
  rotations.emplace(root, Rotation::Identity());
  std::queue<ViewId> frontier;
  frontier.push(root);
  while (!frontier.empty()) {
    const ViewId current = frontier.front();
    frontier.pop();
    for (const ViewId next : adjacency[current]) {
      if (rotations.count(next) > 0) continue;
      const EdgeMeasurement& edge = graph.Edge(MakeEdgeKey(current, next));
      const Rotation& known = rotations.at(current);
      // rotation ~= R_i R_j^T
      const Rotation estimate = edge.i == current
                                    ? edge.rotation.Inverse() * known
                                    : edge.rotation * known;
      rotations.emplace(next, estimate);
      frontier.push(next);
    }
  }
  return rotations;
}

}  // namespace rotavg
