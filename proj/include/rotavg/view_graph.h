#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "rotavg/so3.h"

namespace rotavg {

using ViewId = std::int64_t;

// Unordered pair key (min id, max id); at most one edge per key.
using EdgeKey = std::pair<ViewId, ViewId>;

inline EdgeKey MakeEdgeKey(ViewId a, ViewId b) {
  return a < b ? EdgeKey{a, b} : EdgeKey{b, a};
}

struct ViewNode {
  ViewId id = 0;
  // Only used for evaluation.
  std::optional<Rotation> gt_rotation;
};

// A relative-rotation measurement between views i and j.
//
// Direction: rotation ~= R_i * R_j^T. Traversing the edge from j to i uses
// the transpose.
struct EdgeMeasurement {
  ViewId i = 0;
  ViewId j = 0;
  Rotation rotation;
  // Covariance of RelativeResidual at this edge, radians^2.
  std::optional<Eigen::Matrix3d> covariance;
  std::optional<std::int64_t> inlier_count;
  // Lower-triangular D with D * D^T = covariance^-1; kept in sync with
  // covariance by SetCovariance().
  std::optional<Eigen::Matrix3d> whitener;

  EdgeKey key() const { return MakeEdgeKey(i, j); }

  // Validates and stores the covariance together with its whitener.
  // Throws DataError when the matrix is not symmetric positive definite.
  void SetCovariance(const Eigen::Matrix3d& cov);
};

// Throws DataError unless cov is finite, symmetric (1e-12 relative to its
// largest entry) and has strictly positive eigenvalues.
void ValidateCovariance(const Eigen::Matrix3d& cov);

// Lower-triangular Cholesky factor D of cov^-1 (cov^-1 = D D^T).
Eigen::Matrix3d WhitenerFromCovariance(const Eigen::Matrix3d& cov);

// The view graph G = (E, V). Nodes and edges are kept sorted by id / edge
// key so that every traversal is deterministic.
class ViewGraph {
 public:
  // Throws DataError on a duplicate or negative id.
  void AddNode(ViewNode node);
  // Throws DataError on self loops, missing endpoints, duplicate pairs or
  // an invalid covariance. Recomputes the whitener from the covariance.
  void AddEdge(EdgeMeasurement edge);

  bool HasNode(ViewId id) const { return nodes_.count(id) > 0; }
  const ViewNode& Node(ViewId id) const;
  const EdgeMeasurement& Edge(const EdgeKey& key) const;
  EdgeMeasurement& MutableEdge(const EdgeKey& key);

  const std::map<ViewId, ViewNode>& nodes() const { return nodes_; }
  const std::map<EdgeKey, EdgeMeasurement>& edges() const { return edges_; }
  std::size_t NumNodes() const { return nodes_.size(); }
  std::size_t NumEdges() const { return edges_.size(); }

 private:
  std::map<ViewId, ViewNode> nodes_;
  std::map<EdgeKey, EdgeMeasurement> edges_;
};

// Partition into connected components, ordered by smallest node id.
std::vector<ViewGraph> ConnectedComponents(const ViewGraph& graph);

bool IsConnected(const ViewGraph& graph);

enum class TreeWeight {
  kAuto,             // inlier count if every edge has one, else
                     // inverse covariance trace if every edge has one,
                     // else unit
  kInlierCount,
  kInverseCovTrace,
  kUnit,
};

// Weight of an edge under the given (non-auto) criterion.
double EdgeTreeWeight(const EdgeMeasurement& edge, TreeWeight criterion);

// Resolves kAuto for a particular graph.
TreeWeight ResolveTreeWeight(const ViewGraph& graph, TreeWeight criterion);

// Kruskal maximum spanning tree. Ties are broken by ascending edge key.
// Throws DataError if the graph is not connected.
std::vector<EdgeKey> MaximumSpanningTree(const ViewGraph& graph,
                                         TreeWeight criterion);

// Composes relative rotations along the maximum spanning tree, starting from
// the smallest id at identity. Tree-edge residuals are zero by construction.
// Throws DataError for disconnected graphs.
std::map<ViewId, Rotation> SpanningTreeInit(
    const ViewGraph& graph, TreeWeight criterion = TreeWeight::kAuto);

}  // namespace rotavg
