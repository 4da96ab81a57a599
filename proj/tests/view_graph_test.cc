#include "rotavg/view_graph.h"

#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "rotavg/errors.h"

namespace rotavg {
namespace {

Rotation RandomRotation(std::mt19937_64& rng) {
  return Rotation::FromMatrix(oracle::RandomRotation(rng));
}

EdgeMeasurement MakeEdge(ViewId i, ViewId j, const Rotation& r,
                         std::optional<std::int64_t> inliers = std::nullopt) {
  EdgeMeasurement e;
  e.i = i;
  e.j = j;
  e.rotation = r;
  e.inlier_count = inliers;
  return e;
}

ViewGraph Nodes(int n) {
  ViewGraph g;
  for (int k = 0; k < n; ++k) g.AddNode({k, std::nullopt});
  return g;
}

// Graph with ground truth whose edges are exactly R_i R_j^T.
ViewGraph ConsistentGraph(int n, double density, std::mt19937_64& rng) {
  ViewGraph g;
  std::vector<Rotation> gt;
  for (int k = 0; k < n; ++k) {
    gt.push_back(RandomRotation(rng));
    g.AddNode({k, gt.back()});
  }
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<int> count(10, 500);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      // The chain a -> a + 1 keeps the graph connected.
      if (b == a + 1 || keep(rng)) {
        if (keep(rng)) {
          g.AddEdge(MakeEdge(a, b, gt[a] * gt[b].Inverse(), count(rng)));
        } else {
          g.AddEdge(MakeEdge(b, a, gt[b] * gt[a].Inverse(), count(rng)));
        }
      }
    }
  }
  return g;
}

TEST(ViewGraph, RejectsInvalidStructure) {
  ViewGraph g = Nodes(3);
  EXPECT_THROW(g.AddNode({1, std::nullopt}), DataError);
  EXPECT_THROW(g.AddNode({-4, std::nullopt}), DataError);
  EXPECT_THROW(g.AddEdge(MakeEdge(1, 1, Rotation())), DataError);
  EXPECT_THROW(g.AddEdge(MakeEdge(0, 7, Rotation())), DataError);
  EXPECT_THROW(g.AddEdge(MakeEdge(0, 1, Rotation(), -1)), DataError);
  g.AddEdge(MakeEdge(0, 1, Rotation()));
  EXPECT_THROW(g.AddEdge(MakeEdge(1, 0, Rotation())), DataError);
  EXPECT_EQ(g.NumEdges(), 1u);
}

TEST(ViewGraph, CovarianceValidation) {
  ViewGraph g = Nodes(2);
  EdgeMeasurement e = MakeEdge(0, 1, Rotation());
  Eigen::Matrix3d not_pd = Eigen::Matrix3d::Identity();
  not_pd(2, 2) = -1e-3;
  e.covariance = not_pd;
  EXPECT_THROW(g.AddEdge(e), DataError);
  Eigen::Matrix3d asymmetric = Eigen::Matrix3d::Identity();
  asymmetric(0, 1) = 1e-6;
  e.covariance = asymmetric;
  EXPECT_THROW(g.AddEdge(e), DataError);
  e.covariance = Eigen::Matrix3d::Identity() * NAN;
  EXPECT_THROW(g.AddEdge(e), DataError);
}

TEST(ViewGraph, WhitenerIsRecomputed) {
  ViewGraph g = Nodes(2);
  EdgeMeasurement e = MakeEdge(0, 1, Rotation());
  e.covariance = Eigen::Vector3d(4, 1, 1).asDiagonal();
  e.whitener = Eigen::Matrix3d::Zero();
  g.AddEdge(e);
  const Eigen::Matrix3d D = *g.Edge({0, 1}).whitener;
  EXPECT_LT((D - Eigen::Matrix3d(Eigen::Vector3d(0.5, 1, 1).asDiagonal()))
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
}

TEST(ViewGraph, WhitenerFactorsInverseCovariance) {
  std::mt19937_64 rng(1);
  for (int n = 0; n < 200; ++n) {
    const Eigen::Matrix3d C = oracle::RandomSpd(rng, 1e-6, 1.0);
    const Eigen::Matrix3d D = WhitenerFromCovariance(C);
    // Extended-precision reference inverse.
    using Matrix3l = Eigen::Matrix<long double, 3, 3>;
    const Matrix3l C_inv = C.cast<long double>().inverse();
    const Matrix3l DDt = D.cast<long double>() * D.cast<long double>().transpose();
    EXPECT_LT(static_cast<double>((DDt - C_inv).norm() / C_inv.norm()), 1e-10);
    EXPECT_EQ(D(0, 1), 0.0);
    EXPECT_EQ(D(0, 2), 0.0);
    EXPECT_EQ(D(1, 2), 0.0);
  }
}

TEST(ConnectedComponents, SingleTriangle) {
  ViewGraph g = Nodes(3);
  g.AddEdge(MakeEdge(0, 1, Rotation()));
  g.AddEdge(MakeEdge(1, 2, Rotation()));
  g.AddEdge(MakeEdge(0, 2, Rotation()));
  const auto components = ConnectedComponents(g);
  ASSERT_EQ(components.size(), 1u);
  EXPECT_EQ(components[0].NumNodes(), 3u);
  EXPECT_EQ(components[0].NumEdges(), 3u);
  EXPECT_TRUE(IsConnected(g));
}

TEST(ConnectedComponents, TwoTriangles) {
  ViewGraph g;
  for (ViewId id : {10, 11, 12, 3, 4, 5}) g.AddNode({id, std::nullopt});
  g.AddEdge(MakeEdge(10, 11, Rotation()));
  g.AddEdge(MakeEdge(11, 12, Rotation()));
  g.AddEdge(MakeEdge(12, 10, Rotation()));
  g.AddEdge(MakeEdge(3, 4, Rotation()));
  g.AddEdge(MakeEdge(4, 5, Rotation()));
  g.AddEdge(MakeEdge(5, 3, Rotation()));
  const auto components = ConnectedComponents(g);
  ASSERT_EQ(components.size(), 2u);
  EXPECT_EQ(components[0].nodes().begin()->first, 3);
  EXPECT_EQ(components[1].nodes().begin()->first, 10);
  EXPECT_EQ(components[0].NumEdges(), 3u);
  EXPECT_FALSE(IsConnected(g));
}

TEST(ConnectedComponents, AgreesWithBreadthFirstSearch) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    ViewGraph g = Nodes(100);
    std::vector<std::int64_t> ids(100);
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    std::bernoulli_distribution keep(0.012 + 0.002 * trial);
    for (int a = 0; a < 100; ++a) {
      for (int b = a + 1; b < 100; ++b) {
        if (!keep(rng)) continue;
        g.AddEdge(MakeEdge(a, b, Rotation()));
        pairs.emplace_back(a, b);
      }
    }
    const auto expected = oracle::BfsComponents(ids, pairs);
    const auto components = ConnectedComponents(g);
    ASSERT_EQ(components.size(), expected.size());
    std::size_t edges = 0;
    for (std::size_t c = 0; c < components.size(); ++c) {
      std::vector<std::int64_t> got;
      for (const auto& [id, node] : components[c].nodes()) got.push_back(id);
      EXPECT_EQ(got, expected[c]);
      edges += components[c].NumEdges();
    }
    EXPECT_EQ(edges, g.NumEdges());
  }
}

TEST(TreeWeight, AutoResolution) {
  ViewGraph g = Nodes(3);
  EdgeMeasurement a = MakeEdge(0, 1, Rotation(), 5);
  a.covariance = Eigen::Matrix3d::Identity();
  EdgeMeasurement b = MakeEdge(1, 2, Rotation());
  b.covariance = Eigen::Matrix3d::Identity();
  g.AddEdge(a);
  EXPECT_EQ(ResolveTreeWeight(g, TreeWeight::kAuto), TreeWeight::kInlierCount);
  g.AddEdge(b);
  EXPECT_EQ(ResolveTreeWeight(g, TreeWeight::kAuto),
            TreeWeight::kInverseCovTrace);
  g.AddEdge(MakeEdge(0, 2, Rotation()));
  EXPECT_EQ(ResolveTreeWeight(g, TreeWeight::kAuto), TreeWeight::kUnit);
  EXPECT_EQ(ResolveTreeWeight(g, TreeWeight::kUnit), TreeWeight::kUnit);
  EXPECT_DOUBLE_EQ(EdgeTreeWeight(a, TreeWeight::kInverseCovTrace), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(EdgeTreeWeight(a, TreeWeight::kInlierCount), 5.0);
}

TEST(MaximumSpanningTree, PrefersHeavyPath) {
  // 0-1-2 heavy, 0-2 light.
  ViewGraph g = Nodes(3);
  g.AddEdge(MakeEdge(0, 1, Rotation(), 100));
  g.AddEdge(MakeEdge(1, 2, Rotation(), 90));
  g.AddEdge(MakeEdge(0, 2, Rotation(), 10));
  const auto tree = MaximumSpanningTree(g, TreeWeight::kInlierCount);
  ASSERT_EQ(tree.size(), 2u);
  EXPECT_NE(std::find(tree.begin(), tree.end(), EdgeKey{0, 1}), tree.end());
  EXPECT_NE(std::find(tree.begin(), tree.end(), EdgeKey{1, 2}), tree.end());
}

TEST(MaximumSpanningTree, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> count(1, 1000);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + trial % 4;
    ViewGraph g = Nodes(n);
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> weights;
    std::bernoulli_distribution keep(0.6);
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (b != a + 1 && !keep(rng)) continue;
        const int w = count(rng);
        g.AddEdge(MakeEdge(a, b, Rotation(), w));
        pairs.emplace_back(a, b);
        weights.push_back(w);
      }
    }
    const auto tree = MaximumSpanningTree(g, TreeWeight::kInlierCount);
    ASSERT_EQ(static_cast<int>(tree.size()), n - 1);
    double weight = 0.0;
    for (const EdgeKey& key : tree) weight += *g.Edge(key).inlier_count;
    EXPECT_EQ(weight,
              oracle::BruteForceMaxSpanningTreeWeight(n, pairs, weights));
  }
}

TEST(MaximumSpanningTree, BeatsRandomTrees) {
  std::mt19937_64 rng(4);
  ViewGraph g = ConsistentGraph(30, 0.3, rng);
  const auto tree = MaximumSpanningTree(g, TreeWeight::kInlierCount);
  double best = 0.0;
  for (const EdgeKey& key : tree) best += *g.Edge(key).inlier_count;
  std::vector<EdgeKey> keys;
  for (const auto& [key, edge] : g.edges()) keys.push_back(key);
  for (int trial = 0; trial < 1000; ++trial) {
    // Random spanning tree: Kruskal on a random edge order.
    std::shuffle(keys.begin(), keys.end(), rng);
    std::map<ViewId, ViewId> parent;
    for (const auto& [id, node] : g.nodes()) parent[id] = id;
    std::function<ViewId(ViewId)> find = [&](ViewId x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    double weight = 0.0;
    for (const EdgeKey& key : keys) {
      const ViewId a = find(key.first), b = find(key.second);
      if (a == b) continue;
      parent[a] = b;
      weight += *g.Edge(key).inlier_count;
    }
    EXPECT_GE(best, weight);
  }
}

TEST(MaximumSpanningTree, DisconnectedGraphIsAnError) {
  ViewGraph g = Nodes(4);
  g.AddEdge(MakeEdge(0, 1, Rotation()));
  g.AddEdge(MakeEdge(2, 3, Rotation()));
  try {
    SpanningTreeInit(g);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("ConnectedComponents"),
              std::string::npos);
  }
}

TEST(SpanningTreeInit, ChainComposition) {
  const Rotation step = ExpSO3(Eigen::Vector3d(0.1, 0, 0));
  ViewGraph g = Nodes(3);
  g.AddEdge(MakeEdge(0, 1, step));
  g.AddEdge(MakeEdge(1, 2, step));
  const auto init = SpanningTreeInit(g, TreeWeight::kUnit);
  EXPECT_EQ(init.at(0), Rotation::Identity());
  for (const auto& [key, edge] : g.edges()) {
    EXPECT_LT(RelativeResidual(init.at(edge.i), init.at(edge.j), edge.rotation)
                  .norm(),
              1e-15);
  }
  // R_0 R_2^T = step^2, so R_2 = Exp(-0.2 x).
  EXPECT_LT((LogSO3(init.at(2)) - Eigen::Vector3d(-0.2, 0, 0)).norm(), 1e-12);
}

TEST(SpanningTreeInit, ConsistentGraphHasZeroResiduals) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const ViewGraph g = ConsistentGraph(25, 0.3, rng);
    for (TreeWeight w : {TreeWeight::kAuto, TreeWeight::kUnit,
                         TreeWeight::kInlierCount}) {
      const auto init = SpanningTreeInit(g, w);
      EXPECT_EQ(init.begin()->second, Rotation::Identity());
      for (const auto& [key, edge] : g.edges()) {
        EXPECT_LT(
            RelativeResidual(init.at(edge.i), init.at(edge.j), edge.rotation)
                .norm(),
            1e-10);
      }
    }
  }
}

TEST(SpanningTreeInit, TriangleWithReversedEdge) {
  std::mt19937_64 rng(6);
  std::vector<Rotation> gt = {RandomRotation(rng), RandomRotation(rng),
                              RandomRotation(rng)};
  ViewGraph g;
  for (int k = 0; k < 3; ++k) g.AddNode({k, gt[k]});
  g.AddEdge(MakeEdge(1, 0, gt[1] * gt[0].Inverse()));
  g.AddEdge(MakeEdge(1, 2, gt[1] * gt[2].Inverse()));
  g.AddEdge(MakeEdge(2, 0, gt[2] * gt[0].Inverse()));
  const auto init = SpanningTreeInit(g);
  for (const auto& [key, edge] : g.edges()) {
    EXPECT_LT(RelativeResidual(init.at(edge.i), init.at(edge.j), edge.rotation)
                  .norm(),
              1e-12);
  }
}

}  // namespace
}  // namespace rotavg
