#include "rotavg/io.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rotavg/errors.h"

namespace rotavg {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void Fail(const std::string& where, const std::string& what) {
  throw SchemaError(where + ": " + what);
}

std::string Where(const char* array, std::size_t index) {
  std::ostringstream out;
  out << array << "[" << index << "]";
  return out.str();
}

Json ParseDocument(const std::string& text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    Fail(what, std::string("malformed JSON: ") + e.what());
  }
}

const Json& Field(const Json& record, const std::string& where,
                  const char* name) {
  if (!record.is_object()) Fail(where, "must be an object");
  const auto it = record.find(name);
  if (it == record.end()) Fail(where, std::string("missing field '") + name + "'");
  return *it;
}

const Json* OptionalField(const Json& record, const char* name) {
  const auto it = record.find(name);
  if (it == record.end() || it->is_null()) return nullptr;
  return &*it;
}

std::int64_t ReadInt(const Json& value, const std::string& where,
                     const char* name) {
  if (!value.is_number_integer()) {
    Fail(where, std::string("field '") + name + "' must be an integer");
  }
  return value.get<std::int64_t>();
}

template <int kSize>
Eigen::Matrix<double, kSize, 1> ReadNumbers(const Json& value,
                                            const std::string& where,
                                            const char* name) {
  if (!value.is_array() || value.size() != static_cast<std::size_t>(kSize)) {
    std::ostringstream msg;
    msg << "field '" << name << "' must be an array of " << kSize
        << " numbers";
    Fail(where, msg.str());
  }
  Eigen::Matrix<double, kSize, 1> out;
  for (int k = 0; k < kSize; ++k) {
    if (!value[k].is_number()) {
      Fail(where, std::string("field '") + name + "' has a non-numeric entry");
    }
    out[k] = value[k].get<double>();
    if (!std::isfinite(out[k])) {
      Fail(where, std::string("field '") + name + "' has a non-finite entry");
    }
  }
  return out;
}

Rotation ReadQuaternion(const Json& value, const std::string& where,
                        const char* name) {
  const Eigen::Vector4d q = ReadNumbers<4>(value, where, name);
  try {
    return Rotation::FromQuaternion(q[0], q[1], q[2], q[3]);
  } catch (const std::exception& e) {
    Fail(where, std::string("field '") + name + "': " + e.what());
  }
}

Eigen::Matrix3d ReadMatrix(const Json& value, const std::string& where,
                           const char* name) {
  const Eigen::Matrix<double, 9, 1> v = ReadNumbers<9>(value, where, name);
  Eigen::Matrix3d m;
  m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  return m;
}

Json QuaternionJson(const Rotation& rotation) {
  const auto q = rotation.Wxyz();
  return Json::array({q[0], q[1], q[2], q[3]});
}

Json MatrixJson(const Eigen::Matrix3d& m) {
  Json out = Json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
  }
  return out;
}

const Json& TopLevelArray(const Json& doc, const char* name) {
  if (!doc.is_object()) Fail("document", "must be a JSON object");
  const auto it = doc.find(name);
  if (it == doc.end() || !it->is_array()) {
    Fail("document", std::string("missing array '") + name + "'");
  }
  return *it;
}

std::string Dump(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace

std::string SerializeGraph(const ViewGraph& graph) {
  Json doc;
  doc["nodes"] = Json::array();
  for (const auto& [id, node] : graph.nodes()) {
    Json record;
    record["id"] = id;
    if (node.gt_rotation) record["gt_qwxyz"] = QuaternionJson(*node.gt_rotation);
    doc["nodes"].push_back(std::move(record));
  }
  doc["edges"] = Json::array();
  for (const auto& [key, edge] : graph.edges()) {
    Json record;
    record["i"] = edge.i;
    record["j"] = edge.j;
    record["qwxyz"] = QuaternionJson(edge.rotation);
    if (edge.covariance) record["cov"] = MatrixJson(*edge.covariance);
    if (edge.inlier_count) record["inliers"] = *edge.inlier_count;
    doc["edges"].push_back(std::move(record));
  }
  return Dump(doc);
}

ViewGraph ParseGraph(const std::string& text) {
  const Json doc = ParseDocument(text, "view graph");
  const Json& nodes = TopLevelArray(doc, "nodes");
  const Json& edges = TopLevelArray(doc, "edges");

  ViewGraph graph;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const std::string where = Where("nodes", n);
    const Json& record = nodes[n];
    ViewNode node;
    node.id = ReadInt(Field(record, where, "id"), where, "id");
    if (const Json* gt = OptionalField(record, "gt_qwxyz")) {
      node.gt_rotation = ReadQuaternion(*gt, where, "gt_qwxyz");
    }
    try {
      graph.AddNode(std::move(node));
    } catch (const DataError& e) {
      Fail(where, e.what());
    }
  }
  for (std::size_t n = 0; n < edges.size(); ++n) {
    const std::string where = Where("edges", n);
    const Json& record = edges[n];
    EdgeMeasurement edge;
    edge.i = ReadInt(Field(record, where, "i"), where, "i");
    edge.j = ReadInt(Field(record, where, "j"), where, "j");
    edge.rotation = ReadQuaternion(Field(record, where, "qwxyz"), where, "qwxyz");
    if (const Json* cov = OptionalField(record, "cov")) {
      edge.covariance = ReadMatrix(*cov, where, "cov");
    }
    if (const Json* inliers = OptionalField(record, "inliers")) {
      edge.inlier_count = ReadInt(*inliers, where, "inliers");
    }
    try {
      graph.AddEdge(std::move(edge));
    } catch (const DataError& e) {
      Fail(where, e.what());
    }
  }
  return graph;
}

ViewGraph LoadGraph(const std::string& path) {
  return ParseGraph(ReadFile(path));
}

void SaveGraph(const ViewGraph& graph, const std::string& path) {
  WriteFile(path, SerializeGraph(graph));
}

std::string SerializePairs(const std::vector<PairRecord>& pairs) {
  Json doc;
  doc["pairs"] = Json::array();
  for (const PairRecord& pair : pairs) {
    const TwoViewGeometry& g = pair.geometry;
    Json record;
    record["i"] = pair.i;
    record["j"] = pair.j;
    record["K_i"] = MatrixJson(g.intrinsics_i.K());
    record["K_j"] = MatrixJson(g.intrinsics_j.K());
    record["qwxyz"] = QuaternionJson(g.rotation);
    record["t"] = Json::array({g.translation.x(), g.translation.y(),
                               g.translation.z()});
    Json matches = Json::array();
    for (const Correspondence& c : g.inliers) {
      matches.push_back(
          Json::array({c.p.x(), c.p.y(), c.p_prime.x(), c.p_prime.y()}));
    }
    record["matches"] = std::move(matches);
    doc["pairs"].push_back(std::move(record));
  }
  return Dump(doc);
}

std::vector<PairRecord> ParsePairs(const std::string& text) {
  const Json doc = ParseDocument(text, "pair set");
  const Json& records = TopLevelArray(doc, "pairs");
  std::vector<PairRecord> pairs;
  pairs.reserve(records.size());
  for (std::size_t n = 0; n < records.size(); ++n) {
    const std::string where = Where("pairs", n);
    const Json& record = records[n];
    PairRecord pair;
    pair.i = ReadInt(Field(record, where, "i"), where, "i");
    pair.j = ReadInt(Field(record, where, "j"), where, "j");
    if (pair.i == pair.j) Fail(where, "i and j must differ");
    TwoViewGeometry& g = pair.geometry;
    try {
      g.intrinsics_i =
          CameraIntrinsics(ReadMatrix(Field(record, where, "K_i"), where, "K_i"));
      g.intrinsics_j =
          CameraIntrinsics(ReadMatrix(Field(record, where, "K_j"), where, "K_j"));
    } catch (const InvalidArgumentError& e) {
      Fail(where, e.what());
    }
    g.rotation = ReadQuaternion(Field(record, where, "qwxyz"), where, "qwxyz");
    const Eigen::Vector3d t = ReadNumbers<3>(Field(record, where, "t"), where, "t");
    if (!(t.norm() > 0.0)) Fail(where, "field 't' must be non-zero");
    g.translation = t.normalized();
    const Json& matches = Field(record, where, "matches");
    if (!matches.is_array()) Fail(where, "field 'matches' must be an array");
    g.inliers.reserve(matches.size());
    for (std::size_t m = 0; m < matches.size(); ++m) {
      const std::string match_where = where + "." + Where("matches", m);
      const Eigen::Vector4d v = ReadNumbers<4>(matches[m], match_where, "match");
      Correspondence c;
      c.p = v.head<2>();
      c.p_prime = v.tail<2>();
      g.inliers.push_back(c);
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::vector<PairRecord> LoadPairs(const std::string& path) {
  return ParsePairs(ReadFile(path));
}

void SavePairs(const std::vector<PairRecord>& pairs, const std::string& path) {
  WriteFile(path, SerializePairs(pairs));
}

std::string SerializeResult(const AveragingResult& result) {
  Json doc;
  doc["rotations"] = Json::array();
  for (const auto& [id, rotation] : result.rotations) {
    Json record;
    record["id"] = id;
    record["qwxyz"] = QuaternionJson(rotation);
    doc["rotations"].push_back(std::move(record));
  }
  doc["final_cost"] = result.final_cost;
  doc["iterations"] = result.outer_iterations;
  doc["converged"] = result.converged;
  doc["termination"] = result.termination;
  doc["num_fallback_edges"] = result.num_fallback_edges;
  doc["edge_weights"] = Json::array();
  for (const auto& [key, weight] : result.edge_weights) {
    Json record;
    record["i"] = key.first;
    record["j"] = key.second;
    record["weight"] = weight;
    const auto residual = result.edge_residual_norms.find(key);
    if (residual != result.edge_residual_norms.end()) {
      record["residual_rad"] = residual->second;
    }
    doc["edge_weights"].push_back(std::move(record));
  }
  return Dump(doc);
}

std::map<ViewId, Rotation> ParseResultRotations(const std::string& text) {
  const Json doc = ParseDocument(text, "result");
  const Json& records = TopLevelArray(doc, "rotations");
  std::map<ViewId, Rotation> rotations;
  for (std::size_t n = 0; n < records.size(); ++n) {
    const std::string where = Where("rotations", n);
    const ViewId id = ReadInt(Field(records[n], where, "id"), where, "id");
    const Rotation r =
        ReadQuaternion(Field(records[n], where, "qwxyz"), where, "qwxyz");
    if (!rotations.emplace(id, r).second) Fail(where, "duplicate id");
  }
  return rotations;
}

std::map<ViewId, Rotation> LoadResultRotations(const std::string& path) {
  return ParseResultRotations(ReadFile(path));
}

void SaveResult(const AveragingResult& result, const std::string& path) {
  WriteFile(path, SerializeResult(result));
}

std::map<ViewId, Rotation> GroundTruthRotations(const ViewGraph& graph) {
  std::map<ViewId, Rotation> out;
  for (const auto& [id, node] : graph.nodes()) {
    if (node.gt_rotation) out.emplace(id, *node.gt_rotation);
  }
  return out;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace rotavg
