#pragma once

#include <map>
#include <string>
#include <vector>

#include "rotavg/solver.h"
#include "rotavg/so3.h"
#include "rotavg/two_view.h"
#include "rotavg/view_graph.h"

namespace rotavg {

// View-graph document:
//   { "nodes": [ { "id": int, "gt_qwxyz": [w, x, y, z] (optional) } ],
//     "edges": [ { "i": int, "j": int, "qwxyz": [w, x, y, z],
//                  "cov": [9 numbers, row-major, radians^2] (optional),
//                  "inliers": int (optional) } ] }
// Edge (i, j, R) means R ~= R_i R_j^T. Quaternions are normalized on load
// and whiteners recomputed. Numbers are written with round-trip precision so
// that Parse(Serialize(g)) reproduces every value bit for bit.
//
// All parse functions throw SchemaError naming the offending record.
std::string SerializeGraph(const ViewGraph& graph);
ViewGraph ParseGraph(const std::string& text);
ViewGraph LoadGraph(const std::string& path);
void SaveGraph(const ViewGraph& graph, const std::string& path);

// Correspondence-set document:
//   { "pairs": [ { "i": int, "j": int, "K_i": [9], "K_j": [9],
//                  "qwxyz": [4], "t": [3],
//                  "matches": [[x, y, x', y'], ...] } ] }
// The pose follows TwoViewGeometry: X_j = R (X_i + s t). t is normalized on
// load; a zero t is rejected.
std::string SerializePairs(const std::vector<PairRecord>& pairs);
std::vector<PairRecord> ParsePairs(const std::string& text);
std::vector<PairRecord> LoadPairs(const std::string& path);
void SavePairs(const std::vector<PairRecord>& pairs, const std::string& path);

// Result document:
//   { "rotations": [ { "id": int, "qwxyz": [4] } ], "final_cost": number,
//     "iterations": int, "converged": bool, "termination": string,
//     "num_fallback_edges": int,
//     "edge_weights": [ { "i": int, "j": int, "weight": number,
//                         "residual_rad": number } ] }
std::string SerializeResult(const AveragingResult& result);
// Only the rotations are read back.
std::map<ViewId, Rotation> ParseResultRotations(const std::string& text);
std::map<ViewId, Rotation> LoadResultRotations(const std::string& path);
void SaveResult(const AveragingResult& result, const std::string& path);

// Ground-truth rotations of all nodes that carry one.
std::map<ViewId, Rotation> GroundTruthRotations(const ViewGraph& graph);

// Whole-file helpers; throw DataError on I/O failure.
std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, const std::string& contents);

}  // namespace rotavg
