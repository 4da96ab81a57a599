#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rotavg/robust_loss.h"
#include "rotavg/so3.h"
#include "rotavg/view_graph.h"

namespace rotavg {

struct AlignmentResult {
  // Estimates are compared as est_i * r_align against gt_i.
  Rotation r_align;
  std::map<ViewId, double> per_view_errors;  // degrees
  double inlier_fraction_under_5deg = 0.0;
};

// Robustly fits the single rotation A minimizing
//   sum_i rho(|L_e(est_i^T, gt_i^T, A)|^2)
// over the common ids, where L_e is RelativeResidual. The fit starts from
// the quaternion chordal mean and runs IRLS / Gauss-Newton.
// Throws DataError when the id sets do not intersect.
AlignmentResult AlignRotations(const std::map<ViewId, Rotation>& estimate,
                               const std::map<ViewId, Rotation>& ground_truth,
                               const LossSpec& loss = LossSpec::Cauchy(0.1));

// Area under the recall curve up to threshold_deg, in percent:
// 100 / N * sum_i max(0, 1 - e_i / threshold).
double Auc(const std::vector<double>& errors_deg, double threshold_deg);

// Sorted distinct error values with the fraction of errors <= each value.
std::vector<std::pair<double, double>> EmpiricalCdf(
    const std::vector<double>& errors_deg);

// Writes EmpiricalCdf() as "error_deg,cdf" CSV. Throws DataError on I/O
// failure or an empty input.
void ExportCdf(const std::vector<double>& errors_deg, const std::string& path);

// Values of a map in key order.
std::vector<double> ErrorValues(const std::map<ViewId, double>& errors);

}  // namespace rotavg
