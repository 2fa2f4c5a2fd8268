#pragma once

#include <span>
#include <vector>

#include "syrem/net.hpp"
#include "syrem/types.hpp"

namespace syrem {

// Evaluation protocol: per-case FDE (min endpoint distance over heads) and MR
// (share of heads outside a speed-dependent tolerance box), aggregated into a
// stage-by-task result matrix from which the transfer metrics derive.

/// Per-case or per-set (FDE meters, MR percent) pair.
struct Score {
  double fde = 0.0;
  double mr = 0.0;
};

/// Minimum Euclidean distance between the predicted endpoints and the ground
/// truth.
double fde_case(const Prediction& pred, const Vec2& gt);

/// Longitudinal miss threshold in meters as a piecewise function of the
/// target speed; continuous, non-decreasing, range [1, 2].
double mr_threshold(double v);

/// Percent of endpoints outside the tolerance box around gt: longitudinal
/// component (along heading_unit) beyond mr_threshold(v) or lateral component
/// beyond 1 m.
double mr_case(const Prediction& pred, const Vec2& gt, const Vec2& heading_unit,
               double v);

/// Mean FDE / MR of a model over a test set (also the joint-test metric when
/// given the union of all test sets). Throws ConfigError on an empty set.
Score evaluate_set(const ParamVector& params, std::span<const Sample> test_set);

/// R[i][j]: metrics on test task j after training stage i (0-based). Rows
/// fill top to bottom as training progresses.
class ResultMatrix {
 public:
  ResultMatrix() = default;
  explicit ResultMatrix(int n_tasks);

  int n_tasks() const { return n_tasks_; }
  int rows_filled() const { return rows_filled_; }
  void fill_row(int stage, std::span<const Score> row);
  Score at(int stage, int task) const;

  const Mat& fde() const { return fde_; }
  const Mat& mr() const { return mr_; }

 private:
  int n_tasks_ = 0;
  int rows_filled_ = 0;
  Mat fde_;
  Mat mr_;
};

/// Backward transfer after `stage` (0-based, >= 1): mean over earlier tasks i
/// of R[stage][i] - R[i][i]. Negative values mean learning the current task
/// improved old ones.
Score bwt(const ResultMatrix& matrix, int stage);

/// Current-task metrics: the diagonal entry R[stage][stage].
Score ct(const ResultMatrix& matrix, int stage);

/// Forward transfer: mean over unseen tasks k > stage of R[stage][k].
/// Undefined for the last stage (throws ConfigError).
Score fwt(const ResultMatrix& matrix, int stage);

}  // namespace syrem
