#include "syrem/metrics.hpp"

#include <cmath>
#include <limits>

#include "syrem/errors.hpp"

namespace syrem {

double fde_case(const Prediction& pred, const Vec2& gt) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < pred.n_heads(); ++k) {
    best = std::min(best, (pred.endpoints.col(k) - gt).norm());
  }
  return best;
}

double mr_threshold(double v) {
  if (v < 1.4) return 1.0;
  if (v > 11.0) return 2.0;
  return 1.0 + (v - 1.4) / (11.0 - 1.4);
}

double mr_case(const Prediction& pred, const Vec2& gt, const Vec2& heading_unit,
               double v) {
  const double lon_th = mr_threshold(v);
  const Vec2 lateral_axis{-heading_unit.y(), heading_unit.x()};
  int out = 0;
  for (int k = 0; k < pred.n_heads(); ++k) {
    const Vec2 err = pred.endpoints.col(k) - gt;
    const double lon = err.dot(heading_unit);
    const double lat = err.dot(lateral_axis);
    if (std::abs(lat) > 1.0 || std::abs(lon) > lon_th) ++out;
  }
  return 100.0 * out / pred.n_heads();
}

Score evaluate_set(const ParamVector& params, std::span<const Sample> test_set) {
  if (test_set.empty()) throw ConfigError("metrics: evaluation on empty test set");
  Score sum;
  for (const Sample& s : test_set) {
    const Prediction pred = forward(params, s.features);
    sum.fde += fde_case(pred, s.gt_endpoint);
    sum.mr += mr_case(pred, s.gt_endpoint, s.heading_unit, s.ta_speed);
  }
  const double inv = 1.0 / static_cast<double>(test_set.size());
  return {sum.fde * inv, sum.mr * inv};
}

ResultMatrix::ResultMatrix(int n_tasks) : n_tasks_(n_tasks) {
  if (n_tasks < 1) throw ConfigError("metrics: result matrix needs >= 1 task");
  fde_ = Mat::Constant(n_tasks, n_tasks, std::numeric_limits<double>::quiet_NaN());
  mr_ = Mat::Constant(n_tasks, n_tasks, std::numeric_limits<double>::quiet_NaN());
}

void ResultMatrix::fill_row(int stage, std::span<const Score> row) {
  if (stage != rows_filled_) {
    throw ConfigError("metrics: result matrix rows must fill in stage order");
  }
  if (static_cast<int>(row.size()) != n_tasks_) {
    throw ConfigError("metrics: result matrix row has wrong width");
  }
  for (int j = 0; j < n_tasks_; ++j) {
    fde_(stage, j) = row[static_cast<std::size_t>(j)].fde;
    mr_(stage, j) = row[static_cast<std::size_t>(j)].mr;
  }
  rows_filled_ = stage + 1;
}

Score ResultMatrix::at(int stage, int task) const {
  if (stage < 0 || stage >= rows_filled_ || task < 0 || task >= n_tasks_) {
    throw ConfigError("metrics: result matrix index out of filled range");
  }
  return {fde_(stage, task), mr_(stage, task)};
}

Score bwt(const ResultMatrix& matrix, int stage) {
  if (stage < 1) throw ConfigError("metrics: bwt needs at least two learned tasks");
  if (stage >= matrix.rows_filled()) throw ConfigError("metrics: bwt stage not filled");
  Score acc;
  for (int i = 0; i < stage; ++i) {
    acc.fde += matrix.fde()(stage, i) - matrix.fde()(i, i);
    acc.mr += matrix.mr()(stage, i) - matrix.mr()(i, i);
  }
  const double inv = 1.0 / static_cast<double>(stage);
  return {acc.fde * inv, acc.mr * inv};
}

Score ct(const ResultMatrix& matrix, int stage) {
  return matrix.at(stage, stage);
}

Score fwt(const ResultMatrix& matrix, int stage) {
  const int n = matrix.n_tasks();
  if (stage >= n - 1) {
    throw ConfigError("metrics: fwt undefined once every task has been seen");
  }
  if (stage >= matrix.rows_filled()) throw ConfigError("metrics: fwt stage not filled");
  Score acc;
  for (int k = stage + 1; k < n; ++k) {
    acc.fde += matrix.fde()(stage, k);
    acc.mr += matrix.mr()(stage, k);
  }
  const double inv = 1.0 / static_cast<double>(n - 1 - stage);
  return {acc.fde * inv, acc.mr * inv};
}

}  // namespace syrem
