#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace syrem {

using Scalar = double;
using Vec = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using Mat = Eigen::MatrixXd;

/// One forecasting case: observed history of the target agent plus its
/// surroundings, flattened into a fixed-length feature vector, and the
/// ground-truth future endpoint in the same target-centered frame.
struct Sample {
  int task_id = 0;
  std::int64_t case_id = 0;
  Vec features;                  // normalized history, target agent centered at t_c
  Vec2 gt_endpoint{0.0, 0.0};    // target position at t_c + t_pred, meters
  double ta_speed = 0.0;         // target speed at t_c, m/s
  Vec2 heading_unit{1.0, 0.0};   // ground-truth displacement direction, unit norm
};

}  // namespace syrem
