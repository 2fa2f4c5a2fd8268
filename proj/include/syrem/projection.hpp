#pragma once

#include "syrem/errors.hpp"
#include "syrem/net.hpp"
#include "syrem/types.hpp"

namespace syrem {

// Gradient projection constraint: keep the update gradient non-conflicting
// with the memory gradient, <g, g_mem> >= 0. When the raw gradient violates
// the constraint it is replaced by the closest feasible vector in L2 norm,
// which has the closed form g - (g . g_mem / |g_mem|^2) g_mem with the
// multiplier lambda = -g . g_mem / |g_mem|^2 >= 0.

struct ProjectionOutcome {
  GradVector gradient;        // feasible update direction
  bool projected = false;     // constraint was active
  double inner_product = 0.0; // g . g_mem before projection
  double lambda = 0.0;        // KKT multiplier, 0 when not projected
};

/// Projects `g` onto the half-space {h : h . g_mem >= 0}. A memory gradient
/// with squared norm below `eps` carries no direction and is treated as
/// satisfying the constraint. Throws ConfigError on misaligned vectors.
inline ProjectionOutcome project(const Eigen::Ref<const Vec>& g,
                                 const Eigen::Ref<const Vec>& g_mem,
                                 double eps = 1e-12) {
  if (g.size() != g_mem.size()) {
    throw ConfigError("projection: misaligned gradient vectors");
  }
  ProjectionOutcome out;
  out.inner_product = g.dot(g_mem);
  const double mem_sq = g_mem.squaredNorm();
  if (out.inner_product >= 0.0 || mem_sq < eps) {
    out.gradient.values = g;
    return out;
  }
  out.projected = true;
  out.lambda = -out.inner_product / mem_sq;
  out.gradient.values = g + out.lambda * g_mem;
  return out;
}

inline ProjectionOutcome project(const GradVector& g, const GradVector& g_mem,
                                 double eps = 1e-12) {
  return project(g.values, g_mem.values, eps);
}

}  // namespace syrem
