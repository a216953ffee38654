#pragma once

#include <optional>

#include "srgeo/grid.hpp"

namespace srgeo {

// Local frame data at a node: coframe rows (chart units) and the metric
// weights per coframe direction.
struct NodeMetric {
  Vec3 w1, w2, w3;       // coframe coefficient vectors over (dx, dy, dtheta)
  double c1, c2, c3;     // weights C^2 xi^2, C^2, C^2 xi^2 / eps^2
};

NodeMetric node_metric(const Grid3D& g, const MetricSpec& m, int i, int j,
                       int k);

// Full metric tensor M_eps (and inverse) in the fixed chart coframe; throws
// on the singular SO3 rows |x| = pi/2.
struct MetricMatrices {
  Mat3 m;
  Mat3 m_inv;
};
MetricMatrices assemble_metric(const Grid3D& g, const MetricSpec& m, int i,
                               int j, int k);

struct SolveOptions {
  bool cuspless = false;
  // Optional early exit once this chart point's node is accepted.
  std::optional<std::array<int, 3>> stop_node;
};

// Causal label-correcting wavefront propagation for the Riemannian
// eps-approximation of the SR eikonal equation. Seed is snapped to the
// nearest node.
DistanceGrid solve(const Grid3D& grid, const MetricSpec& metric,
                   const Vec3& seed_chart, const SolveOptions& opts = {});

inline DistanceGrid solve_cuspless(const Grid3D& grid, const MetricSpec& m,
                                   const Vec3& seed_chart) {
  SolveOptions o;
  o.cuspless = true;
  return solve(grid, m, seed_chart, o);
}

// Interpolated value and derivatives of W at a chart point (tricubic
// Hermite, periodic axes; one-sided near clamped boundaries, flagged).
struct SampledW {
  double w = 0.0;
  Vec3 grad_chart;  // (dW/dx, dW/dy, dW/dtheta)
  double x1w = 0.0, x2w = 0.0, x3w = 0.0;
  bool boundary_stencil = false;
  bool degraded_linear = false;  // non-finite outer stencil, trilinear used
};

SampledW sample_w(const DistanceGrid& d, double x, double y, double theta);

}  // namespace srgeo
