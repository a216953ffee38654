#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "srgeo/lie_so3.hpp"

namespace srgeo {

enum class GroupPreset : std::uint8_t { SO3 = 0, SE2 = 1 };

// Periodic (y, theta) lattice over the chart. SO3: x in [-pi/2, pi/2] with
// both endpoints present (excluded singular rows), y_j = wrap(j*dy),
// theta_k = wrap(k*dt) so the identity (0,0,0) is always on-grid. SE2:
// clamped [x0, x0 + (nx-1)dx] x [y0, ...] box with periodic theta.
struct Grid3D {
  GroupPreset preset = GroupPreset::SO3;
  int nx = 0, ny = 0, nt = 0;
  double dx = 0.0, dy = 0.0, dt = 0.0;
  double x0 = 0.0, y0 = 0.0;  // SE2 box origin; unused for SO3

  std::size_t size() const {
    return static_cast<std::size_t>(nx) * ny * nt;
  }
  // Row-major with x fastest.
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(nx) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(ny) * k);
  }
  void split(std::size_t idx, int& i, int& j, int& k) const {
    i = static_cast<int>(idx % nx);
    j = static_cast<int>((idx / nx) % ny);
    k = static_cast<int>(idx / (static_cast<std::size_t>(nx) * ny));
  }

  double xc(int i) const {
    return preset == GroupPreset::SO3 ? -kHalfPi + i * dx : x0 + i * dx;
  }
  double yc(int j) const {
    return preset == GroupPreset::SO3 ? wrap_angle(j * dy) : y0 + j * dy;
  }
  double tc(int k) const { return wrap_angle(k * dt); }

  bool y_periodic() const { return preset == GroupPreset::SO3; }

  // Nearest node index triplet to a chart point; throws if outside the
  // clamped axes.
  std::array<int, 3> nearest_node(double x, double y, double theta) const;

  double min_spacing() const;
};

Grid3D make_so3_grid(int nx, int ny, int nt);
Grid3D make_se2_grid(int nx, int ny, int nt, double x_halfwidth,
                     double y_halfwidth);

// Per-node solver state.
enum class NodeState : std::uint8_t { Far = 0, Trial = 1, Accepted = 2,
                                      Excluded = 3 };

struct MetricSpec {
  double xi = 1.0;
  double eps = 0.1;
  GroupPreset preset = GroupPreset::SO3;
  // External cost per (i, j) node of the spatial slice (size nx*ny); empty
  // means uniform cost 1. Lifted cost is theta-invariant.
  std::vector<double> cost_xy;

  double cost_at(const Grid3D& g, int i, int j) const {
    return cost_xy.empty() ? 1.0
                           : cost_xy[static_cast<std::size_t>(j) * g.nx + i];
  }
};

struct SolveStats {
  std::size_t pops = 0;
  std::size_t reopened = 0;
  std::size_t causality_violations = 0;
  double max_heap_value = 0.0;
};

struct DistanceGrid {
  Grid3D grid;
  MetricSpec metric;
  bool cuspless = false;
  std::array<int, 3> seed{0, 0, 0};
  std::vector<double> w;
  std::vector<NodeState> state;
  SolveStats stats;
};

// Binary dump: magic "SRFM", version u32, preset u8, nx/ny/nt u32,
// dx/dy/dt f64, xi f64, eps f64, then W row-major (x fastest). A JSON
// sidecar <path>.json carries seed, box origin and flags.
void save_distance_grid(const DistanceGrid& d, const std::string& path);
DistanceGrid load_distance_grid(const std::string& path);

// 2D variant of the same container used for cost fields (nt = 1).
struct CostGridFile {
  Grid3D grid;                 // nt = 1
  std::vector<double> values;  // size nx*ny
};
void save_cost_grid(const CostGridFile& c, const std::string& path);
CostGridFile load_cost_grid(const std::string& path);

}  // namespace srgeo
