#include "srgeo/eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "srgeo/errors.hpp"

namespace srgeo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- stencil tables -------------------------------------------------------

struct Offset {
  int d[3];
};

struct Tri {
  int v[3];  // indices into kOffsets
};

struct StencilTables {
  std::vector<Offset> offsets;          // 26 neighbor offsets
  std::vector<Tri> triangles;           // 48 surface triangles
  std::vector<std::vector<int>> membership;  // offset -> triangle ids
  int offset_id[3][3][3];               // (dx+1, dy+1, dz+1) -> index
};

const StencilTables& tables() {
  static const StencilTables t = [] {
    StencilTables s;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c) {
          if (a == 0 && b == 0 && c == 0) {
            s.offset_id[1][1][1] = -1;
            continue;
          }
          s.offset_id[a + 1][b + 1][c + 1] =
              static_cast<int>(s.offsets.size());
          s.offsets.push_back(Offset{{a, b, c}});
        }
    auto oid = [&](int a, int b, int c) {
      return s.offset_id[a + 1][b + 1][c + 1];
    };
    for (int axis = 0; axis < 3; ++axis) {
      const int b_axis = (axis + 1) % 3, c_axis = (axis + 2) % 3;
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        int f[3] = {0, 0, 0};
        f[axis] = sgn;
        for (int mid_axis : {b_axis, c_axis}) {
          const int other = mid_axis == b_axis ? c_axis : b_axis;
          for (int sm = -1; sm <= 1; sm += 2) {
            int m[3] = {f[0], f[1], f[2]};
            m[mid_axis] = sm;
            for (int sc = -1; sc <= 1; sc += 2) {
              int cr[3] = {m[0], m[1], m[2]};
              cr[other] = sc;
              s.triangles.push_back(
                  Tri{{oid(f[0], f[1], f[2]), oid(m[0], m[1], m[2]),
                       oid(cr[0], cr[1], cr[2])}});
            }
          }
        }
      }
    }
    s.membership.resize(s.offsets.size());
    for (int t_id = 0; t_id < static_cast<int>(s.triangles.size()); ++t_id) {
      for (int v : s.triangles[t_id].v) s.membership[v].push_back(t_id);
    }
    return s;
  }();
  return t;
}

// ---- local norm -----------------------------------------------------------

// F(travel)^2 = c_fwd max(0, w1.travel)^2 + c_bwd min(0, w1.travel)^2
//             + c2 (w2.travel)^2 + c3 (w3.travel)^2.
// The update works with u = (stencil point - node); travel = -u, so the
// forward region is w1.u <= 0.
struct LocalNorm {
  Vec3 w1, w2, w3;
  double c_fwd = 0.0, c_bwd = 0.0, c2 = 0.0, c3 = 0.0;
  bool asym = false;
};

struct Cand {
  double value = kInf;
};

// 1-point update: stencil vertex alone.
double solve1(const Vec3& v, double b, const LocalNorm& nm) {
  const double a1 = nm.w1.dot(v);
  const double a2 = nm.w2.dot(v);
  const double a3 = nm.w3.dot(v);
  const double cw = (!nm.asym || a1 <= 0.0) ? nm.c_fwd : nm.c_bwd;
  return b + std::sqrt(cw * a1 * a1 + nm.c2 * a2 * a2 + nm.c3 * a3 * a3);
}

// Interior KKT candidate for min over the K-simplex of sqrt(a'Qa) + b'a.
// Larger root of (mu 1 - b)' Q^{-1} (mu 1 - b) = 1; valid when the implied
// barycentric direction is nonnegative.
template <int K>
bool kkt_interior(const Eigen::Matrix<double, K, K>& q,
                  const Eigen::Matrix<double, K, 1>& b, double* value) {
  Eigen::Matrix<double, K, K> a = q.inverse();
  const Eigen::Matrix<double, K, 1> ones =
      Eigen::Matrix<double, K, 1>::Ones();
  const double p = ones.dot(a * ones);
  const double s = ones.dot(a * b);
  const double r = b.dot(a * b);
  const double disc = s * s - p * (r - 1.0);
  if (!(p > 0.0) || disc < 0.0) return false;
  const double mu = (s + std::sqrt(disc)) / p;
  const Eigen::Matrix<double, K, 1> dir = a * (mu * ones - b);
  const double total = dir.sum();
  if (!(total > 0.0)) return false;
  for (int i = 0; i < K; ++i) {
    if (dir[i] < -1e-12 * total) return false;
  }
  *value = mu;
  return true;
}

template <int K>
Eigen::Matrix<double, K, K> branch_q(
    const Eigen::Matrix<double, K, 1>& a1, const Eigen::Matrix<double, K, 1>& a2,
    const Eigen::Matrix<double, K, 1>& a3, double cw, double c2, double c3) {
  return cw * (a1 * a1.transpose()) + c2 * (a2 * a2.transpose()) +
         c3 * (a3 * a3.transpose());
}

// 1D minimization of sqrt(A s^2 + 2 B s + C) + (D s + E) over [lo, hi];
// used for the seam restriction of the asymmetric norm.
double min_quad_segment(double qa, double qb, double qc, double ld, double le,
                        double lo, double hi) {
  auto eval = [&](double s) {
    return std::sqrt(std::max(qa * s * s + 2.0 * qb * s + qc, 0.0)) +
           (ld * s + le);
  };
  double best = std::min(eval(lo), eval(hi));
  // stationary: (qa s + qb)^2 = ld^2 (qa s^2 + 2 qb s + qc)
  const double ca = qa * qa - ld * ld * qa;
  const double cb = qa * qb - ld * ld * qb;
  const double cc = qb * qb - ld * ld * qc;
  if (std::abs(ca) > 1e-300) {
    const double disc = cb * cb - ca * cc;
    if (disc >= 0.0) {
      const double rt = std::sqrt(disc);
      for (double s : {(-cb + rt) / ca, (-cb - rt) / ca}) {
        if (s > lo && s < hi) best = std::min(best, eval(s));
      }
    }
  } else if (std::abs(cb) > 1e-300) {
    const double s = -cc / (2.0 * cb);
    if (s > lo && s < hi) best = std::min(best, eval(s));
  }
  return best;
}

// Closed 2-simplex (edge) solve.
double solve2(const Vec3& va, const Vec3& vb, double ba, double bb,
              const LocalNorm& nm) {
  using V2 = Eigen::Vector2d;
  const V2 a1(nm.w1.dot(va), nm.w1.dot(vb));
  const V2 a2(nm.w2.dot(va), nm.w2.dot(vb));
  const V2 a3(nm.w3.dot(va), nm.w3.dot(vb));
  const V2 b(ba, bb);

  double best = kInf;
  bool have_interior = false;
  const int n_branches = nm.asym ? 2 : 1;
  for (int br = 0; br < n_branches; ++br) {
    const double cw = br == 0 ? nm.c_fwd : nm.c_bwd;
    Eigen::Matrix2d q = branch_q<2>(a1, a2, a3, cw, nm.c2, nm.c3);
    double mu;
    if (kkt_interior<2>(q, b, &mu)) {
      if (nm.asym) {
        // region check: w1.u <= 0 for the forward branch
        Eigen::Matrix2d inv = q.inverse();
        V2 dir = inv * (mu * V2::Ones() - b);
        const double g = a1.dot(dir);
        const bool ok = br == 0 ? g <= 1e-12 : g >= -1e-12;
        if (!ok) continue;
      }
      best = std::min(best, mu);
      have_interior = true;
    }
  }
  if (nm.asym && !have_interior) {
    // seam point: alpha a1 components sum to zero on the edge
    const double da = a1[0], db = a1[1];
    if (std::abs(da - db) > 1e-300) {
      const double t = db / (db - da);  // alpha for va
      if (t > 0.0 && t < 1.0) {
        const Vec3 u = t * va + (1.0 - t) * vb;
        const double f2 = nm.c2 * std::pow(nm.w2.dot(u), 2) +
                          nm.c3 * std::pow(nm.w3.dot(u), 2);
        best = std::min(best, std::sqrt(f2) + t * ba + (1.0 - t) * bb);
      }
    }
  }
  if (have_interior) return best;
  best = std::min(best, solve1(va, ba, nm));
  best = std::min(best, solve1(vb, bb, nm));
  return best;
}

// Closed 3-simplex (triangle) solve.
double solve3(const Vec3& va, const Vec3& vb, const Vec3& vc, double ba,
              double bb, double bc, const LocalNorm& nm) {
  using V3 = Eigen::Vector3d;
  const V3 a1(nm.w1.dot(va), nm.w1.dot(vb), nm.w1.dot(vc));
  const V3 a2(nm.w2.dot(va), nm.w2.dot(vb), nm.w2.dot(vc));
  const V3 a3(nm.w3.dot(va), nm.w3.dot(vb), nm.w3.dot(vc));
  const V3 b(ba, bb, bc);

  double best = kInf;
  bool have_interior = false;
  const int n_branches = nm.asym ? 2 : 1;
  for (int br = 0; br < n_branches; ++br) {
    const double cw = br == 0 ? nm.c_fwd : nm.c_bwd;
    Mat3 q = branch_q<3>(a1, a2, a3, cw, nm.c2, nm.c3);
    double mu;
    if (kkt_interior<3>(q, b, &mu)) {
      if (nm.asym) {
        Mat3 inv = q.inverse();
        V3 dir = inv * (mu * V3::Ones() - b);
        const double g = a1.dot(dir);
        const bool ok = br == 0 ? g <= 1e-12 : g >= -1e-12;
        if (!ok) continue;
      }
      best = std::min(best, mu);
      have_interior = true;
    }
  }
  if (have_interior) return best;

  if (nm.asym) {
    // Seam: {alpha : a1.alpha = 0, 1.alpha = 1, alpha >= 0}, a line segment.
    // Parametrize alpha(sigma) = p + sigma * d with d in the null space of
    // rows (1,1,1) and a1.
    const V3 ones = V3::Ones();
    const V3 d = ones.cross(a1);
    if (d.norm() > 1e-14) {
      // particular point: solve the 2x3 system with least squares
      Eigen::Matrix<double, 2, 3> m;
      m.row(0) = ones.transpose();
      m.row(1) = a1.transpose();
      const Eigen::Vector2d rhs(1.0, 0.0);
      const V3 p =
          m.transpose() * (m * m.transpose()).inverse() * rhs;
      // sigma bounds from alpha >= 0
      double lo = -kInf, hi = kInf;
      bool feasible = true;
      for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) < 1e-15) {
          if (p[i] < -1e-12) feasible = false;
        } else if (d[i] > 0.0) {
          lo = std::max(lo, -p[i] / d[i]);
        } else {
          hi = std::min(hi, -p[i] / d[i]);
        }
      }
      if (feasible && lo < hi && std::isfinite(lo) && std::isfinite(hi)) {
        // f(sigma) = sqrt(quad) + linear on the seam (both branches agree)
        const Vec3 up = p[0] * va + p[1] * vb + p[2] * vc;
        const Vec3 ud = d[0] * va + d[1] * vb + d[2] * vc;
        const double p2 = nm.w2.dot(up), d2 = nm.w2.dot(ud);
        const double p3 = nm.w3.dot(up), d3 = nm.w3.dot(ud);
        const double qa = nm.c2 * d2 * d2 + nm.c3 * d3 * d3;
        const double qb = nm.c2 * p2 * d2 + nm.c3 * p3 * d3;
        const double qc = nm.c2 * p2 * p2 + nm.c3 * p3 * p3;
        const double ld = b.dot(d), le = b.dot(p);
        best = std::min(best, min_quad_segment(qa, qb, qc, ld, le, lo, hi));
      }
    }
  }

  best = std::min(best, solve2(va, vb, ba, bb, nm));
  best = std::min(best, solve2(va, vc, ba, bc, nm));
  best = std::min(best, solve2(vb, vc, bb, bc, nm));
  return best;
}

// ---- frame caches ---------------------------------------------------------

struct FrameCache {
  // coframe vectors per (i, k) for SO3, per k for SE2
  std::vector<Vec3> w1, w2, w3;
  bool per_ik = false;
  int nx = 0;

  const Vec3& get1(int i, int k) const { return w1[key(i, k)]; }
  const Vec3& get2(int i, int k) const { return w2[key(i, k)]; }
  const Vec3& get3(int i, int k) const { return w3[key(i, k)]; }
  std::size_t key(int i, int k) const {
    return per_ik ? static_cast<std::size_t>(k) * nx + i
                  : static_cast<std::size_t>(k);
  }
};

FrameCache build_frame_cache(const Grid3D& g) {
  FrameCache fc;
  if (g.preset == GroupPreset::SO3) {
    fc.per_ik = true;
    fc.nx = g.nx;
    fc.w1.resize(static_cast<std::size_t>(g.nx) * g.nt);
    fc.w2.resize(fc.w1.size());
    fc.w3.resize(fc.w1.size());
    for (int k = 0; k < g.nt; ++k) {
      for (int i = 0; i < g.nx; ++i) {
        const CoframeCoefficients w = coframe_at(g.xc(i), g.tc(k));
        const std::size_t id = static_cast<std::size_t>(k) * g.nx + i;
        fc.w1[id] = w.w1;
        fc.w2[id] = w.w2;
        fc.w3[id] = w.w3;
      }
    }
  } else {
    fc.per_ik = false;
    fc.w1.resize(g.nt);
    fc.w2.resize(g.nt);
    fc.w3.resize(g.nt);
    for (int k = 0; k < g.nt; ++k) {
      const double th = g.tc(k);
      fc.w1[k] = Vec3(std::cos(th), std::sin(th), 0.0);
      fc.w2[k] = Vec3(0.0, 0.0, 1.0);
      fc.w3[k] = Vec3(-std::sin(th), std::cos(th), 0.0);
    }
  }
  return fc;
}

}  // namespace

NodeMetric node_metric(const Grid3D& g, const MetricSpec& m, int i, int j,
                       int k) {
  NodeMetric nm;
  if (g.preset == GroupPreset::SO3) {
    const CoframeCoefficients w = coframe_at(g.xc(i), g.tc(k));
    nm.w1 = w.w1;
    nm.w2 = w.w2;
    nm.w3 = w.w3;
  } else {
    const double th = g.tc(k);
    nm.w1 = Vec3(std::cos(th), std::sin(th), 0.0);
    nm.w2 = Vec3(0.0, 0.0, 1.0);
    nm.w3 = Vec3(-std::sin(th), std::cos(th), 0.0);
  }
  const double c = m.cost_at(g, i, j);
  const double c2 = c * c;
  nm.c1 = c2 * m.xi * m.xi;
  nm.c2 = c2;
  nm.c3 = c2 * m.xi * m.xi / (m.eps * m.eps);
  return nm;
}

MetricMatrices assemble_metric(const Grid3D& g, const MetricSpec& m, int i,
                               int j, int k) {
  if (g.preset == GroupPreset::SO3 && (i == 0 || i == g.nx - 1)) {
    throw ChartSingularityError("assemble_metric: singular row |x| = pi/2");
  }
  const NodeMetric nm = node_metric(g, m, i, j, k);
  MetricMatrices out;
  out.m = nm.c1 * nm.w1 * nm.w1.transpose() +
          nm.c2 * nm.w2 * nm.w2.transpose() +
          nm.c3 * nm.w3 * nm.w3.transpose();
  Vec3 x1, x2, x3;
  if (g.preset == GroupPreset::SO3) {
    const FrameCoefficients f = frame_at(g.xc(i), g.tc(k));
    x1 = f.x1;
    x2 = f.x2;
    x3 = f.x3;
  } else {
    const double th = g.tc(k);
    x1 = Vec3(std::cos(th), std::sin(th), 0.0);
    x2 = Vec3(0.0, 0.0, 1.0);
    x3 = Vec3(-std::sin(th), std::cos(th), 0.0);
  }
  out.m_inv = x1 * x1.transpose() / nm.c1 + x2 * x2.transpose() / nm.c2 +
              x3 * x3.transpose() / nm.c3;
  return out;
}

DistanceGrid solve(const Grid3D& grid, const MetricSpec& metric,
                   const Vec3& seed_chart, const SolveOptions& opts) {
  if (metric.preset != grid.preset) {
    throw ConfigError("solve: metric/grid preset mismatch");
  }
  if (!(metric.xi > 0.0)) throw ConfigError("solve: xi must be positive");
  if (!(metric.eps > 0.0 && metric.eps <= 1.0)) {
    throw ConfigError("solve: eps must be in (0, 1]");
  }
  if (!metric.cost_xy.empty()) {
    if (metric.cost_xy.size() !=
        static_cast<std::size_t>(grid.nx) * grid.ny) {
      throw ConfigError("solve: cost field size mismatch");
    }
    for (double c : metric.cost_xy) {
      if (!(c > 0.0)) throw ConfigError("solve: cost must be positive");
    }
  }

  DistanceGrid d;
  d.grid = grid;
  d.metric = metric;
  d.cuspless = opts.cuspless;
  d.w.assign(grid.size(), kInf);
  d.state.assign(grid.size(), NodeState::Far);

  const bool so3 = grid.preset == GroupPreset::SO3;
  if (so3) {
    // pole rows are chart-singular; excluded from updates
    for (int k = 0; k < grid.nt; ++k)
      for (int j = 0; j < grid.ny; ++j) {
        d.state[grid.index(0, j, k)] = NodeState::Excluded;
        d.state[grid.index(grid.nx - 1, j, k)] = NodeState::Excluded;
      }
  }

  const auto seed = grid.nearest_node(seed_chart[0], seed_chart[1],
                                      seed_chart[2]);
  d.seed = seed;
  const std::size_t seed_idx = grid.index(seed[0], seed[1], seed[2]);
  if (d.state[seed_idx] == NodeState::Excluded) {
    throw ConfigError("solve: seed lies on a singular grid row");
  }

  const FrameCache fc = build_frame_cache(grid);
  const StencilTables& st = tables();
  const Vec3 spacing(grid.dx, grid.dy, grid.dt);

  // physical offset vectors per stencil offset
  std::vector<Vec3> phys(st.offsets.size());
  for (std::size_t o = 0; o < st.offsets.size(); ++o) {
    phys[o] = Vec3(st.offsets[o].d[0] * grid.dx, st.offsets[o].d[1] * grid.dy,
                   st.offsets[o].d[2] * grid.dt);
  }

  using HeapItem = std::pair<double, std::size_t>;
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
  d.w[seed_idx] = 0.0;
  d.state[seed_idx] = NodeState::Trial;
  heap.emplace(0.0, seed_idx);

  double last_pop = -kInf;
  const double xi2 = metric.xi * metric.xi;
  const double eps2 = metric.eps * metric.eps;

  auto neighbor_index = [&](int i, int j, int k, const Offset& o, int* ni,
                            int* nj, int* nk) -> bool {
    int ii = i + o.d[0];
    if (ii < 0 || ii >= grid.nx) return false;
    int jj = j + o.d[1];
    if (grid.y_periodic()) {
      if (jj < 0) jj += grid.ny;
      if (jj >= grid.ny) jj -= grid.ny;
    } else if (jj < 0 || jj >= grid.ny) {
      return false;
    }
    int kk = k + o.d[2];
    if (kk < 0) kk += grid.nt;
    if (kk >= grid.nt) kk -= grid.nt;
    *ni = ii;
    *nj = jj;
    *nk = kk;
    return true;
  };

  while (!heap.empty()) {
    const auto [val, idx] = heap.top();
    heap.pop();
    if (val > d.w[idx] + 1e-15 * (1.0 + std::abs(val))) continue;  // stale
    if (d.state[idx] == NodeState::Accepted) d.stats.reopened++;
    if (val < last_pop - 1e-12 * (1.0 + std::abs(val))) {
      d.stats.causality_violations++;
    }
    last_pop = std::max(last_pop, val);
    d.state[idx] = NodeState::Accepted;
    d.stats.pops++;
    d.stats.max_heap_value = std::max(d.stats.max_heap_value, val);

    if (opts.stop_node) {
      const auto& s = *opts.stop_node;
      if (idx == grid.index(s[0], s[1], s[2])) break;
    }

    int pi, pj, pk;
    grid.split(idx, pi, pj, pk);

    // Relax every neighbor q of the accepted node p, using only stencil
    // triangles of q that contain p.
    for (std::size_t o = 0; o < st.offsets.size(); ++o) {
      int qi, qj, qk;
      if (!neighbor_index(pi, pj, pk, st.offsets[o], &qi, &qj, &qk)) continue;
      const std::size_t q_idx = grid.index(qi, qj, qk);
      if (d.state[q_idx] == NodeState::Excluded) continue;

      // offset of p as seen from q
      const int rp = st.offset_id[1 - st.offsets[o].d[0]]
                                 [1 - st.offsets[o].d[1]]
                                 [1 - st.offsets[o].d[2]];

      LocalNorm nm;
      nm.w1 = fc.get1(qi, qk);
      nm.w2 = fc.get2(qi, qk);
      nm.w3 = fc.get3(qi, qk);
      const double c = metric.cost_at(grid, qi, qj);
      const double cc = c * c;
      nm.c_fwd = cc * xi2;
      nm.c_bwd = opts.cuspless ? cc * xi2 / eps2 : nm.c_fwd;
      nm.c2 = cc;
      nm.c3 = cc * xi2 / eps2;
      nm.asym = opts.cuspless;

      const double wp = d.w[idx];
      double best = solve1(phys[rp], wp, nm);

      for (int t_id : st.membership[rp]) {
        const Tri& tr = st.triangles[t_id];
        // gather the two other vertices
        double bv[3];
        Vec3 vv[3];
        int nfinite = 0;
        bool has_p = false;
        for (int m = 0; m < 3; ++m) {
          const int off_id = tr.v[m];
          int vi, vj, vk;
          if (!neighbor_index(qi, qj, qk, st.offsets[off_id], &vi, &vj, &vk)) {
            continue;
          }
          const std::size_t v_idx = grid.index(vi, vj, vk);
          if (d.state[v_idx] == NodeState::Excluded) continue;
          const double wv = d.w[v_idx];
          if (!std::isfinite(wv)) continue;
          if (off_id == rp) has_p = true;
          bv[nfinite] = wv;
          vv[nfinite] = phys[off_id];
          ++nfinite;
        }
        if (!has_p) continue;
        if (nfinite == 3) {
          best = std::min(best, solve3(vv[0], vv[1], vv[2], bv[0], bv[1],
                                       bv[2], nm));
        } else if (nfinite == 2) {
          best = std::min(best, solve2(vv[0], vv[1], bv[0], bv[1], nm));
        }
      }

      if (best < d.w[q_idx] - 1e-13 * (1.0 + std::abs(best))) {
        d.w[q_idx] = best;
        if (d.state[q_idx] == NodeState::Far) d.state[q_idx] = NodeState::Trial;
        heap.emplace(best, q_idx);
      }
    }
  }
  return d;
}

// ---- interpolation --------------------------------------------------------

namespace {

void cr_weights(double u, double w[4], double dw[4]) {
  const double u2 = u * u, u3 = u2 * u;
  w[0] = 0.5 * (-u + 2.0 * u2 - u3);
  w[1] = 0.5 * (2.0 - 5.0 * u2 + 3.0 * u3);
  w[2] = 0.5 * (u + 4.0 * u2 - 3.0 * u3);
  w[3] = 0.5 * (-u2 + u3);
  dw[0] = 0.5 * (-1.0 + 4.0 * u - 3.0 * u2);
  dw[1] = 0.5 * (-10.0 * u + 9.0 * u2);
  dw[2] = 0.5 * (1.0 + 8.0 * u - 9.0 * u2);
  dw[3] = 0.5 * (-2.0 * u + 3.0 * u2);
}

struct AxisStencil {
  int idx[4];
  double w[4];
  double dw[4];
  double u = 0.0;
  bool clamped = false;
};

AxisStencil axis_stencil(double coord, double origin, double step, int n,
                         bool periodic) {
  AxisStencil s;
  double f = (coord - origin) / step;
  int i0;
  double u;
  if (periodic) {
    f = f - std::floor(f / n) * n;
    i0 = static_cast<int>(std::floor(f));
    u = f - i0;
    if (i0 >= n) i0 -= n;
    for (int m = 0; m < 4; ++m) {
      int id = i0 - 1 + m;
      id %= n;
      if (id < 0) id += n;
      s.idx[m] = id;
    }
  } else {
    if (f < -1e-9 || f > n - 1 + 1e-9) {
      throw ConfigError("sample_w: point outside the grid");
    }
    f = std::clamp(f, 0.0, static_cast<double>(n - 1));
    i0 = std::min(static_cast<int>(std::floor(f)), n - 2);
    u = f - i0;
    for (int m = 0; m < 4; ++m) {
      int id = std::clamp(i0 - 1 + m, 0, n - 1);
      if (id != i0 - 1 + m) s.clamped = true;
      s.idx[m] = id;
    }
  }
  s.u = u;
  cr_weights(u, s.w, s.dw);
  for (int m = 0; m < 4; ++m) s.dw[m] /= step;
  return s;
}

}  // namespace

SampledW sample_w(const DistanceGrid& d, double x, double y, double theta) {
  const Grid3D& g = d.grid;
  const bool so3 = g.preset == GroupPreset::SO3;
  const double x_origin = so3 ? -kHalfPi : g.x0;
  const double y_origin = so3 ? 0.0 : g.y0;

  const AxisStencil sx = axis_stencil(x, x_origin, g.dx, g.nx, false);
  const AxisStencil sy = axis_stencil(y, y_origin, g.dy, g.ny, so3);
  const AxisStencil stt = axis_stencil(theta, 0.0, g.dt, g.nt, true);

  SampledW out;
  out.boundary_stencil = sx.clamped || sy.clamped;

  double vals[4][4][4];
  bool all_finite = true;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        const double v = d.w[g.index(sx.idx[a], sy.idx[b], stt.idx[c])];
        vals[a][b][c] = v;
        if (!std::isfinite(v)) all_finite = false;
      }

  if (all_finite) {
    double w = 0.0, gx = 0.0, gy = 0.0, gt = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) {
          const double v = vals[a][b][c];
          w += sx.w[a] * sy.w[b] * stt.w[c] * v;
          gx += sx.dw[a] * sy.w[b] * stt.w[c] * v;
          gy += sx.w[a] * sy.dw[b] * stt.w[c] * v;
          gt += sx.w[a] * sy.w[b] * stt.dw[c] * v;
        }
    out.w = w;
    out.grad_chart = Vec3(gx, gy, gt);
  } else {
    // degrade to trilinear on the inner 2x2x2 cell
    out.degraded_linear = true;
    double w = 0.0, gx = 0.0, gy = 0.0, gt = 0.0;
    double cell[2][2][2];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          const double v = vals[a + 1][b + 1][c + 1];
          if (!std::isfinite(v)) {
            throw NumericError("sample_w: W not finite at the sample point");
          }
          cell[a][b][c] = v;
        }
    const double wx[2] = {1.0 - sx.u, sx.u};
    const double wy[2] = {1.0 - sy.u, sy.u};
    const double wt[2] = {1.0 - stt.u, stt.u};
    const double dx_[2] = {-1.0 / g.dx, 1.0 / g.dx};
    const double dy_[2] = {-1.0 / g.dy, 1.0 / g.dy};
    const double dt_[2] = {-1.0 / g.dt, 1.0 / g.dt};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          const double v = cell[a][b][c];
          w += wx[a] * wy[b] * wt[c] * v;
          gx += dx_[a] * wy[b] * wt[c] * v;
          gy += wx[a] * dy_[b] * wt[c] * v;
          gt += wx[a] * wy[b] * dt_[c] * v;
        }
    out.w = w;
    out.grad_chart = Vec3(gx, gy, gt);
  }

  Vec3 x1, x2, x3;
  if (so3) {
    const FrameCoefficients f = frame_at(x, theta);
    x1 = f.x1;
    x2 = f.x2;
    x3 = f.x3;
  } else {
    x1 = Vec3(std::cos(theta), std::sin(theta), 0.0);
    x2 = Vec3(0.0, 0.0, 1.0);
    x3 = Vec3(-std::sin(theta), std::cos(theta), 0.0);
  }
  out.x1w = x1.dot(out.grad_chart);
  out.x2w = x2.dot(out.grad_chart);
  out.x3w = x3.dot(out.grad_chart);
  return out;
}

}  // namespace srgeo
