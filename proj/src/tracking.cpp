#include "srgeo/tracking.hpp"

#include <algorithm>
#include <cmath>

#include "srgeo/errors.hpp"

namespace srgeo {

namespace {

double wrap_if(double v, bool periodic) { return periodic ? wrap_angle(v) : v; }

// Bilinear interpolation of the nodal (i, j) cost slice.
double cost_interp(const Grid3D& g, const std::vector<double>& cost, double x,
                   double y) {
  if (cost.empty()) return 1.0;
  const bool so3 = g.preset == GroupPreset::SO3;
  double fx = so3 ? (x + kHalfPi) / g.dx : (x - g.x0) / g.dx;
  fx = std::clamp(fx, 0.0, static_cast<double>(g.nx - 1));
  int i0 = std::min(static_cast<int>(fx), g.nx - 2);
  const double ux = fx - i0;

  double fy = so3 ? y / g.dy : (y - g.y0) / g.dy;
  int j0;
  double uy;
  if (so3) {
    fy -= std::floor(fy / g.ny) * g.ny;
    j0 = static_cast<int>(fy) % g.ny;
    uy = fy - std::floor(fy);
  } else {
    fy = std::clamp(fy, 0.0, static_cast<double>(g.ny - 1));
    j0 = std::min(static_cast<int>(fy), g.ny - 2);
    uy = fy - j0;
  }
  const int j1 = so3 ? (j0 + 1) % g.ny : j0 + 1;
  auto at = [&](int i, int j) {
    return cost[static_cast<std::size_t>(j) * g.nx + i];
  };
  return (1.0 - ux) * (1.0 - uy) * at(i0, j0) + ux * (1.0 - uy) * at(i0 + 1, j0) +
         (1.0 - ux) * uy * at(i0, j1) + ux * uy * at(i0 + 1, j1);
}

struct Controls {
  double u1, u2, u3;
  std::uint32_t flags;
  double w;
  double cost;
};

Controls controls_at(const DistanceGrid& d, double x, double y, double theta,
                     bool riemannian) {
  const SampledW s = sample_w(d, x, y, theta);
  const double c = cost_interp(d.grid, d.metric.cost_xy, x, y);
  const double xi2 = d.metric.xi * d.metric.xi;
  Controls u;
  u.w = s.w;
  u.cost = c;
  const double x1w = d.cuspless ? std::max(0.0, s.x1w) : s.x1w;
  u.u1 = x1w / (xi2 * c * c);
  u.u2 = s.x2w / (c * c);
  u.u3 = riemannian
             ? s.x3w * d.metric.eps * d.metric.eps / (xi2 * c * c)
             : 0.0;
  u.flags = 0;
  if (s.boundary_stencil) u.flags |= kTrackBoundaryStencil;
  if (s.degraded_linear) u.flags |= kTrackDegradedInterp;
  return u;
}

Vec3 chart_velocity(const Grid3D& g, double x, double theta, double u1,
                    double u2, double u3) {
  Vec3 x1, x2, x3;
  if (g.preset == GroupPreset::SO3) {
    const FrameCoefficients f = frame_at(x, theta);
    x1 = f.x1;
    x2 = f.x2;
    x3 = f.x3;
  } else {
    x1 = Vec3(std::cos(theta), std::sin(theta), 0.0);
    x2 = Vec3(0.0, 0.0, 1.0);
    x3 = Vec3(-std::sin(theta), std::cos(theta), 0.0);
  }
  return u1 * x1 + u2 * x2 + u3 * x3;
}

}  // namespace

Track backtrack(const DistanceGrid& d, const Vec3& g1_chart,
                const BacktrackOptions& opts) {
  const Grid3D& g = d.grid;
  const bool so3 = g.preset == GroupPreset::SO3;

  Track track;
  track.preset = g.preset;
  track.xi = d.metric.xi;
  track.cuspless = d.cuspless;

  double x = g1_chart[0];
  double y = wrap_if(g1_chart[1], so3);
  double theta = wrap_angle(g1_chart[2]);

  const SampledW s0 = sample_w(d, x, y, theta);
  if (!std::isfinite(s0.w)) {
    throw UnreachableError("backtrack: endpoint has infinite distance");
  }
  const double w1 = s0.w;
  track.w_end = w1;
  if (w1 <= 0.0) throw ConfigError("backtrack: endpoint is at the seed");

  const double cell = g.min_spacing();
  const long n_steps =
      std::max<long>(16, static_cast<long>(
                             std::ceil(opts.step_factor * w1 / cell)));
  const double dtau = 1.0 / static_cast<double>(n_steps);

  const double xs = g.xc(d.seed[0]);
  const double ys = g.yc(d.seed[1]);
  const double ts = g.tc(d.seed[2]);
  auto in_seed_cell = [&](double px, double py, double pt) {
    const double ddx = std::abs(px - xs);
    const double ddy = so3 ? std::abs(wrap_angle(py - ys)) : std::abs(py - ys);
    const double ddt = std::abs(wrap_angle(pt - ts));
    return ddx <= g.dx && ddy <= g.dy && ddt <= g.dt;
  };

  double prev_w = w1;
  double tau = 0.0;
  const double tiny_speed = 1e-9;
  bool done = false;

  auto record = [&](const Controls& u) {
    TrackSample smp;
    smp.tau = tau;
    smp.x = x;
    smp.y = y;
    smp.theta = theta;
    smp.n = so3 ? spherical_projection(x, y) : Vec3::Zero();
    smp.u1 = u.u1;
    smp.u2 = u.u2;
    smp.w = u.w;
    smp.cost = u.cost;
    smp.flags = u.flags;
    if (!track.samples.empty() && u.w >= prev_w - 1e-12) {
      track.monotone_w = false;
    }
    prev_w = u.w;
    track.samples.push_back(std::move(smp));
  };

  record(controls_at(d, x, y, theta, opts.riemannian_descent));

  while (!done) {
    if (tau > opts.tau_max) {
      throw NumericError("backtrack: failed to reach the seed cell (tau > " +
                         std::to_string(opts.tau_max) + ")");
    }
    // RK4 step of gamma' = -W(g1) * (u1 X1 + u2 X2 (+ u3 X3))
    auto deriv = [&](double px, double py, double pt) {
      const Controls u = controls_at(d, px, py, pt, opts.riemannian_descent);
      return (-w1) * chart_velocity(g, px, pt, u.u1, u.u2, u.u3);
    };
    const Controls ucur = controls_at(d, x, y, theta, opts.riemannian_descent);
    const double speed = w1 * std::hypot(ucur.u1, ucur.u2, ucur.u3);
    if (speed < tiny_speed && !in_seed_cell(x, y, theta)) {
      throw NumericError("backtrack: descent stalled at (" +
                         std::to_string(x) + ", " + std::to_string(y) + ", " +
                         std::to_string(theta) + ")");
    }
    const Vec3 k1 = deriv(x, y, theta);
    const Vec3 k2 = deriv(x + 0.5 * dtau * k1[0], y + 0.5 * dtau * k1[1],
                          theta + 0.5 * dtau * k1[2]);
    const Vec3 k3 = deriv(x + 0.5 * dtau * k2[0], y + 0.5 * dtau * k2[1],
                          theta + 0.5 * dtau * k2[2]);
    const Vec3 k4 =
        deriv(x + dtau * k3[0], y + dtau * k3[1], theta + dtau * k3[2]);
    x += dtau / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    y += dtau / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    theta += dtau / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
    if (so3) y = wrap_angle(y);
    theta = wrap_angle(theta);
    tau += dtau;

    record(controls_at(d, x, y, theta, opts.riemannian_descent));
    if (in_seed_cell(x, y, theta)) done = true;
  }
  return track;
}

void fill_geodesic_curvature(const DistanceGrid& d, Track& track) {
  const double xi2 = d.metric.xi * d.metric.xi;
  for (TrackSample& s : track.samples) {
    const SampledW sw = sample_w(d, s.x, s.y, s.theta);
    if (sw.x1w <= 1e-12) {
      s.kappa_g = sw.x2w >= 0.0 ? kKappaSentinel : -kKappaSentinel;
      s.flags |= kTrackKappaSentinel;
    } else {
      s.kappa_g = xi2 * sw.x2w / sw.x1w;
    }
  }
}

void fill_planar_projection(Track& track, const EyeModel& eye) {
  if (track.preset == GroupPreset::SE2) {
    for (TrackSample& s : track.samples) {
      s.X = s.x;
      s.Y = s.y;
    }
    return;
  }
  const double w = eye.fov_halfwidth();
  for (TrackSample& s : track.samples) {
    try {
      const PlanarPoint p = project_to_plane(s.x, s.y, eye);
      s.X = p.X;
      s.Y = p.Y;
      if (std::abs(p.X) > w || std::abs(p.Y) > w) s.flags |= kTrackOutOfView;
    } catch (const OutOfViewError&) {
      s.X = kKappaSentinel;
      s.Y = kKappaSentinel;
      s.flags |= kTrackOutOfView;
    }
  }
}

void fill_planar_curvature(Track& track) {
  const std::size_t n = track.samples.size();
  if (n < 3) return;
  std::vector<double> arc(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double dx = track.samples[i].X - track.samples[i - 1].X;
    const double dy = track.samples[i].Y - track.samples[i - 1].Y;
    arc[i] = arc[i - 1] + std::hypot(dx, dy);
  }
  std::vector<double> raw(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = arc[i] - arc[i - 1];
    const double h2 = arc[i + 1] - arc[i];
    if (h1 < 1e-14 || h2 < 1e-14) continue;
    const double xp = (track.samples[i + 1].X - track.samples[i - 1].X) /
                      (h1 + h2);
    const double yp = (track.samples[i + 1].Y - track.samples[i - 1].Y) /
                      (h1 + h2);
    const double xpp =
        2.0 * ((track.samples[i + 1].X - track.samples[i].X) / h2 -
               (track.samples[i].X - track.samples[i - 1].X) / h1) /
        (h1 + h2);
    const double ypp =
        2.0 * ((track.samples[i + 1].Y - track.samples[i].Y) / h2 -
               (track.samples[i].Y - track.samples[i - 1].Y) / h1) /
        (h1 + h2);
    const double v = std::hypot(xp, yp);
    if (v < 1e-12) continue;
    raw[i] = (xp * ypp - yp * xpp) / (v * v * v);
  }
  if (n > 2) {
    raw[0] = raw[1];
    raw[n - 1] = raw[n - 2];
  }
  // The Pi chart projection reverses the orientation relative to the
  // geodesic-curvature convention; flip so the channels are comparable.
  const double sign = track.preset == GroupPreset::SO3 ? -1.0 : 1.0;
  // moving-average smoothing, window 5
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    int cnt = 0;
    for (int m = -2; m <= 2; ++m) {
      const long j = static_cast<long>(i) + m;
      if (j < 0 || j >= static_cast<long>(n)) continue;
      acc += raw[static_cast<std::size_t>(j)];
      ++cnt;
    }
    track.samples[i].kappa_planar = sign * acc / cnt;
  }
}

double track_sr_length(const Track& track) {
  double len = 0.0;
  const double xi2 = track.xi * track.xi;
  const std::size_t n = track.samples.size();
  for (std::size_t i = 1; i < n; ++i) {
    const TrackSample& a = track.samples[i - 1];
    const TrackSample& b = track.samples[i];
    const double sa =
        a.cost * std::sqrt(xi2 * a.u1 * a.u1 + a.u2 * a.u2) * track.w_end;
    const double sb =
        b.cost * std::sqrt(xi2 * b.u1 * b.u1 + b.u2 * b.u2) * track.w_end;
    len += 0.5 * (sa + sb) * (b.tau - a.tau);
  }
  return len;
}

Vec3 replay_forward(const Track& track, const DistanceGrid& d) {
  const Grid3D& g = d.grid;
  const bool so3 = g.preset == GroupPreset::SO3;
  const std::size_t n = track.samples.size();
  if (n < 2) throw ConfigError("replay_forward: too few samples");
  // integrate forward from the last (seed-side) sample with reversed controls
  double x = track.samples[n - 1].x;
  double y = track.samples[n - 1].y;
  double theta = track.samples[n - 1].theta;
  for (std::size_t i = n - 1; i > 0; --i) {
    const TrackSample& a = track.samples[i];
    const TrackSample& b = track.samples[i - 1];
    const double dt = (b.tau - a.tau) * -track.w_end;  // SR-time of the leg
    const double u1 = 0.5 * (a.u1 + b.u1);
    const double u2 = 0.5 * (a.u2 + b.u2);
    // midpoint rule on the frame
    const Vec3 v1 = chart_velocity(g, x, theta, u1, u2, 0.0);
    const double xm = x + 0.5 * dt * v1[0];
    const double tm = theta + 0.5 * dt * v1[2];
    const Vec3 v2 = chart_velocity(g, xm, tm, u1, u2, 0.0);
    x += dt * v2[0];
    y += dt * v2[1];
    theta += dt * v2[2];
    if (so3) y = wrap_angle(y);
    theta = wrap_angle(theta);
  }
  return Vec3(x, y, theta);
}

}  // namespace srgeo
