#pragma once

#include <cstdint>

#include "srgeo/eikonal.hpp"
#include "srgeo/optics.hpp"

namespace srgeo {

enum TrackFlags : std::uint32_t {
  kTrackBoundaryStencil = 1u,
  kTrackKappaSentinel = 2u,
  kTrackOutOfView = 4u,
  kTrackDegradedInterp = 8u,
};

inline constexpr double kKappaSentinel = 1e9;

struct TrackSample {
  double tau = 0.0;
  double x = 0.0, y = 0.0, theta = 0.0;
  double X = 0.0, Y = 0.0;  // planar channel (Pi projection / SE2 chart)
  Vec3 n = Vec3::Zero();
  double u1 = 0.0, u2 = 0.0;  // SR-arclength controls
  double kappa_g = 0.0;
  double kappa_planar = 0.0;
  double w = 0.0;
  double cost = 1.0;
  std::uint32_t flags = 0;
};

struct Track {
  GroupPreset preset = GroupPreset::SO3;
  double xi = 1.0;
  double w_end = 0.0;
  bool cuspless = false;
  bool monotone_w = true;  // strict decrease of W along samples
  std::vector<TrackSample> samples;
};

struct BacktrackOptions {
  double step_factor = 4.0;  // steps per cell of SR length
  double tau_max = 1.5;
  // Descend the full eps-metric gradient (adds the X3 channel); used for the
  // isotropic Riemannian comparison runs.
  bool riemannian_descent = false;
};

// Steepest-descent backtracking from g1 toward the seed.
Track backtrack(const DistanceGrid& d, const Vec3& g1_chart,
                const BacktrackOptions& opts = {});

// kappa_g = xi^2 (X2 W)/(X1 W) per sample; cusp-adjacent samples get the
// +-1e9 sentinel and a flag.
void fill_geodesic_curvature(const DistanceGrid& d, Track& track);

// Planar channel: SO3 tracks are projected through Pi; SE2 tracks copy the
// chart. Out-of-view samples flagged.
void fill_planar_projection(Track& track, const EyeModel& eye);

// Signed curvature of the planar channel by smoothed central differences on
// the arclength-parametrized curve. For SO3-projected tracks the sign is
// aligned with the kappa_g channel (the chart projection reverses
// orientation).
void fill_planar_curvature(Track& track);

// SR length functional recomputed from the samples.
double track_sr_length(const Track& track);

// Forward re-integration of the recorded controls from the track's last
// sample; returns the reached chart point (reversibility check).
Vec3 replay_forward(const Track& track, const DistanceGrid& d);

}  // namespace srgeo
