#pragma once

#include <Eigen/Dense>

#include "srgeo/errors.hpp"

namespace srgeo {

// Reduced schematic eye. Lengths in eyeball radii; defaults are the standard
// fundus-camera setup (a = 13/21, c = 4/5, psi_max = pi/8).
struct EyeModel {
  double a = 13.0 / 21.0;   // nodal-point offset from eyeball center
  double c_eye = 4.0 / 5.0; // camera offset
  double r_eye = 1.0;       // eyeball radius (dimensionless units)
  double eta = 1.0;         // camera distance scale
  double psi_max = 0.39269908169872414;  // pi/8

  void validate() const;

  // Half-width of the camera field of view: (a + c) * tan(psi_max) * eta.
  double fov_halfwidth() const;
  // Max spherical angle reachable by the camera.
  double max_angle() const;
};

// Max retina angle ybar for camera half-angle psi.
double max_retina_angle(double a, double r_eye, double psi);

struct PlanarPoint {
  double X = 0.0;
  double Y = 0.0;
};

struct SpherePoint {
  double x = 0.0;
  double y = 0.0;
};

// Central projection Pi: spherical chart (x, y) -> camera plane (X, Y).
PlanarPoint project_to_plane(double x, double y, const EyeModel& eye);

// Inverse mapping Pi^{-1}; general eta handled by pre-scaling.
SpherePoint unproject_to_sphere(double X, double Y, const EyeModel& eye);

bool in_view(double X, double Y, const EyeModel& eye);

// det d(Pi) at (x, y).
double local_jacobian(double x, double y, const EyeModel& eye);

// d(Pi) as a 2x2 matrix, rows (X, Y), columns (x, y). Analytic.
Eigen::Matrix2d plane_jacobian(double x, double y, const EyeModel& eye);

// d(Pi^{-1}) at (X, Y) = inverse of plane_jacobian at the unprojected point.
Eigen::Matrix2d sphere_jacobian(double X, double Y, const EyeModel& eye);

// Relative distortion along the x = 0 line. Returns 0 at y = 0 (limit);
// *at_limit is set when the convention kicks in.
double global_distortion(double y, const EyeModel& eye,
                         bool* at_limit = nullptr);

// Pushforward of the unit planar direction (cos Theta, sin Theta) through
// Pi^{-1}; returns the tangent angle arg(xdot + i cos(x) ydot) in the
// orthonormal spherical basis at the unprojected point.
double lift_direction(double X, double Y, double Theta, const EyeModel& eye);

// Chart heading theta whose forward X1 motion realizes a given spherical
// tangent angle: theta = -alpha (the chart has ydot = -u1 sec x sin theta).
inline double chart_heading_from_tangent_angle(double alpha) { return -alpha; }

}  // namespace srgeo
