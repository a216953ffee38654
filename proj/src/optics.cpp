#include "srgeo/optics.hpp"

#include <cmath>

namespace srgeo {

void EyeModel::validate() const {
  if (!(a >= 0.0 && a < r_eye)) throw ConfigError("EyeModel: need 0 <= a < R");
  if (!(c_eye > 0.0)) throw ConfigError("EyeModel: need c_eye > 0");
  if (!(eta > 0.0)) throw ConfigError("EyeModel: need eta > 0");
  if (!(psi_max > 0.0 && psi_max < 1.5707963267948966)) {
    throw ConfigError("EyeModel: need 0 < psi_max < pi/2");
  }
}

double EyeModel::fov_halfwidth() const {
  return (a + c_eye) * std::tan(psi_max) * eta;
}

double EyeModel::max_angle() const {
  return max_retina_angle(a, r_eye, psi_max);
}

double max_retina_angle(double a, double r_eye, double psi) {
  if (!(a >= 0.0 && a < r_eye) || !(psi >= 0.0 && psi < 1.5707963267948966)) {
    throw ConfigError("max_retina_angle: need 0 <= a < R, 0 <= psi < pi/2");
  }
  const double s2 = std::sin(psi) * std::sin(psi);
  double arg = std::cos(psi) * std::sqrt(1.0 - a * a * s2 / (r_eye * r_eye)) -
               a * s2 / r_eye;
  if (arg > 1.0 || arg < -1.0) {
    if (std::abs(arg) > 1.0 + 1e-12) {
      throw NumericError("max_retina_angle: arccos argument out of range");
    }
    arg = arg > 1.0 ? 1.0 : -1.0;
  }
  return std::acos(arg);
}

PlanarPoint project_to_plane(double x, double y, const EyeModel& eye) {
  const double den = eye.a + std::cos(x) * std::cos(y);
  if (den <= 0.0) {
    throw OutOfViewError("project_to_plane: point behind projection center");
  }
  const double k = eye.eta * (eye.a + eye.c_eye) / den;
  return {k * std::sin(x), k * std::cos(x) * std::sin(y)};
}

SpherePoint unproject_to_sphere(double X, double Y, const EyeModel& eye) {
  // The closed form is stated for eta = 1; rescale first.
  X /= eye.eta;
  Y /= eye.eta;
  const double a = eye.a, ac = eye.a + eye.c_eye;
  const double r2 = X * X + Y * Y;
  const double xi = std::sqrt(r2 * (1.0 - a * a) + ac * ac);
  const double den = r2 + ac * ac;
  const double pbar = (a * ac + xi) / den;
  const double p1 = (ac * xi - a * r2) / den;
  const double sx = X * pbar;
  if (std::abs(sx) > 1.0 + 1e-12) {
    throw OutOfViewError("unproject_to_sphere: |X pbar| > 1");
  }
  SpherePoint p;
  p.x = std::asin(sx > 1.0 ? 1.0 : (sx < -1.0 ? -1.0 : sx));
  p.y = std::atan2(Y * pbar, p1);
  return p;
}

bool in_view(double X, double Y, const EyeModel& eye) {
  const double w = eye.fov_halfwidth();
  return std::abs(X) <= w && std::abs(Y) <= w;
}

Eigen::Matrix2d plane_jacobian(double x, double y, const EyeModel& eye) {
  const double cx = std::cos(x), sx = std::sin(x);
  const double cy = std::cos(y), sy = std::sin(y);
  const double a = eye.a;
  const double den = a + cx * cy;
  if (den <= 0.0) {
    throw OutOfViewError("plane_jacobian: point behind projection center");
  }
  const double k = eye.eta * (a + eye.c_eye) / (den * den);
  Eigen::Matrix2d j;
  j(0, 0) = k * (a * cx + cy);
  j(0, 1) = k * sx * cx * sy;
  j(1, 0) = -k * a * sx * sy;
  j(1, 1) = k * cx * (a * cy + cx);
  return j;
}

double local_jacobian(double x, double y, const EyeModel& eye) {
  const double cx = std::cos(x), cy = std::cos(y);
  const double den = eye.a + cx * cy;
  const double ac = eye.a + eye.c_eye;
  return eye.eta * eye.eta * ac * ac * cx * (1.0 + eye.a * cx * cy) /
         (den * den * den);
}

Eigen::Matrix2d sphere_jacobian(double X, double Y, const EyeModel& eye) {
  const SpherePoint p = unproject_to_sphere(X, Y, eye);
  return plane_jacobian(p.x, p.y, eye).inverse();
}

double global_distortion(double y, const EyeModel& eye, bool* at_limit) {
  if (at_limit != nullptr) *at_limit = false;
  if (y == 0.0) {
    if (at_limit != nullptr) *at_limit = true;
    return 0.0;
  }
  EyeModel unit = eye;
  unit.eta = 1.0;
  const PlanarPoint p = project_to_plane(0.0, y, unit);
  return std::abs(y - p.Y) / std::abs(y);
}

double lift_direction(double X, double Y, double Theta, const EyeModel& eye) {
  const SpherePoint p = unproject_to_sphere(X, Y, eye);
  const Eigen::Matrix2d dinv = plane_jacobian(p.x, p.y, eye).inverse();
  const Eigen::Vector2d v =
      dinv * Eigen::Vector2d(std::cos(Theta), std::sin(Theta));
  const double tx = v[0];
  const double ty = std::cos(p.x) * v[1];
  if (std::hypot(tx, ty) < 1e-12) {
    throw NumericError("lift_direction: degenerate pushforward");
  }
  return std::atan2(ty, tx);
}

}  // namespace srgeo
