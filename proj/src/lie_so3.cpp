#include "srgeo/lie_so3.hpp"

#include <cmath>

namespace srgeo {

namespace {
constexpr double kOrthoTol = 1e-12;
constexpr double kGimbalTol = 1e-12;
}  // namespace

double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  return a;
}

Mat3 algebra_generator(int i) {
  Mat3 m = Mat3::Zero();
  switch (i) {
    case 1:
      m(1, 2) = -1.0;
      m(2, 1) = 1.0;
      break;
    case 2:
      m(0, 2) = 1.0;
      m(2, 0) = -1.0;
      break;
    case 3:
      m(0, 1) = -1.0;
      m(1, 0) = 1.0;
      break;
    default:
      throw ConfigError("algebra_generator: index must be 1, 2 or 3");
  }
  return m;
}

Mat3 AlgebraElement::matrix() const {
  return a[0] * algebra_generator(1) + a[1] * algebra_generator(2) +
         a[2] * algebra_generator(3);
}

Mat3 commutator(const Mat3& a, const Mat3& b) { return a * b - b * a; }

Mat3 rotation_from_angles(double x, double y, double theta) {
  if (!(x >= -kHalfPi - 1e-12 && x <= kHalfPi + 1e-12)) {
    throw ConfigError("rotation_from_angles: x outside [-pi/2, pi/2]");
  }
  const double cx = std::cos(x), sx = std::sin(x);
  const double cy = std::cos(y), sy = std::sin(y);
  const double ct = std::cos(theta), st = std::sin(theta);
  Mat3 r;
  r << cx * cy, -sx * cy * st - sy * ct, sy * st - sx * cy * ct,  //
      cx * sy, cy * ct - sx * sy * st, -cy * st - sx * sy * ct,   //
      sx, cx * st, cx * ct;
  return r;
}

ChartPoint angles_from_rotation(const Mat3& r) {
  ChartPoint c;
  const double r11 = r(0, 0), r21 = r(1, 0), r31 = r(2, 0);
  const double hyp = std::sqrt(r11 * r11 + r21 * r21);
  c.x = std::atan2(r31, hyp);
  if (hyp < kGimbalTol) {
    // Gimbal row: only y + x*theta-like combination is determined. Canonical
    // choice y := 0; recover theta from the remaining 2x2 block.
    c.degenerate = true;
    c.y = 0.0;
    c.theta = wrap_angle(std::atan2(-r(0, 1), r(1, 1)));
    return c;
  }
  c.y = std::atan2(r21, r11);
  c.theta = std::atan2(r(2, 1), r(2, 2));
  return c;
}

GroupPoint::GroupPoint() : r_(Mat3::Identity()), chart_() {}

GroupPoint GroupPoint::from_angles(double x, double y, double theta) {
  Mat3 r = rotation_from_angles(x, y, theta);
  ChartPoint c;
  c.x = x;
  c.y = wrap_angle(y);
  c.theta = wrap_angle(theta);
  c.degenerate = std::abs(std::cos(x)) < kGimbalTol;
  if (c.degenerate) c = angles_from_rotation(r);
  return GroupPoint(r, c);
}

GroupPoint GroupPoint::from_matrix(const Mat3& r) {
  const double ortho = (r.transpose() * r - Mat3::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > 1e-8) {
    throw NumericError("GroupPoint::from_matrix: matrix is not orthogonal");
  }
  if (r.determinant() < 0.0) {
    throw NumericError("GroupPoint::from_matrix: determinant is negative");
  }
  Mat3 rr = r;
  if (ortho > 1e-10) {
    // Re-orthonormalize via polar decomposition once drift exceeds budget.
    Eigen::JacobiSVD<Mat3> svd(rr, Eigen::ComputeFullU | Eigen::ComputeFullV);
    rr = svd.matrixU() * svd.matrixV().transpose();
  }
  return GroupPoint(rr, angles_from_rotation(rr));
}

GroupPoint GroupPoint::operator*(const GroupPoint& other) const {
  Mat3 r = r_ * other.r_;
  const double ortho =
      (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-10) {
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    r = svd.matrixU() * svd.matrixV().transpose();
  }
  return GroupPoint(r, angles_from_rotation(r));
}

double GroupPoint::orthogonality_drift() const {
  return (r_.transpose() * r_ - Mat3::Identity()).cwiseAbs().maxCoeff();
}

FrameCoefficients frame_at(double x, double theta) {
  const double cx = std::cos(x);
  if (std::abs(cx) < 1e-12) {
    throw ChartSingularityError("frame_at: sec(x) undefined at |x| = pi/2");
  }
  const double sx = std::sin(x);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double sec = 1.0 / cx, tn = sx / cx;
  FrameCoefficients f;
  f.x1 = Vec3(ct, -sec * st, tn * st);
  f.x2 = Vec3(0.0, 0.0, 1.0);
  f.x3 = Vec3(st, sec * ct, -tn * ct);
  return f;
}

CoframeCoefficients coframe_at(double x, double theta) {
  const double cx = std::cos(x), sx = std::sin(x);
  const double ct = std::cos(theta), st = std::sin(theta);
  CoframeCoefficients w;
  w.w1 = Vec3(ct, -cx * st, 0.0);
  w.w2 = Vec3(0.0, sx, 1.0);
  w.w3 = Vec3(st, cx * ct, 0.0);
  return w;
}

Vec3 spherical_projection(double x, double y) {
  return Vec3(std::cos(x) * std::cos(y), std::cos(x) * std::sin(y),
              std::sin(x));
}

Vec3 spherical_projection(const GroupPoint& g) {
  return g.matrix().col(0);
}

}  // namespace srgeo
