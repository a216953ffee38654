#pragma once

#include <Eigen/Dense>

#include "srgeo/errors.hpp"

namespace srgeo {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kHalfPi = 1.5707963267948966;
inline constexpr double kPi = 3.141592653589793;
inline constexpr double kTwoPi = 6.283185307179586;

// Reduce an angle to (-pi, pi].
double wrap_angle(double a);

// Skew-symmetric generators A1, A2, A3 of so(3); [A1,A2]=A3, [A1,A3]=-A2,
// [A2,A3]=A1.
Mat3 algebra_generator(int i);

// Coefficients over the basis (A1, A2, A3).
struct AlgebraElement {
  Vec3 a;
  Mat3 matrix() const;
};

Mat3 commutator(const Mat3& a, const Mat3& b);

// Chart coordinates of a rotation: x in [-pi/2, pi/2], y and theta in
// (-pi, pi]. `degenerate` marks the gimbal rows |x| = pi/2 where y and theta
// are not separately determined (y is canonically set to 0 there).
struct ChartPoint {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  bool degenerate = false;
};

Mat3 rotation_from_angles(double x, double y, double theta);
ChartPoint angles_from_rotation(const Mat3& r);

// An SO(3) element carried redundantly as matrix and chart. The matrix is
// authoritative near the gimbal rows.
class GroupPoint {
 public:
  GroupPoint();  // identity
  static GroupPoint from_angles(double x, double y, double theta);
  static GroupPoint from_matrix(const Mat3& r);

  const Mat3& matrix() const { return r_; }
  const ChartPoint& chart() const { return chart_; }

  GroupPoint operator*(const GroupPoint& other) const;

  // Orthogonality defect ||R^T R - I||_inf.
  double orthogonality_drift() const;

 private:
  GroupPoint(const Mat3& r, const ChartPoint& c) : r_(r), chart_(c) {}
  Mat3 r_;
  ChartPoint chart_;
};

// Left-invariant frame coefficients over (d/dx, d/dy, d/dtheta) at a chart
// point. Only defined for |x| < pi/2.
struct FrameCoefficients {
  Vec3 x1;
  Vec3 x2;
  Vec3 x3;
};

FrameCoefficients frame_at(double x, double theta);

// Dual coframe coefficients over (dx, dy, dtheta); well defined everywhere.
struct CoframeCoefficients {
  Vec3 w1;
  Vec3 w2;
  Vec3 w3;
};

CoframeCoefficients coframe_at(double x, double theta);

// n(x, y) = (cos x cos y, cos x sin y, sin x).
Vec3 spherical_projection(double x, double y);
Vec3 spherical_projection(const GroupPoint& g);

}  // namespace srgeo
