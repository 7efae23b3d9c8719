#ifndef HANDEYE_SE3_HPP
#define HANDEYE_SE3_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "handeye/errors.hpp"

namespace handeye {

using Vector3 = Eigen::Vector3d;
using Vector4 = Eigen::Vector4d;
using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kRotationTolerance = 1e-9;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// ============================================================================
// UnitQuaternion
// ============================================================================

/**
 * Unit quaternion q = [q0, qv] stored as the 4-vector (q0, qx, qy, qz).
 *
 * Construction always normalizes, so every instance satisfies
 * q0^2 + |qv|^2 = 1 to round-off. q and -q describe the same rotation;
 * canonical() picks the representative with q0 >= 0 (ties at q0 = 0 broken
 * by the first nonzero vector component being positive).
 */
class UnitQuaternion {
 public:
  UnitQuaternion() : coeffs_(1.0, 0.0, 0.0, 0.0) {}

  explicit UnitQuaternion(const Vector4& coeffs) : coeffs_(coeffs) {
    const double norm = coeffs_.norm();
    if (!(norm > 1e-300) || !std::isfinite(norm)) {
      throw CalibrationError(ErrorKind::InvalidRotation,
                             "quaternion with zero or non-finite norm");
    }
    // Already-unit input is kept bit-for-bit so re-wrapping is idempotent.
    if (std::abs(norm - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) coeffs_ /= norm;
  }

  UnitQuaternion(double q0, double qx, double qy, double qz)
      : UnitQuaternion(Vector4(q0, qx, qy, qz)) {}

  UnitQuaternion(double q0, const Vector3& qv)
      : UnitQuaternion(Vector4(q0, qv.x(), qv.y(), qv.z())) {}

  static UnitQuaternion identity() { return {}; }

  /// Rotation by `angle` radians about `axis` (need not be normalized).
  static UnitQuaternion from_axis_angle(const Vector3& axis, double angle) {
    const Vector3 u = axis.normalized();
    return UnitQuaternion(std::cos(0.5 * angle), std::sin(0.5 * angle) * u);
  }

  double scalar() const { return coeffs_[0]; }
  Vector3 vec() const { return coeffs_.tail<3>(); }
  const Vector4& coeffs() const { return coeffs_; }
  double operator[](int i) const { return coeffs_[i]; }

  UnitQuaternion conjugate() const {
    UnitQuaternion q = *this;
    q.coeffs_.tail<3>() = -q.coeffs_.tail<3>();
    return q;
  }

  UnitQuaternion operator-() const {
    UnitQuaternion q = *this;
    q.coeffs_ = -q.coeffs_;
    return q;
  }

  bool is_canonical() const {
    if (coeffs_[0] > 0.0) return true;
    if (coeffs_[0] < 0.0) return false;
    for (int i = 1; i < 4; ++i) {
      if (coeffs_[i] != 0.0) return coeffs_[i] > 0.0;
    }
    return true;
  }

  UnitQuaternion canonical() const { return is_canonical() ? *this : -*this; }

 private:
  Vector4 coeffs_;
};

inline UnitQuaternion conjugate(const UnitQuaternion& q) { return q.conjugate(); }

/// Hamilton product q1 * q2, renormalized.
inline UnitQuaternion quat_mul(const UnitQuaternion& q1, const UnitQuaternion& q2) {
  const double a0 = q1.scalar();
  const double b0 = q2.scalar();
  const Vector3 a = q1.vec();
  const Vector3 b = q2.vec();
  return UnitQuaternion(a0 * b0 - a.dot(b), a0 * b + b0 * a + a.cross(b));
}

inline UnitQuaternion operator*(const UnitQuaternion& q1, const UnitQuaternion& q2) {
  return quat_mul(q1, q2);
}

// ============================================================================
// Rotation3
// ============================================================================

/// 3x3 proper rotation matrix. The constructor rejects anything that is not
/// orthonormal with determinant +1 to within kRotationTolerance.
///
/// A rotation built by rotation_from_quat() remembers its (canonical) source
/// quaternion so that quat_from_rotation() returns it unchanged. This makes
/// quaternion -> matrix -> quaternion exact, which file round-trips rely on.
class Rotation3 {
 public:
  Rotation3() : m_(Matrix3::Identity()) {}

  explicit Rotation3(const Matrix3& m) : m_(m) {
    if (!m_.allFinite()) {
      throw CalibrationError(ErrorKind::InvalidRotation, "non-finite rotation matrix");
    }
    const double ortho = (m_.transpose() * m_ - Matrix3::Identity()).cwiseAbs().maxCoeff();
    const double det = m_.determinant();
    if (ortho > kRotationTolerance || std::abs(det - 1.0) > kRotationTolerance) {
      throw CalibrationError(ErrorKind::InvalidRotation,
                             "matrix is not a rotation (max |R^T R - I| = " +
                                 std::to_string(ortho) + ", det = " + std::to_string(det) + ")");
    }
  }

  static Rotation3 identity() { return {}; }

  static Rotation3 from_axis_angle(const Vector3& axis, double angle) {
    return Rotation3(Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix());
  }

  const Matrix3& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  const std::optional<UnitQuaternion>& source_quaternion() const { return source_; }

  Rotation3 transpose() const {
    Rotation3 r;
    r.m_ = m_.transpose();
    return r;
  }

  friend Rotation3 operator*(const Rotation3& lhs, const Rotation3& rhs) {
    Rotation3 r;
    r.m_ = lhs.m_ * rhs.m_;
    return r;
  }

  friend Vector3 operator*(const Rotation3& lhs, const Vector3& v) { return lhs.m_ * v; }

  friend Rotation3 rotation_from_quat(const UnitQuaternion& q);

 private:
  Matrix3 m_;
  std::optional<UnitQuaternion> source_;
};

inline Rotation3 rotation_from_quat(const UnitQuaternion& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Matrix3 m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  Rotation3 r(m);
  r.source_ = q.canonical();
  return r;
}

/// Canonical quaternion of a rotation matrix, choosing the branch with the
/// largest pivot among (trace, R00, R11, R22).
inline UnitQuaternion quat_from_rotation(const Rotation3& rot) {
  if (rot.source_quaternion()) return *rot.source_quaternion();
  const Matrix3& r = rot.matrix();
  const double trace = r.trace();
  const double pivots[4] = {trace, r(0, 0), r(1, 1), r(2, 2)};
  const int k = static_cast<int>(std::max_element(pivots, pivots + 4) - pivots);
  Vector4 q;
  if (k == 0) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    q << 0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s;
  } else if (k == 1) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    q << (r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s;
  } else if (k == 2) {
    const double s = 2.0 * std::sqrt(1.0 - r(0, 0) + r(1, 1) - r(2, 2));
    q << (r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 - r(0, 0) - r(1, 1) + r(2, 2));
    q << (r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s;
  }
  return UnitQuaternion(q).canonical();
}

/// Rotation angle of `rot` in radians, in [0, pi]. Uses atan2 so that small
/// angles keep full relative precision.
inline double rotation_angle(const Rotation3& rot) {
  const Matrix3& r = rot.matrix();
  const Vector3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (r.trace() - 1.0));
}

// ============================================================================
// Matrix forms of quaternion multiplication
// ============================================================================

/// Q(q): Q(q) p = q * p.
inline Matrix4 qmat(const UnitQuaternion& q) {
  const double q0 = q[0], qx = q[1], qy = q[2], qz = q[3];
  Matrix4 m;
  m << q0, -qx, -qy, -qz,
       qx,  q0, -qz,  qy,
       qy,  qz,  q0, -qx,
       qz, -qy,  qx,  q0;
  return m;
}

/// W(q): W(q) p = p * q.
inline Matrix4 wmat(const UnitQuaternion& q) {
  const double q0 = q[0], qx = q[1], qy = q[2], qz = q[3];
  Matrix4 m;
  m << q0, -qx, -qy, -qz,
       qx,  q0,  qz, -qy,
       qy, -qz,  q0,  qx,
       qz,  qy, -qx,  q0;
  return m;
}

/// skew(a) b = a x b.
inline Matrix3 skew(const Vector3& a) {
  Matrix3 s;
  s << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return s;
}

// ============================================================================
// RigidTransform
// ============================================================================

/// Homogeneous rigid transform [R t; 0 1]. Translations are in millimeters.
struct RigidTransform {
  Rotation3 rotation;
  Vector3 translation = Vector3::Zero();

  static RigidTransform identity() { return {}; }

  Matrix4 matrix() const {
    Matrix4 m = Matrix4::Identity();
    m.topLeftCorner<3, 3>() = rotation.matrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }
};

inline RigidTransform compose(const RigidTransform& t1, const RigidTransform& t2) {
  return {t1.rotation * t2.rotation, t1.rotation * t2.translation + t1.translation};
}

inline RigidTransform invert(const RigidTransform& t) {
  const Rotation3 rt = t.rotation.transpose();
  return {rt, -(rt * t.translation)};
}

inline RigidTransform operator*(const RigidTransform& t1, const RigidTransform& t2) {
  return compose(t1, t2);
}

}  // namespace handeye

#endif  // HANDEYE_SE3_HPP
