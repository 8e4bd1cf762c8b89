/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include "gravprior/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace gravprior
{

/// Zero-vector guard for normalize().
inline constexpr double kNormEpsilon = 1e-9;

/// Tolerance used when validating unit-norm and orthonormality invariants.
inline constexpr double kUnitTolerance = 1e-6;

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct Vec3
{
  double x{0.0};
  double y{0.0};
  double z{0.0};

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr Vec3 operator*(const Vec3& a, double s) { return s * a; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  constexpr Vec3& operator+=(const Vec3& o)
  {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b)
{
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline bool is_finite(const Vec3& v)
{
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// A direction on the unit sphere. Only constructible through normalize() or
/// the checked factory, so holding one means the norm invariant holds.
class UnitVec3
{
public:
  /// Wraps components that are already unit length (within kUnitTolerance).
  static UnitVec3 checked(double x, double y, double z)
  {
    const Vec3 v{x, y, z};
    if (!is_finite(v) || std::abs(norm(v) - 1.0) > kUnitTolerance)
      throw Error(ErrorKind::InvalidArgument, "vector is not unit length");
    return UnitVec3(v);
  }
  static UnitVec3 checked(const Vec3& v) { return checked(v.x, v.y, v.z); }

  static UnitVec3 unit_x() { return UnitVec3(Vec3{1.0, 0.0, 0.0}); }
  static UnitVec3 unit_y() { return UnitVec3(Vec3{0.0, 1.0, 0.0}); }
  static UnitVec3 unit_z() { return UnitVec3(Vec3{0.0, 0.0, 1.0}); }

  double x() const { return m_v.x; }
  double y() const { return m_v.y; }
  double z() const { return m_v.z; }
  double operator[](int i) const { return m_v[i]; }
  const Vec3& vec() const { return m_v; }
  operator const Vec3&() const { return m_v; }

  UnitVec3 operator-() const { return UnitVec3(-m_v); }
  friend bool operator==(const UnitVec3&, const UnitVec3&) = default;

private:
  explicit UnitVec3(const Vec3& v) : m_v(v) {}
  friend UnitVec3 normalize(const Vec3& v);
  friend UnitVec3 arkit_to_euroc(const UnitVec3& g);
  friend UnitVec3 euroc_to_arkit(const UnitVec3& g);

  Vec3 m_v;
};

/// Scales v to unit length. Throws DegenerateVector when ||v|| <= kNormEpsilon.
inline UnitVec3 normalize(const Vec3& v)
{
  const double n = norm(v);
  if (!(n > kNormEpsilon) || !std::isfinite(n))
    throw Error(ErrorKind::DegenerateVector, "cannot normalize a (near) zero vector");
  return UnitVec3(Vec3{v.x / n, v.y / n, v.z / n});
}

/// Angle between two directions in degrees, in [0, 180].
inline double angle_deg(const UnitVec3& a, const UnitVec3& b)
{
  const double c = std::clamp(dot(a.vec(), b.vec()), -1.0, 1.0);
  return rad_to_deg(std::acos(c));
}

// ARKit camera (X-right, Y-down, Z-forward) to EuRoC (X-right, Y-forward, Z-up).
inline UnitVec3 arkit_to_euroc(const UnitVec3& g) { return UnitVec3(Vec3{g.x(), g.z(), -g.y()}); }
inline UnitVec3 euroc_to_arkit(const UnitVec3& g) { return UnitVec3(Vec3{g.x(), -g.z(), g.y()}); }

/// Row-major 3x3 matrix.
struct Mat3
{
  std::array<std::array<double, 3>, 3> m{};

  static constexpr Mat3 identity()
  {
    Mat3 r;
    r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
    return r;
  }

  static constexpr Mat3 diag(double a, double b, double c)
  {
    Mat3 r;
    r.m[0][0] = a;
    r.m[1][1] = b;
    r.m[2][2] = c;
    return r;
  }

  constexpr double operator()(int r, int c) const { return m[r][c]; }
  constexpr double& operator()(int r, int c) { return m[r][c]; }

  constexpr Vec3 row(int r) const { return {m[r][0], m[r][1], m[r][2]}; }
  constexpr Vec3 col(int c) const { return {m[0][c], m[1][c], m[2][c]}; }

  constexpr Mat3 transposed() const
  {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        t.m[c][r] = m[r][c];
    return t;
  }

  friend constexpr Mat3 operator*(const Mat3& a, const Mat3& b)
  {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r.m[i][j] = a.m[i][0] * b.m[0][j] + a.m[i][1] * b.m[1][j] + a.m[i][2] * b.m[2][j];
    return r;
  }

  friend constexpr Vec3 operator*(const Mat3& a, const Vec3& v)
  {
    return {dot(a.row(0), v), dot(a.row(1), v), dot(a.row(2), v)};
  }

  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr double determinant(const Mat3& a)
{
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

inline double frobenius_norm(const Mat3& a)
{
  double s = 0.0;
  for (const auto& row : a.m)
    for (double v : row)
      s += v * v;
  return std::sqrt(s);
}

/// Largest |(AᵀA - I)_ij|.
inline double orthogonality_error(const Mat3& a)
{
  const Mat3 g = a.transposed() * a;
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

struct Quat;

/// A proper rotation (RᵀR = I, det = +1).
class Rot3
{
public:
  Rot3() : m_m(Mat3::identity()) {}

  /// Validates orthonormality and det(+1) within `tol`.
  static Rot3 checked(const Mat3& m, double tol = kUnitTolerance)
  {
    if (orthogonality_error(m) > tol || std::abs(determinant(m) - 1.0) > tol)
      throw Error(ErrorKind::InvalidArgument, "matrix is not a proper rotation");
    return Rot3(m);
  }

  const Mat3& matrix() const { return m_m; }
  double operator()(int r, int c) const { return m_m(r, c); }

  Rot3 transposed() const { return Rot3(m_m.transposed()); }

  friend Rot3 operator*(const Rot3& a, const Rot3& b) { return Rot3(a.m_m * b.m_m); }
  friend Vec3 operator*(const Rot3& r, const Vec3& v) { return r.m_m * v; }

private:
  explicit Rot3(const Mat3& m) : m_m(m) {}
  friend Rot3 euler_rot_unchecked(int axis, double angle);
  friend Rot3 quat_to_rot(const Quat& q);

  Mat3 m_m;
};

enum class Axis
{
  X,
  Y,
};

/// Residual pitch/yaw correction in radians.
struct EulerDelta
{
  double delta_x{0.0};
  double delta_y{0.0};
};

/// Right-handed elemental rotation about X or Y.
inline Rot3 euler_rot_unchecked(int axis, double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 m = Mat3::identity();
  if (axis == 0)
  {
    m(1, 1) = c;
    m(1, 2) = -s;
    m(2, 1) = s;
    m(2, 2) = c;
  }
  else if (axis == 1)
  {
    m(0, 0) = c;
    m(0, 2) = s;
    m(2, 0) = -s;
    m(2, 2) = c;
  }
  else
  {
    m(0, 0) = c;
    m(0, 1) = -s;
    m(1, 0) = s;
    m(1, 1) = c;
  }
  return Rot3(m);
}

inline Rot3 euler_rot(Axis axis, double angle)
{
  return euler_rot_unchecked(axis == Axis::X ? 0 : 1, angle);
}

/// Rotation about Z; only used for test scenarios and yaw sweeps.
inline Rot3 rot_z(double angle) { return euler_rot_unchecked(2, angle); }

/// Hamilton quaternion (w, x, y, z).
struct Quat
{
  double w{1.0};
  double x{0.0};
  double y{0.0};
  double z{0.0};

  static constexpr Quat identity() { return {}; }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quat normalized() const
  {
    const double n = norm();
    if (!(n > kNormEpsilon))
      throw Error(ErrorKind::DegenerateVector, "cannot normalize a zero quaternion");
    return {w / n, x / n, y / n, z / n};
  }

  Quat conjugate() const { return {w, -x, -y, -z}; }

  friend Quat operator*(const Quat& a, const Quat& b)
  {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
  }

  friend Quat operator-(const Quat& q) { return {-q.w, -q.x, -q.y, -q.z}; }
  friend bool operator==(const Quat&, const Quat&) = default;
};

/// Quaternion for a rotation of `angle` radians about `axis` (need not be unit).
inline Quat quat_from_axis_angle(const Vec3& axis, double angle)
{
  const UnitVec3 a = normalize(axis);
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), a.x() * s, a.y() * s, a.z() * s};
}

/// exp map of a rotation vector; exact for any magnitude, identity at zero.
inline Quat quat_exp(const Vec3& rotvec)
{
  const double theta = norm(rotvec);
  if (theta < 1e-12)
    return Quat{1.0, 0.5 * rotvec.x, 0.5 * rotvec.y, 0.5 * rotvec.z}.normalized();
  const double k = std::sin(0.5 * theta) / theta;
  return {std::cos(0.5 * theta), rotvec.x * k, rotvec.y * k, rotvec.z * k};
}

inline Rot3 quat_to_rot(const Quat& qin)
{
  const Quat q = qin.normalized();
  const double ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  const double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
  const double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
  Mat3 m;
  m(0, 0) = ww + xx - yy - zz;
  m(0, 1) = 2.0 * (xy - wz);
  m(0, 2) = 2.0 * (xz + wy);
  m(1, 0) = 2.0 * (xy + wz);
  m(1, 1) = ww - xx + yy - zz;
  m(1, 2) = 2.0 * (yz - wx);
  m(2, 0) = 2.0 * (xz - wy);
  m(2, 1) = 2.0 * (yz + wx);
  m(2, 2) = ww - xx - yy + zz;
  return Rot3(m);
}

/// Inverse of quat_to_rot (Shepperd's method), w >= 0.
inline Quat rot_to_quat(const Rot3& r)
{
  const double tr = r(0, 0) + r(1, 1) + r(2, 2);
  Quat q;
  if (tr > 0.0)
  {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  }
  else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2))
  {
    const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  }
  else if (r(1, 1) > r(2, 2))
  {
    const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  }
  else
  {
    const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  if (q.w < 0.0)
    q = -q;
  return q.normalized();
}

/// Shortest-arc rotation taking direction `from` onto direction `to`.
inline Quat quat_between(const UnitVec3& from, const UnitVec3& to)
{
  const double c = dot(from.vec(), to.vec());
  if (c < -1.0 + 1e-12)
  {
    // Antipodal: any axis orthogonal to `from` works.
    Vec3 axis = cross(from.vec(), Vec3{1.0, 0.0, 0.0});
    if (norm(axis) < 1e-6)
      axis = cross(from.vec(), Vec3{0.0, 1.0, 0.0});
    return quat_from_axis_angle(axis, std::numbers::pi);
  }
  const Vec3 axis = cross(from.vec(), to.vec());
  return Quat{1.0 + c, axis.x, axis.y, axis.z}.normalized();
}

/// Angle of the relative rotation aᵀb in degrees. Goes through the
/// quaternion so tiny angles keep full precision.
inline double rotation_angle_deg(const Rot3& a, const Rot3& b)
{
  const Quat d = rot_to_quat(a.transposed() * b);
  const double s = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
  return rad_to_deg(2.0 * std::atan2(s, std::abs(d.w)));
}

} // namespace gravprior
