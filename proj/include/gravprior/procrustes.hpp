/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include "gravprior/error.hpp"
#include "gravprior/geom3.hpp"
#include "gravprior/mahony.hpp"
#include "gravprior/svd3.hpp"

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

namespace gravprior
{

/// Paired gravity observations of the same frames: camera frame (from VIO)
/// and IMU body frame (from the filter).
struct PairedDirections
{
  std::vector<UnitVec3> g_cam;
  std::vector<UnitVec3> g_imu;

  std::size_t size() const { return g_cam.size(); }
};

enum class Conditioning
{
  WellPosed,
  Degenerate,
};

constexpr std::string_view to_string(Conditioning c)
{
  return c == Conditioning::WellPosed ? "well_posed" : "degenerate";
}

struct AlignmentResult
{
  Rot3 r;  // imu -> cam
  double residual_rms_deg{0.0};
  Conditioning condition{Conditioning::WellPosed};
  std::array<double, 3> singular_values{};
  std::size_t pairs{0};
};

/// M = Σ g_cam · g_imuᵀ
inline Mat3 cross_covariance(const PairedDirections& pairs)
{
  if (pairs.g_cam.size() != pairs.g_imu.size())
    throw Error(ErrorKind::ShapeMismatch, "g_cam and g_imu differ in length");
  Mat3 m;
  for (std::size_t i = 0; i < pairs.size(); ++i)
  {
    const Vec3& c = pairs.g_cam[i].vec();
    const Vec3& b = pairs.g_imu[i].vec();
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k)
        m(r, k) += c[r] * b[k];
  }
  return m;
}

inline double alignment_rms_deg(const Rot3& r, const PairedDirections& pairs)
{
  double sum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i)
  {
    const double e = angle_deg(pairs.g_cam[i], normalize(r * pairs.g_imu[i].vec()));
    sum += e * e;
  }
  return pairs.size() == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(pairs.size()));
}

/// Rotation R minimising Σ ||g_cam - R·g_imu||² over SO(3).
///
/// The reflection case (det(UVᵀ) = -1) is corrected by flipping the axis of
/// the smallest singular value, so the result is always a proper rotation.
/// The fit is flagged degenerate when the directions span fewer than two
/// dimensions (σ₂ < 1e-6·N); the rotation about that single axis is then
/// unobservable.
inline AlignmentResult solve_procrustes(const PairedDirections& pairs)
{
  if (pairs.g_cam.size() != pairs.g_imu.size())
    throw Error(ErrorKind::ShapeMismatch, "g_cam and g_imu differ in length");
  if (pairs.size() < 3)
    throw Error(ErrorKind::InsufficientPairs, "need at least 3 pairs, got " + std::to_string(pairs.size()));

  const Svd3 d = svd3(cross_covariance(pairs));
  const double sign = determinant(d.u * d.v.transposed()) < 0.0 ? -1.0 : 1.0;
  const Mat3 r = d.u * Mat3::diag(1.0, 1.0, sign) * d.v.transposed();

  AlignmentResult out;
  out.r = Rot3::checked(r, 1e-9);
  out.singular_values = d.s;
  out.pairs = pairs.size();
  out.condition = d.s[1] < 1e-6 * static_cast<double>(pairs.size()) ? Conditioning::Degenerate
                                                                    : Conditioning::WellPosed;
  out.residual_rms_deg = alignment_rms_deg(out.r, pairs);
  return out;
}

/// Rotates every body-frame estimate into the camera frame.
inline std::vector<UnitVec3> align_sequence(const Rot3& r, std::span<const GravityEstimate> estimates)
{
  std::vector<UnitVec3> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates)
    out.push_back(normalize(r * e.g_imu.vec()));
  return out;
}

inline std::vector<UnitVec3> align_directions(const Rot3& r, std::span<const UnitVec3> dirs)
{
  std::vector<UnitVec3> out;
  out.reserve(dirs.size());
  for (const auto& g : dirs)
    out.push_back(normalize(r * g.vec()));
  return out;
}

} // namespace gravprior
