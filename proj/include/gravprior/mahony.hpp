/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include "gravprior/error.hpp"
#include "gravprior/geom3.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace gravprior
{

/// Standard gravity used for accelerometer magnitude checks and the
/// non-gravity ratio.
inline constexpr double kGravity = 9.81;

struct ImuSample
{
  double t{0.0};  // seconds
  Vec3 gyro;      // rad/s, body frame
  Vec3 accel;     // m/s^2, body frame

  friend bool operator==(const ImuSample&, const ImuSample&) = default;
};

struct MahonyGains
{
  double kp{0.5};
  double ki{0.01};
  /// +1: accelerometer reads specific force (points up when static).
  /// -1: accelerometer reads gravity (points down when static).
  double accel_sign{1.0};
  /// Larger steps skip the accelerometer correction and integrate gyro only.
  double dt_max{0.1};
  /// Correction skipped when | ||a||/g - 1 | exceeds this.
  double accel_reject{0.5};
};

struct MahonyState
{
  Quat q;                        // body -> world (Z-up)
  Vec3 integral_fb;              // rad/s
  std::optional<double> last_t;  // unset until the first sample
};

struct GravityEstimate
{
  double t{0.0};
  UnitVec3 g_imu = UnitVec3::unit_z();
};

inline void validate_gains(const MahonyGains& gains)
{
  if (!(gains.kp >= 0.0) || !(gains.ki >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "Mahony gains must be non-negative");
  if (gains.accel_sign != 1.0 && gains.accel_sign != -1.0)
    throw Error(ErrorKind::InvalidArgument, "accel_sign must be +1 or -1");
}

/// Estimated up direction expressed in the body frame: third row of the
/// body->world rotation.
inline UnitVec3 up_body(const MahonyState& state)
{
  return normalize(quat_to_rot(state.q).matrix().row(2));
}

/// Gravity in the body frame, the negated up estimate.
inline UnitVec3 gravity_body(const MahonyState& state) { return -up_body(state); }

/// Builds the initial state. With an accelerometer reading the attitude is
/// tilt-aligned (body up = measured up, yaw = 0); otherwise identity.
inline MahonyState mahony_init(const MahonyGains& gains, const std::optional<Vec3>& first_accel = std::nullopt)
{
  validate_gains(gains);
  MahonyState state;
  if (first_accel)
  {
    const UnitVec3 measured_up = normalize(gains.accel_sign * *first_accel);
    // body->world must send the body-frame up onto world +Z.
    state.q = quat_between(measured_up, UnitVec3::unit_z());
  }
  return state;
}

/// One filter step. Pure: returns the advanced state.
inline MahonyState mahony_update(const MahonyState& state, const ImuSample& s, const MahonyGains& gains)
{
  if (!std::isfinite(s.t) || !is_finite(s.gyro) || !is_finite(s.accel))
    throw Error(ErrorKind::InvalidArgument, "IMU sample has non-finite values");

  MahonyState next = state;
  if (!state.last_t)
  {
    next.last_t = s.t;
    return next;
  }
  if (s.t < *state.last_t)
    throw Error(ErrorKind::NonMonotonicTime, "IMU sample at t=" + std::to_string(s.t) +
                                                 " precedes t=" + std::to_string(*state.last_t));

  const double dt = s.t - *state.last_t;
  next.last_t = s.t;
  if (dt == 0.0)
    return next;

  Vec3 omega = s.gyro;
  const double accel_norm = norm(s.accel);
  const bool accel_usable = accel_norm > kNormEpsilon &&
                            std::abs(accel_norm / kGravity - 1.0) <= gains.accel_reject &&
                            dt <= gains.dt_max;
  if (accel_usable)
  {
    const UnitVec3 measured = normalize(gains.accel_sign * s.accel);
    const UnitVec3 estimated = up_body(state);
    const Vec3 e = cross(measured.vec(), estimated.vec());
    next.integral_fb += (gains.ki * dt) * e;
    omega = s.gyro + gains.kp * e + next.integral_fb;
  }

  next.q = (state.q * quat_exp(dt * omega)).normalized();
  return next;
}

/// Runs the filter over a whole stream and samples it at `frame_times`: each
/// frame gets the state after the latest IMU sample at or before it.
inline std::vector<GravityEstimate> run_sequence(std::span<const ImuSample> imu,
                                                 std::span<const double> frame_times,
                                                 const MahonyGains& gains)
{
  if (imu.empty())
    throw Error(ErrorKind::EmptyStream, "IMU stream is empty");
  for (std::size_t i = 1; i < frame_times.size(); ++i)
    if (frame_times[i] < frame_times[i - 1])
      throw Error(ErrorKind::NonMonotonicTime, "frame times are not sorted");
  if (!frame_times.empty() && frame_times.front() < imu.front().t)
    throw Error(ErrorKind::FrameBeforeStream, "frame at t=" + std::to_string(frame_times.front()) +
                                                  " precedes the first IMU sample");

  std::optional<Vec3> first_accel;
  if (norm(imu.front().accel) > kNormEpsilon)
    first_accel = imu.front().accel;
  MahonyState state = mahony_init(gains, first_accel);

  std::vector<GravityEstimate> out;
  out.reserve(frame_times.size());
  std::size_t frame = 0;
  for (std::size_t i = 0; i < imu.size(); ++i)
  {
    state = mahony_update(state, imu[i], gains);
    const bool last = i + 1 == imu.size();
    while (frame < frame_times.size() && (last || frame_times[frame] < imu[i + 1].t))
    {
      out.push_back({frame_times[frame], gravity_body(state)});
      ++frame;
    }
  }
  return out;
}

} // namespace gravprior
