/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#include "gravprior/mahony.hpp"
#include "support/sim.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace gravprior;

namespace
{

constexpr double kPi = std::numbers::pi;

ErrorKind kind_of(const std::function<void()>& fn)
{
  try
  {
    fn();
  }
  catch (const Error& e)
  {
    return e.kind();
  }
  ADD_FAILURE() << "no gravprior::Error thrown";
  return ErrorKind::InvalidArgument;
}

std::vector<ImuSample> static_stream(const Vec3& accel, double hz, double seconds, double t0 = 0.0)
{
  std::vector<ImuSample> s;
  const int n = static_cast<int>(std::round(hz * seconds)) + 1;
  for (int i = 0; i < n; ++i)
    s.push_back({t0 + i / hz, {0.0, 0.0, 0.0}, accel});
  return s;
}

UnitVec3 run_from_identity(const std::vector<ImuSample>& stream, const MahonyGains& gains)
{
  MahonyState st = mahony_init(gains);
  for (const auto& s : stream)
    st = mahony_update(st, s, gains);
  return gravity_body(st);
}

} // namespace

TEST(MahonyInit, Examples)
{
  const MahonyGains g;
  const auto a = mahony_init(g, Vec3{0.0, 0.0, kGravity});
  EXPECT_NEAR(angle_deg(up_body(a), UnitVec3::unit_z()), 0.0, 1e-12);
  EXPECT_NEAR(angle_deg(gravity_body(a), -UnitVec3::unit_z()), 0.0, 1e-12);

  const auto b = mahony_init(g);
  EXPECT_EQ(b.q, Quat::identity());
  EXPECT_EQ(b.integral_fb, (Vec3{0.0, 0.0, 0.0}));

  const auto c = mahony_init(g, Vec3{kGravity, 0.0, 0.0});
  EXPECT_NEAR(angle_deg(gravity_body(c), -UnitVec3::unit_x()), 0.0, 1e-9);
}

TEST(MahonyInit, ZeroAccelIsDegenerate)
{
  EXPECT_EQ(kind_of([] { mahony_init(MahonyGains{}, Vec3{0.0, 0.0, 0.0}); }), ErrorKind::DegenerateVector);
}

TEST(MahonyInit, RandomAccelAlignsUp)
{
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 200; ++i)
  {
    const Vec3 a{n(rng), n(rng), n(rng)};
    const auto st = mahony_init(MahonyGains{}, a);
    EXPECT_LT(norm(up_body(st).vec() - normalize(a).vec()), 1e-12);
  }
}

TEST(GravityBody, Examples)
{
  MahonyState st;
  EXPECT_LT(angle_deg(gravity_body(st), -UnitVec3::unit_z()), 1e-12);
  st.q = quat_from_axis_angle(UnitVec3::unit_x(), kPi / 2.0);
  EXPECT_LT(angle_deg(gravity_body(st), -UnitVec3::unit_y()), 1e-9);
  st.q = quat_from_axis_angle(UnitVec3::unit_x(), kPi);
  EXPECT_LT(angle_deg(gravity_body(st), UnitVec3::unit_z()), 1e-9);
}

TEST(GravityBody, MatchesRotatedWorldGravity)
{
  // Oracle: Rᵀ·(0,0,-1) with R built independently through the matrix path.
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i)
  {
    const Rot3 r = sim::random_rotation(rng);
    MahonyState st;
    st.q = rot_to_quat(r);
    const Vec3 expected = r.transposed() * Vec3{0.0, 0.0, -1.0};
    EXPECT_LT(norm(gravity_body(st).vec() - expected), 1e-12);
  }
}

TEST(MahonyUpdate, FirstSampleOnlyStampsTime)
{
  const MahonyGains g;
  const auto st = mahony_update(mahony_init(g), {1.5, {1.0, 2.0, 3.0}, {0.0, 5.0, 5.0}}, g);
  EXPECT_EQ(st.q, Quat::identity());
  ASSERT_TRUE(st.last_t.has_value());
  EXPECT_EQ(*st.last_t, 1.5);
}

TEST(MahonyUpdate, NonMonotonicTimeRejected)
{
  const MahonyGains g;
  auto st = mahony_update(mahony_init(g), {1.0, {}, {0.0, 0.0, kGravity}}, g);
  EXPECT_EQ(kind_of([&] { mahony_update(st, {0.5, {}, {0.0, 0.0, kGravity}}, g); }), ErrorKind::NonMonotonicTime);
}

TEST(MahonyUpdate, StaticLevelStreamStaysLevel)
{
  const auto g = run_from_identity(static_stream({0.0, 0.0, kGravity}, 100.0, 10.0), MahonyGains{});
  EXPECT_LT(angle_deg(g, -UnitVec3::unit_z()), 0.5);
}

TEST(MahonyUpdate, TiltedStartFollowsPiDynamics)
{
  // A tilt error about one axis obeys θ' = -(kp·sinθ + I), I' = ki·sinθ.
  // Oracle: RK4 on that ODE, compared against the filter after 10 s.
  const MahonyGains gains;
  const double theta0 = deg_to_rad(30.0);
  const Vec3 up = euler_rot(Axis::X, theta0) * Vec3{0.0, 0.0, 1.0};
  const auto stream = static_stream(kGravity * up, 100.0, 10.0);
  const double filter_err = angle_deg(run_from_identity(stream, gains), normalize(-up));

  auto f = [&](double th, double i) { return std::pair{-(gains.kp * std::sin(th) + i), gains.ki * std::sin(th)}; };
  double th = theta0, in = 0.0;
  const double h = 1e-3;
  for (int k = 0; k < 10000; ++k)
  {
    const auto [a1, b1] = f(th, in);
    const auto [a2, b2] = f(th + 0.5 * h * a1, in + 0.5 * h * b1);
    const auto [a3, b3] = f(th + 0.5 * h * a2, in + 0.5 * h * b2);
    const auto [a4, b4] = f(th + h * a3, in + h * b3);
    th += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
    in += h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
  }
  EXPECT_NEAR(filter_err, std::abs(rad_to_deg(th)), 0.05);
}

TEST(MahonyUpdate, ProportionalOnlyConvergesFromTilt)
{
  MahonyGains gains;
  gains.ki = 0.0;
  const Vec3 up = euler_rot(Axis::X, deg_to_rad(30.0)) * Vec3{0.0, 0.0, 1.0};
  const auto g = run_from_identity(static_stream(kGravity * up, 100.0, 10.0), gains);
  EXPECT_LT(angle_deg(g, normalize(-up)), 0.5);
}

TEST(MahonyUpdate, MonotoneConvergenceAfterBurnIn)
{
  // Pure proportional feedback; an integral term overshoots before settling.
  const Vec3 d = normalize(Vec3{0.4, -0.7, 0.6});
  MahonyGains gains;
  gains.ki = 0.0;
  MahonyState st = mahony_init(gains);
  const auto stream = static_stream(kGravity * d, 100.0, 20.0);
  double prev = 180.0;
  for (std::size_t i = 0; i < stream.size(); ++i)
  {
    st = mahony_update(st, stream[i], gains);
    const double a = angle_deg(gravity_body(st), normalize(-d));
    if (i >= 10)
    {
      EXPECT_LE(a, prev + 1e-9) << "sample " << i;
    }
    prev = a;
  }
}

TEST(MahonyUpdate, GyroOnlyQuarterTurn)
{
  MahonyGains g;
  g.kp = 0.0;
  g.ki = 0.0;
  std::vector<ImuSample> stream;
  for (int i = 0; i <= 1000; ++i)
    stream.push_back({i / 1000.0, {kPi / 2.0, 0.0, 0.0}, {0.0, 0.0, 0.0}});
  const auto est = run_from_identity(stream, g);
  const Vec3 expected = euler_rot(Axis::X, kPi / 2.0).transposed() * Vec3{0.0, 0.0, -1.0};
  EXPECT_LT(angle_deg(est, normalize(expected)), 0.1);
}

TEST(MahonyUpdate, GyroOnlyPiecewiseConstantComposition)
{
  // Oracle: product of axis-angle exponentials of each constant segment.
  MahonyGains g;
  g.kp = 0.0;
  g.ki = 0.0;
  const std::vector<std::pair<Vec3, double>> segments{
    {{0.5, 0.0, 0.0}, 0.4}, {{0.0, -1.2, 0.3}, 0.7}, {{0.2, 0.2, 0.9}, 0.5}};
  std::vector<ImuSample> stream;
  double t = 0.0;
  stream.push_back({t, {}, {}});
  Quat oracle = Quat::identity();
  for (const auto& [w, dur] : segments)
  {
    const int n = static_cast<int>(std::round(dur * 1000.0));
    for (int i = 0; i < n; ++i)
    {
      t += 1e-3;
      stream.push_back({t, w, {}});
    }
    oracle = oracle * quat_from_axis_angle(w, norm(w) * dur);
  }
  MahonyState st = mahony_init(g);
  for (const auto& s : stream)
    st = mahony_update(st, s, g);
  EXPECT_LT(rotation_angle_deg(quat_to_rot(st.q), quat_to_rot(oracle)), 0.1);
}

TEST(MahonyUpdate, ZeroAccelSkipsCorrection)
{
  MahonyGains g;
  g.kp = 5.0;
  MahonyState st = mahony_init(g);
  st.q = quat_from_axis_angle(UnitVec3::unit_y(), 0.3);
  st.last_t = 0.0;
  const auto next = mahony_update(st, {0.01, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}, g);
  EXPECT_LT(rotation_angle_deg(quat_to_rot(next.q), quat_to_rot(st.q)), 1e-12);
  EXPECT_EQ(next.integral_fb, (Vec3{0.0, 0.0, 0.0}));
}

TEST(MahonyUpdate, DynamicAccelAndLongGapsSkipCorrection)
{
  MahonyGains g;
  MahonyState st = mahony_init(g);
  st.last_t = 0.0;
  // 1.6 g exceeds the rejection band.
  auto a = mahony_update(st, {0.01, {}, {1.6 * kGravity, 0.0, 0.0}}, g);
  EXPECT_EQ(a.q, Quat::identity());
  // A gap above dt_max integrates gyro only.
  auto b = mahony_update(st, {0.5, {}, {kGravity, 0.0, 0.0}}, g);
  EXPECT_EQ(b.q, Quat::identity());
}

TEST(MahonyUpdate, QuaternionStaysUnit)
{
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> dt(1e-4, 0.2);
  MahonyGains g;
  g.kp = 2.0;
  g.ki = 0.1;
  MahonyState st = mahony_init(g);
  double t = 0.0;
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i)
  {
    t += dt(rng);
    st = mahony_update(st, {t, {3.0 * n(rng), 3.0 * n(rng), 3.0 * n(rng)}, {5.0 * n(rng), 5.0 * n(rng), 9.81 + n(rng)}},
                       g);
    worst = std::max(worst, std::abs(st.q.norm() - 1.0));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(MahonyUpdate, InvariantToTimeShift)
{
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<ImuSample> a, b;
  for (int i = 0; i < 2000; ++i)
  {
    const ImuSample s{i / 256.0, {0.5 * n(rng), 0.5 * n(rng), 0.5 * n(rng)}, {n(rng), n(rng), kGravity + n(rng)}};
    a.push_back(s);
    b.push_back({s.t + 1024.0, s.gyro, s.accel});  // power-of-two shift keeps dt exact
  }
  const MahonyGains g;
  const auto ea = run_sequence(a, std::vector<double>{a.back().t}, g);
  const auto eb = run_sequence(b, std::vector<double>{b.back().t}, g);
  EXPECT_EQ(ea[0].g_imu, eb[0].g_imu);
}

TEST(RunSequence, StaticStreamAtFrameRate)
{
  const auto imu = static_stream({0.0, 0.0, kGravity}, 1000.0, 8.0);
  std::vector<double> frames;
  for (double t = 5.0; t <= 8.0; t += 1.0 / 30.0)
    frames.push_back(t);
  const auto est = run_sequence(imu, frames, MahonyGains{});
  ASSERT_EQ(est.size(), frames.size());
  for (const auto& e : est)
    EXPECT_LT(angle_deg(e.g_imu, -UnitVec3::unit_z()), 0.5);
}

TEST(RunSequence, NearestPrecedingSample)
{
  // Gyro-only yaw-free roll so every sample has a distinct estimate.
  MahonyGains g;
  g.kp = 0.0;
  g.ki = 0.0;
  std::vector<ImuSample> imu;
  for (int i = 0; i <= 100; ++i)
    imu.push_back({i * 0.01, {1.0, 0.0, 0.0}, {0.0, 0.0, kGravity}});
  const std::vector<double> frames{0.3, 0.305, 0.31};
  const auto est = run_sequence(imu, frames, g);
  const auto at_30 = run_sequence(std::span(imu).first(31), std::vector<double>{0.3}, g);
  const auto at_31 = run_sequence(std::span(imu).first(32), std::vector<double>{0.31}, g);
  ASSERT_EQ(est.size(), 3u);
  EXPECT_EQ(est[0].g_imu, at_30[0].g_imu);
  EXPECT_EQ(est[1].g_imu, at_30[0].g_imu);
  EXPECT_EQ(est[2].g_imu, at_31[0].g_imu);
  EXPECT_EQ(est[1].t, 0.305);
}

TEST(RunSequence, Errors)
{
  const MahonyGains g;
  const auto imu = static_stream({0.0, 0.0, kGravity}, 100.0, 1.0, 2.0);
  EXPECT_EQ(kind_of([&] { run_sequence({}, std::vector<double>{}, g); }), ErrorKind::EmptyStream);
  EXPECT_EQ(kind_of([&] { run_sequence(imu, std::vector<double>{1.0}, g); }), ErrorKind::FrameBeforeStream);
  EXPECT_EQ(kind_of([&] { run_sequence(imu, std::vector<double>{2.5, 2.4}, g); }), ErrorKind::NonMonotonicTime);
}

TEST(Gains, NegativeGainsRejected)
{
  MahonyGains g;
  g.kp = -1.0;
  EXPECT_THROW(mahony_init(g), Error);
}

TEST(Gains, AccelSignFlipsMeasuredUp)
{
  MahonyGains g;
  g.accel_sign = -1.0;
  const auto st = mahony_init(g, Vec3{0.0, 0.0, -kGravity});
  EXPECT_LT(angle_deg(gravity_body(st), -UnitVec3::unit_z()), 1e-12);
}
