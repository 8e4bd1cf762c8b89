/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#include "gravprior/labels.hpp"
#include "support/sim.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace gravprior;

namespace
{

constexpr double kPi = std::numbers::pi;

void expect_unit_near(const UnitVec3& a, const Vec3& b, double tol)
{
  EXPECT_NEAR(a.x(), b.x, tol);
  EXPECT_NEAR(a.y(), b.y, tol);
  EXPECT_NEAR(a.z(), b.z, tol);
}

Quat yaw_then_wobble(double t)
{
  return (quat_from_axis_angle(UnitVec3::unit_z(), 2.0 * kPi * t / 20.0) *
          quat_from_axis_angle(UnitVec3::unit_x(), deg_to_rad(15.0) * std::sin(1.3 * t)))
    .normalized();
}

} // namespace

TEST(GravityFromPose, Examples)
{
  expect_unit_near(gravity_from_pose(Quat::identity()), {0.0, 0.0, 1.0}, 0.0);
  expect_unit_near(gravity_from_pose(quat_from_axis_angle(UnitVec3::unit_z(), kPi)), {0.0, 0.0, -1.0}, 1e-15);
}

TEST(GravityFromPose, MatchesMatrixOracle)
{
  // Rᵀ·(0,-1,0) computed with an explicit matrix, then (x, y, z) -> (x, z, -y).
  std::mt19937_64 rng(6);
  for (int i = 0; i < 500; ++i)
  {
    const Rot3 r = sim::random_rotation(rng);
    const Vec3 g{-r(1, 0), -r(1, 1), -r(1, 2)};
    const auto out = gravity_from_pose(rot_to_quat(r));
    expect_unit_near(out, {g.x, g.z, -g.y}, 1e-12);
    EXPECT_NEAR(norm(out.vec()), 1.0, 1e-15);
  }
}

TEST(GravityFromPose, InvariantToWorldYaw)
{
  // ARKit's world up is +Y; a pure world yaw left-multiplies q_wc.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 500; ++i)
  {
    const Quat q = rot_to_quat(sim::random_rotation(rng));
    const Quat yaw = quat_from_axis_angle(UnitVec3::unit_y(), u(rng));
    const auto a = gravity_from_pose(q);
    const auto b = gravity_from_pose(yaw * q);
    EXPECT_LT(norm(a.vec() - b.vec()), 1e-9);
  }
}

TEST(BuildLabels, IdentityAndMap)
{
  std::vector<PoseSample> poses(3);
  for (int i = 0; i < 3; ++i)
    poses[i].t = i;
  const auto labels = build_labels(poses);
  ASSERT_EQ(labels.size(), 3u);
  for (const auto& l : labels)
    expect_unit_near(l.g_gt, {0.0, 0.0, 1.0}, 0.0);
  EXPECT_THROW(build_labels({}), Error);
}

TEST(BuildLabels, LargeInputMatchesSequentialMap)
{
  std::mt19937_64 rng(8);
  std::vector<PoseSample> poses(100000);
  for (std::size_t i = 0; i < poses.size(); ++i)
    poses[i] = {static_cast<double>(i) * 0.01, rot_to_quat(sim::random_rotation(rng)), {}};
  const auto labels = build_labels(poses);
  ASSERT_EQ(labels.size(), poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i)
  {
    ASSERT_EQ(labels[i].t, poses[i].t);
    ASSERT_EQ(labels[i].g_gt, gravity_from_pose(poses[i].q_wc));
  }
}

TEST(NongravityRatio, Examples)
{
  const std::vector<Vec3> rest{{0.0, 0.0, 9.81}};
  EXPECT_DOUBLE_EQ(nongravity_ratio(rest), 0.0);
  const std::vector<Vec3> two_g{{0.0, 0.0, 19.62}};
  EXPECT_DOUBLE_EQ(nongravity_ratio(two_g), 1.0);
  const std::vector<Vec3> mixed{{0.0, 0.0, 9.81}, {0.0, 0.0, 14.715}};
  EXPECT_NEAR(nongravity_ratio(mixed), 0.25, 1e-15);
  try
  {
    nongravity_ratio({});
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyWindow);
  }
}

TEST(TiltDeg, Examples)
{
  EXPECT_DOUBLE_EQ(tilt_deg(UnitVec3::unit_z()), 0.0);
  EXPECT_NEAR(tilt_deg(UnitVec3::unit_x()), 90.0, 1e-12);
  EXPECT_NEAR(tilt_deg(-UnitVec3::unit_z()), 180.0, 1e-12);
}

TEST(BuildSequence, LabelsMatchSimulatedTruth)
{
  std::mt19937_64 rng(11);
  const Rot3 r_ci = sim::random_rotation(rng);
  const auto attitude = sim::wobble(50.0);
  const auto rec = sim::simulate(attitude, r_ci, 30.0);
  const auto seq = build_sequence(rec.poses, rec.imu, LabelOptions{}, "wobble");
  ASSERT_EQ(seq.frames.size(), rec.poses.size());
  for (const auto& f : seq.frames)
    EXPECT_LT(norm(f.g_gt.vec() - sim::true_camera_gravity(attitude, r_ci, f.t).vec()), 1e-9);
  EXPECT_LT(rotation_angle_deg(seq.alignment.r, r_ci), 0.5);
  EXPECT_EQ(seq.alignment.condition, Conditioning::WellPosed);
  EXPECT_EQ(seq.id, "wobble");
}

TEST(BuildSequence, MovingRecordingPriorsAccurateAfterBurnIn)
{
  std::mt19937_64 rng(12);
  const Rot3 r_ci = sim::random_rotation(rng);
  const auto rec = sim::simulate(sim::wobble(40.0), r_ci, 30.0);
  const auto seq = build_sequence(rec.poses, rec.imu);
  for (const auto& f : seq.frames)
  {
    if (!f.burn_in)
    {
      EXPECT_LT(f.prior_error_deg, 1.0) << "t=" << f.t;
    }
    EXPECT_EQ(f.prior_error_deg, angle_deg(f.g_prior, f.g_gt));
    EXPECT_EQ(f.tilt_deg, tilt_deg(f.g_gt));
    EXPECT_NEAR(f.nongravity_ratio, 0.0, 1e-12);
  }
}

TEST(BuildSequence, StaticRecordingPriorsAccurate)
{
  std::mt19937_64 rng(13);
  const Rot3 r_ci = sim::random_rotation(rng);
  const Quat fixed = quat_from_axis_angle(Vec3{1.0, 2.0, 0.5}, 0.8);
  const auto rec = sim::simulate([&](double) { return fixed; }, r_ci, 10.0);
  const auto seq = build_sequence(rec.poses, rec.imu);
  for (const auto& f : seq.frames)
  {
    if (!f.burn_in)
    {
      EXPECT_LT(f.prior_error_deg, 1.0);
    }
  }
}

TEST(BuildSequence, InjectedTwentyDegreeDrift)
{
  // Gyro-only filter started 20° off: the estimate carries a fixed
  // world-frame tilt that no single IMU->camera rotation can absorb once the
  // device has turned through a full yaw cycle.
  std::mt19937_64 rng(14);
  const Rot3 r_ci = sim::random_rotation(rng);
  auto rec = sim::simulate(yaw_then_wobble, r_ci, 40.0);
  const Vec3 a0 = rec.imu.front().accel;
  const Vec3 axis = normalize(cross(a0, Vec3{0.3, 1.0, 0.2})).vec();
  rec.imu.front().accel = quat_to_rot(quat_from_axis_angle(axis, deg_to_rad(20.0))) * a0;

  LabelOptions opts;
  opts.gains.kp = 0.0;
  opts.gains.ki = 0.0;
  const auto seq = build_sequence(rec.poses, rec.imu, opts);
  double mean = 0.0;
  for (const auto& f : seq.frames)
    mean += f.prior_error_deg;
  mean /= static_cast<double>(seq.frames.size());
  EXPECT_NEAR(mean, 20.0, 2.0);
}

TEST(BuildSequence, DisjointStreams)
{
  const auto a = sim::simulate(sim::wobble(), Rot3{}, 5.0, 200.0, 10.0, 0.0);
  const auto b = sim::simulate(sim::wobble(), Rot3{}, 5.0, 200.0, 10.0, 100.0);
  try
  {
    build_sequence(a.poses, b.imu);
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::NoTemporalOverlap);
  }
  EXPECT_THROW(build_sequence({}, b.imu), Error);
  EXPECT_THROW(build_sequence(a.poses, {}), Error);
}

TEST(BuildSequence, FramesOutsideOverlapAreDropped)
{
  const auto rec = sim::simulate(sim::wobble(), Rot3{}, 10.0);
  // IMU only covers [2, 8] s.
  std::vector<ImuSample> imu;
  for (const auto& s : rec.imu)
    if (s.t >= 2.0 && s.t <= 8.0)
      imu.push_back(s);
  const auto seq = build_sequence(rec.poses, imu);
  std::size_t inside = 0;
  for (const auto& p : rec.poses)
    inside += (p.t >= imu.front().t && p.t <= imu.back().t) ? 1 : 0;
  EXPECT_EQ(seq.frames.size(), inside);
  EXPECT_EQ(seq.dropped_frames, rec.poses.size() - inside);
  EXPECT_GE(seq.frames.front().t, 2.0);
  EXPECT_TRUE(seq.frames.front().burn_in);
  EXPECT_FALSE(seq.frames.back().burn_in);
}

TEST(BuildSequence, TiltHistogramPartitionsFrames)
{
  const auto rec = sim::simulate(sim::wobble(80.0), Rot3{}, 30.0);
  const auto seq = build_sequence(rec.poses, rec.imu);
  std::size_t bins[3] = {0, 0, 0};
  for (const auto& f : seq.frames)
    ++bins[f.tilt_deg < 60.0 ? 0 : (f.tilt_deg < 120.0 ? 1 : 2)];
  EXPECT_EQ(bins[0] + bins[1] + bins[2], seq.frames.size());
}

TEST(GlobalFit, PoolsSequences)
{
  std::mt19937_64 rng(15);
  const Rot3 r_ci = sim::random_rotation(rng);
  const auto a = sim::simulate(sim::wobble(40.0), r_ci, 15.0);
  const auto b = sim::simulate(sim::wobble(70.0), r_ci, 15.0);
  std::vector<PreparedSequence> seqs{prepare_sequence(a.poses, a.imu, {}, "a"),
                                     prepare_sequence(b.poses, b.imu, {}, "b")};
  const auto global = solve_global(seqs);
  EXPECT_EQ(global.pairs, a.poses.size() + b.poses.size());
  EXPECT_LT(rotation_angle_deg(global.r, r_ci), 0.5);
}

TEST(RecordFiles, CsvAndSidecarRoundTrip)
{
  const auto dir = sim::scratch_dir("labels_io");
  const auto rec = sim::simulate(sim::wobble(), Rot3{}, 5.0);
  const auto seq = build_sequence(rec.poses, rec.imu, {}, "seq");
  write_record_csv(seq, dir / "seq.csv");
  write_record_sidecar(seq, dir / "seq.json");

  const auto frames = read_record_csv(dir / "seq.csv");
  ASSERT_EQ(frames.size(), seq.frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i)
  {
    EXPECT_EQ(frames[i].t, seq.frames[i].t);
    EXPECT_EQ(frames[i].g_gt, seq.frames[i].g_gt);
    EXPECT_EQ(frames[i].g_prior, seq.frames[i].g_prior);
    EXPECT_EQ(frames[i].prior_error_deg, seq.frames[i].prior_error_deg);
    EXPECT_EQ(frames[i].nongravity_ratio, seq.frames[i].nongravity_ratio);
    EXPECT_EQ(frames[i].tilt_deg, seq.frames[i].tilt_deg);
    EXPECT_EQ(frames[i].burn_in, seq.frames[i].burn_in);
  }

  std::ifstream in(dir / "seq.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("id"), "seq");
  EXPECT_EQ(j.at("frames").get<std::size_t>(), seq.frames.size());
  const auto a = alignment_from_json(j);
  EXPECT_EQ(a.r.matrix(), seq.alignment.r.matrix());
  EXPECT_EQ(a.residual_rms_deg, seq.alignment.residual_rms_deg);
  EXPECT_EQ(a.condition, seq.alignment.condition);
}

TEST(RecordFiles, MalformedRowReportsLine)
{
  const auto dir = sim::scratch_dir("labels_bad");
  {
    std::ofstream out(dir / "bad.csv");
    out << kRecordHeader << "\n0,0,0,1,0,0,1,0,0,0,0\n1,0,0,1,0,0,1,x,0,0,0\n";
  }
  try
  {
    read_record_csv(dir / "bad.csv");
    FAIL();
  }
  catch (const MalformedRowError& e)
  {
    EXPECT_EQ(e.line(), 3u);
  }
}
