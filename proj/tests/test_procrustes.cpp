/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#include "gravprior/procrustes.hpp"
#include "support/sim.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

using namespace gravprior;
using gravprior::sim::perturb;
using gravprior::sim::random_direction;
using gravprior::sim::random_rotation;

namespace
{

PairedDirections rotated_pairs(const Rot3& r0, std::size_t n, std::mt19937_64& rng, double noise_deg = 0.0)
{
  PairedDirections p;
  for (std::size_t i = 0; i < n; ++i)
  {
    const auto g = random_direction(rng);
    p.g_imu.push_back(g);
    const auto c = normalize(r0 * g.vec());
    p.g_cam.push_back(noise_deg > 0.0 ? perturb(c, noise_deg, rng) : c);
  }
  return p;
}

double median(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

TEST(CrossCovariance, Examples)
{
  PairedDirections one{{UnitVec3::unit_z()}, {UnitVec3::unit_z()}};
  const Mat3 m = cross_covariance(one);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      EXPECT_EQ(m(r, c), (r == 2 && c == 2) ? 1.0 : 0.0);

  PairedDirections basis{{UnitVec3::unit_x(), UnitVec3::unit_y(), UnitVec3::unit_z()},
                         {UnitVec3::unit_x(), UnitVec3::unit_y(), UnitVec3::unit_z()}};
  EXPECT_EQ(cross_covariance(basis), Mat3::identity());
}

TEST(CrossCovariance, MatchesOuterProductSum)
{
  std::mt19937_64 rng(1);
  const auto p = rotated_pairs(random_rotation(rng), 50, rng);
  Mat3 oracle{};
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    const double c[3] = {p.g_cam[i].x(), p.g_cam[i].y(), p.g_cam[i].z()};
    const double b[3] = {p.g_imu[i].x(), p.g_imu[i].y(), p.g_imu[i].z()};
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k)
        oracle.m[r][k] += c[r] * b[k];
  }
  const Mat3 m = cross_covariance(p);
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k)
      EXPECT_NEAR(m(r, k), oracle(r, k), 1e-12);
}

TEST(Svd3, Examples)
{
  const auto id = svd3(Mat3::identity());
  for (double s : id.s)
    EXPECT_NEAR(s, 1.0, 1e-15);
  const auto d = svd3(Mat3::diag(3.0, 2.0, 1.0));
  EXPECT_NEAR(d.s[0], 3.0, 1e-15);
  EXPECT_NEAR(d.s[1], 2.0, 1e-15);
  EXPECT_NEAR(d.s[2], 1.0, 1e-15);
}

TEST(Svd3, ThousandRandomMatrices)
{
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 1000; ++i)
  {
    Mat3 m{};
    for (auto& row : m.m)
      for (double& x : row)
        x = n(rng);
    const auto s = svd3(m);
    const Mat3 r = reconstruct(s);
    double err = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        err = std::max(err, std::abs(r(a, b) - m(a, b)));
    EXPECT_LT(err, 1e-9 * frobenius_norm(m));
    EXPECT_LT(orthogonality_error(s.u), 1e-9);
    EXPECT_LT(orthogonality_error(s.v), 1e-9);
  }
}

TEST(SolveProcrustes, IdentityAlignment)
{
  std::mt19937_64 rng(3);
  PairedDirections p;
  for (int i = 0; i < 10; ++i)
  {
    const auto g = random_direction(rng);
    p.g_cam.push_back(g);
    p.g_imu.push_back(g);
  }
  const auto res = solve_procrustes(p);
  EXPECT_LT(rotation_angle_deg(res.r, Rot3{}), 1e-9);
  EXPECT_LT(res.residual_rms_deg, 1e-6);
  EXPECT_EQ(res.condition, Conditioning::WellPosed);
  EXPECT_EQ(res.pairs, 10u);
}

TEST(SolveProcrustes, NoiselessRecovery)
{
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial)
  {
    const Rot3 r0 = random_rotation(rng);
    const auto res = solve_procrustes(rotated_pairs(r0, 12, rng));
    worst = std::max(worst, rotation_angle_deg(res.r, r0));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(SolveProcrustes, NoiseShrinksWithPairCount)
{
  std::mt19937_64 rng(55);
  std::vector<double> medians;
  for (std::size_t n : {10u, 100u, 1000u})
  {
    std::vector<double> errs;
    for (int trial = 0; trial < 50; ++trial)
    {
      const Rot3 r0 = random_rotation(rng);
      errs.push_back(rotation_angle_deg(solve_procrustes(rotated_pairs(r0, n, rng, 1.0)).r, r0));
    }
    medians.push_back(median(errs));
  }
  EXPECT_GT(medians[0], medians[1]);
  EXPECT_GT(medians[1], medians[2]);
  EXPECT_LT(medians[2], 0.2);
}

TEST(SolveProcrustes, ReflectiveInputsStayProper)
{
  // g_cam is the mirror image of g_imu, so the unconstrained optimum is a reflection.
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial)
  {
    PairedDirections p;
    for (int i = 0; i < 20; ++i)
    {
      const auto g = random_direction(rng);
      p.g_imu.push_back(g);
      p.g_cam.push_back(normalize(Vec3{g.x(), g.y(), -g.z()}));
    }
    const auto res = solve_procrustes(p);
    EXPECT_NEAR(determinant(res.r.matrix()), 1.0, 1e-9);
  }
}

TEST(SolveProcrustes, GloballyOptimalAmongRandomRotations)
{
  std::mt19937_64 rng(31);
  const auto p = rotated_pairs(random_rotation(rng), 200, rng, 5.0);
  const auto res = solve_procrustes(p);
  auto sse = [&](const Rot3& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
    {
      const Vec3 d = p.g_cam[i].vec() - r * p.g_imu[i].vec();
      s += dot(d, d);
    }
    return s;
  };
  const double best = sse(res.r);
  for (int i = 0; i < 100; ++i)
    EXPECT_LE(best, sse(random_rotation(rng)));
  for (int i = 0; i < 100; ++i)
    EXPECT_LE(res.residual_rms_deg, alignment_rms_deg(random_rotation(rng), p));
}

TEST(SolveProcrustes, SingleDirectionIsDegenerate)
{
  PairedDirections p;
  for (int i = 0; i < 10; ++i)
  {
    p.g_cam.push_back(UnitVec3::unit_y());
    p.g_imu.push_back(UnitVec3::unit_z());
  }
  const auto res = solve_procrustes(p);
  EXPECT_EQ(res.condition, Conditioning::Degenerate);
  EXPECT_NEAR(determinant(res.r.matrix()), 1.0, 1e-9);
  EXPECT_LT(angle_deg(normalize(res.r * Vec3{0.0, 0.0, 1.0}), UnitVec3::unit_y()), 1e-9);
}

TEST(SolveProcrustes, Errors)
{
  PairedDirections p{{UnitVec3::unit_x(), UnitVec3::unit_y()}, {UnitVec3::unit_x(), UnitVec3::unit_y()}};
  try
  {
    solve_procrustes(p);
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientPairs);
  }
  p.g_cam.push_back(UnitVec3::unit_z());
  EXPECT_THROW(solve_procrustes(p), Error);
}

TEST(AlignSequence, Examples)
{
  const std::vector<GravityEstimate> est{{0.0, -UnitVec3::unit_z()}, {1.0, UnitVec3::unit_x()}};
  const auto same = align_sequence(Rot3{}, est);
  EXPECT_EQ(same[0], est[0].g_imu);
  EXPECT_EQ(same[1], est[1].g_imu);

  const auto rx = align_sequence(euler_rot(Axis::X, std::numbers::pi / 2.0), est);
  EXPECT_LT(angle_deg(rx[0], UnitVec3::unit_y()), 1e-12);
}

TEST(AlignSequence, RoundTrip)
{
  std::mt19937_64 rng(4);
  const Rot3 r = random_rotation(rng);
  std::vector<UnitVec3> dirs;
  for (int i = 0; i < 100; ++i)
    dirs.push_back(random_direction(rng));
  const auto back = align_directions(r.transposed(), align_directions(r, dirs));
  for (std::size_t i = 0; i < dirs.size(); ++i)
    EXPECT_LT(norm(back[i].vec() - dirs[i].vec()), 1e-9);
}
