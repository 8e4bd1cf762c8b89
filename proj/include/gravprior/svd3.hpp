/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include "gravprior/error.hpp"
#include "gravprior/geom3.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace gravprior
{

inline constexpr int kSvdMaxSweeps = 60;

struct Svd3
{
  Mat3 u;                     // orthogonal, columns are left singular vectors
  std::array<double, 3> s{};  // descending, non-negative
  Mat3 v;                     // orthogonal, columns are right singular vectors
  int sweeps{0};
};

/// U·diag(S)·Vᵀ
inline Mat3 reconstruct(const Svd3& d)
{
  return d.u * Mat3::diag(d.s[0], d.s[1], d.s[2]) * d.v.transposed();
}

/// One-sided (Hestenes) Jacobi SVD of a 3x3 matrix.
///
/// Column pairs of A·V are rotated until mutually orthogonal; the column norms
/// are then the singular values and the normalised columns form U. Columns
/// that collapse to zero (rank-deficient input) are completed with cross
/// products so U stays orthogonal.
inline Svd3 svd3(const Mat3& m, int max_sweeps = kSvdMaxSweeps)
{
  for (const auto& row : m.m)
    for (double x : row)
      if (!std::isfinite(x))
        throw Error(ErrorKind::InvalidArgument, "svd3 input has non-finite entries");

  constexpr double tol = 1e-15;
  Mat3 a = m;
  Mat3 v = Mat3::identity();

  int sweep = 0;
  bool rotated = true;
  while (rotated)
  {
    if (sweep == max_sweeps)
      throw Error(ErrorKind::NoConvergence, "Jacobi SVD did not converge in " + std::to_string(max_sweeps) + " sweeps");
    ++sweep;
    rotated = false;
    for (int p = 0; p < 2; ++p)
    {
      for (int q = p + 1; q < 3; ++q)
      {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (int i = 0; i < 3; ++i)
        {
          alpha += a(i, p) * a(i, p);
          beta += a(i, q) * a(i, q);
          gamma += a(i, p) * a(i, q);
        }
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta))
          continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < 3; ++i)
        {
          const double ap = a(i, p), aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
  }

  std::array<double, 3> norms{};
  for (int j = 0; j < 3; ++j)
    norms[j] = norm(a.col(j));

  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int l, int r) { return norms[l] > norms[r]; });

  Svd3 out;
  out.sweeps = sweep;
  const double smax = norms[order[0]];
  const double zero_cut = 1e-14 * smax;
  std::array<Vec3, 3> ucols{};
  int rank = 0;
  for (int k = 0; k < 3; ++k)
  {
    const int j = order[k];
    out.s[k] = norms[j];
    for (int i = 0; i < 3; ++i)
      out.v(i, k) = v(i, j);
    if (norms[j] > zero_cut && norms[j] > 0.0)
    {
      ucols[k] = (1.0 / norms[j]) * a.col(j);
      ++rank;
    }
  }

  // Complete U for rank-deficient inputs.
  if (rank == 0)
  {
    ucols = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
  }
  else if (rank == 1)
  {
    const Vec3 u0 = ucols[0];
    Vec3 seed = std::abs(u0.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 u1 = normalize(cross(u0, seed)).vec();
    ucols[1] = u1;
    ucols[2] = cross(u0, u1);
  }
  else if (rank == 2)
  {
    ucols[2] = normalize(cross(ucols[0], ucols[1])).vec();
  }
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      out.u(i, k) = ucols[k][i];
  return out;
}

} // namespace gravprior
