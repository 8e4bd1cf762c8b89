/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include "gravprior/calibnet.hpp"
#include "gravprior/error.hpp"
#include "gravprior/geom3.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace gravprior
{

/// arccos derivative inputs are clamped to ±(1 - this) so the gradient stays
/// bounded at perfect alignment.
inline constexpr double kAcosClamp = 1e-7;

struct LossWeights
{
  double lambda_delta{1e-4};
  double lambda_tau{0.05};
  double lambda_img{0.2};
};

/// Per-sample (or batch-mean) loss terms. Angular terms in radians, delta in rad².
struct LossBreakdown
{
  double main{0.0};
  double delta{0.0};
  double tau{0.0};
  double img{0.0};
  double total{0.0};
};

/// Soft gate target σ((ε_p - 25) / 5), ε_p in degrees.
inline double oracle_tau(double prior_error_deg)
{
  return nn::sigmoid((prior_error_deg - 25.0) / 5.0);
}

namespace detail
{

inline double safe_acos(double c) { return std::acos(std::clamp(c, -1.0, 1.0)); }

/// d/dc of arccos evaluated at c clamped to ±(1 - kAcosClamp).
inline double clamped_acos_grad(double c)
{
  const double cc = std::clamp(c, -1.0 + kAcosClamp, 1.0 - kAcosClamp);
  return -1.0 / std::sqrt(1.0 - cc * cc);
}

} // namespace detail

/// The four unweighted terms for one sample; `total` is left at zero.
inline LossBreakdown loss_terms(const ForwardOutput& out, const UnitVec3& g_star, double tau_star)
{
  LossBreakdown t;
  t.main = detail::safe_acos(dot(out.g_pred.vec(), g_star.vec()));
  t.tau = (out.tau - tau_star) * (out.tau - tau_star);
  t.delta = (1.0 - tau_star) *
            (out.delta.delta_x * out.delta.delta_x + out.delta.delta_y * out.delta.delta_y);
  t.img = (0.5 + tau_star) * detail::safe_acos(dot(out.g_img.vec(), g_star.vec()));
  return t;
}

inline double weighted_total(const LossBreakdown& t, const LossWeights& w)
{
  return t.main + w.lambda_delta * t.delta + w.lambda_tau * t.tau + w.lambda_img * t.img;
}

/// Batch means of each term plus the weighted total.
inline LossBreakdown total_loss(std::span<const LossBreakdown> batch, const LossWeights& w)
{
  if (batch.empty())
    throw Error(ErrorKind::EmptyBatch, "loss over an empty batch");
  LossBreakdown mean;
  for (const auto& t : batch)
  {
    mean.main += t.main;
    mean.delta += t.delta;
    mean.tau += t.tau;
    mean.img += t.img;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  mean.main *= inv;
  mean.delta *= inv;
  mean.tau *= inv;
  mean.img *= inv;
  mean.total = weighted_total(mean, w);
  return mean;
}

/// Weight on each term when differentiating; the total is {1, λδ, λτ, λimg}.
struct TermWeights
{
  double main{1.0};
  double delta{0.0};
  double tau{0.0};
  double img{0.0};

  static TermWeights from(const LossWeights& w) { return {1.0, w.lambda_delta, w.lambda_tau, w.lambda_img}; }
};

/// Gradient of scale·Σ_k weight_k·term_k for one sample with respect to the
/// forward outputs. Use scale = 1/B for a batch mean.
inline OutputGrads loss_output_grads(const ForwardOutput& out, const UnitVec3& g_star, double tau_star,
                                     const TermWeights& w, double scale = 1.0)
{
  OutputGrads g;
  const double c_pred = dot(out.g_pred.vec(), g_star.vec());
  g.g_pred = (scale * w.main * detail::clamped_acos_grad(c_pred)) * g_star.vec();

  const double c_img = dot(out.g_img.vec(), g_star.vec());
  g.g_img = (scale * w.img * (0.5 + tau_star) * detail::clamped_acos_grad(c_img)) * g_star.vec();

  g.tau = scale * w.tau * 2.0 * (out.tau - tau_star);
  g.delta_x = scale * w.delta * 2.0 * (1.0 - tau_star) * out.delta.delta_x;
  g.delta_y = scale * w.delta * 2.0 * (1.0 - tau_star) * out.delta.delta_y;
  return g;
}

} // namespace gravprior
