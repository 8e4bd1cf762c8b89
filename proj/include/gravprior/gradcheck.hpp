/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include "gravprior/calibnet.hpp"
#include "gravprior/losses.hpp"
#include "gravprior/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace gravprior
{

struct GradcheckConfig
{
  int configs{100};
  int batch{4};
  NetDims dims{16, 8, 12, 12};
  double step{1e-5};
  double rtol{1e-4};
  double atol{1e-8};
  TermWeights weights = TermWeights::from(LossWeights{});
  std::uint64_t seed{7};
};

struct GradcheckReport
{
  int configs{0};
  std::size_t checked{0};
  std::size_t failures{0};
  std::size_t kinked{0};  // parameters whose perturbation kept crossing a kink
  double max_rel_error{0.0};
  double max_abs_error{0.0};

  bool passed() const { return failures == 0 && checked > 0; }
};

namespace detail
{

/// A batch with the inputs of one loss evaluation.
struct GradBatch
{
  std::vector<std::vector<double>> f;
  std::vector<UnitVec3> g_hat;
  std::vector<UnitVec3> g_star;
  std::vector<double> tau_star;
};

/// Branch pattern of every non-smooth point (ReLU signs, active clamps).
inline std::vector<bool> kink_pattern(const ForwardCache& c, const UnitVec3& g_star, const NetDims& d)
{
  std::vector<bool> p;
  auto relu_signs = [&](Activation a, const std::vector<double>& pre) {
    if (a == Activation::Relu)
      for (double v : pre)
        p.push_back(v > 0.0);
  };
  relu_signs(d.prior_act, c.prior_pre);
  relu_signs(d.head_act, c.head_pre);
  relu_signs(d.img_act, c.img_pre);
  for (double cosine : {dot(c.out.g_pred.vec(), g_star.vec()), dot(c.out.g_img.vec(), g_star.vec())})
  {
    p.push_back(cosine >= 1.0 - kAcosClamp);
    p.push_back(cosine <= -1.0 + kAcosClamp);
  }
  return p;
}

inline double batch_loss(const CalibratorParams& params, const GradBatch& b, const TermWeights& w,
                         std::vector<bool>* pattern)
{
  double loss = 0.0;
  if (pattern)
    pattern->clear();
  for (std::size_t i = 0; i < b.f.size(); ++i)
  {
    const auto c = forward(params, b.f[i], b.g_hat[i]);
    const auto t = loss_terms(c.out, b.g_star[i], b.tau_star[i]);
    loss += w.main * t.main + w.delta * t.delta + w.tau * t.tau + w.img * t.img;
    if (pattern)
    {
      const auto p = kink_pattern(c, b.g_star[i], params.dims());
      pattern->insert(pattern->end(), p.begin(), p.end());
    }
  }
  return loss / static_cast<double>(b.f.size());
}

} // namespace detail

/// Compares reverse-mode gradients of the batch-mean loss against central
/// finite differences for every parameter over `configs` random draws of
/// (params, f, ĝ, g*, τ*). A perturbation that flips a ReLU or clamp branch is
/// retried with a 10x smaller step (down to 1e-9) before it is judged.
inline GradcheckReport gradcheck(const GradcheckConfig& cfg)
{
  GradcheckReport report;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  for (int k = 0; k < cfg.configs; ++k)
  {
    CalibratorParams params = init_params(cfg.dims, rng());
    // Move off the structured initialisation so every block has gradient.
    for (double& v : params.values())
      v += 0.3 * n01(rng);

    detail::GradBatch b;
    for (int i = 0; i < cfg.batch; ++i)
    {
      std::vector<double> f(cfg.dims.C);
      for (double& x : f)
        x = n01(rng);
      b.f.push_back(std::move(f));
      const UnitVec3 g_star = random_unit(rng);
      const UnitVec3 g_hat = drift_direction(g_star, 60.0 * u01(rng), rng);
      b.g_star.push_back(g_star);
      b.g_hat.push_back(g_hat);
      b.tau_star.push_back(oracle_tau(angle_deg(g_hat, g_star)));
    }

    GradientSet analytic(cfg.dims);
    const double scale = 1.0 / static_cast<double>(cfg.batch);
    for (int i = 0; i < cfg.batch; ++i)
    {
      const auto c = forward(params, b.f[i], b.g_hat[i]);
      backward(params, c, loss_output_grads(c.out, b.g_star[i], b.tau_star[i], cfg.weights, scale), analytic);
    }

    std::vector<bool> base_pattern, plus_pattern, minus_pattern;
    detail::batch_loss(params, b, cfg.weights, &base_pattern);
    auto values = params.values();
    for (std::size_t i = 0; i < values.size(); ++i)
    {
      const double orig = values[i];
      double h = cfg.step;
      double numeric = 0.0;
      bool clean = false;
      while (h >= 1e-9)
      {
        values[i] = orig + h;
        const double lp = detail::batch_loss(params, b, cfg.weights, &plus_pattern);
        values[i] = orig - h;
        const double lm = detail::batch_loss(params, b, cfg.weights, &minus_pattern);
        values[i] = orig;
        numeric = (lp - lm) / (2.0 * h);
        if (plus_pattern == base_pattern && minus_pattern == base_pattern)
        {
          clean = true;
          break;
        }
        h *= 0.1;
      }
      if (!clean)
      {
        ++report.kinked;
        continue;
      }
      const double a = analytic.values()[i];
      const double abs_err = std::abs(a - numeric);
      const double denom = std::max(std::abs(a), std::abs(numeric));
      const double rel_err = denom > 0.0 ? abs_err / denom : 0.0;
      ++report.checked;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (abs_err > cfg.atol)
        report.max_rel_error = std::max(report.max_rel_error, rel_err);
      if (abs_err > cfg.atol && rel_err > cfg.rtol)
        ++report.failures;
    }
    ++report.configs;
  }
  return report;
}

} // namespace gravprior
