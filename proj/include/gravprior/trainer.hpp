/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include "gravprior/calibnet.hpp"
#include "gravprior/csv.hpp"
#include "gravprior/error.hpp"
#include "gravprior/geom3.hpp"
#include "gravprior/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace gravprior
{

enum class LrStep
{
  Epoch,
  Iter,
};

struct TrainConfig
{
  double lr_heads{5e-5};
  double lr_backbone{2e-6};  // kept for parity with a backbone-training setup; no backbone here
  int epochs{50};
  int batch{64};
  double beta1{0.9};
  double beta2{0.999};
  double eps_adam{1e-8};
  std::uint64_t seed{0};
  LrStep lr_step{LrStep::Epoch};
  double clip_norm{0.0};  // global-norm clip, 0 = off
  int threads{1};
};

inline void validate(const TrainConfig& c)
{
  if (!(c.lr_heads > 0.0) || !(c.lr_backbone >= 0.0) || c.epochs < 0 || c.batch <= 0 || !(c.eps_adam > 0.0) ||
      !(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0) || !(c.clip_norm >= 0.0) ||
      c.threads <= 0)
    throw Error(ErrorKind::InvalidArgument, "invalid training configuration");
}

/// lr(t) = base/2 · (1 + cos(π t / T)), floor 0.
inline double cosine_lr(double base_lr, double t, double total)
{
  if (total <= 0.0)
    return base_lr;
  if (t < 0.0 || t > total)
    throw Error(ErrorKind::InvalidArgument, "schedule position outside [0, T]");
  return std::max(0.0, 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * t / total)));
}

struct AdamState
{
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step{0};

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update, in place.
inline void adam_step(CalibratorParams& params, const GradientSet& grads, AdamState& state, double lr,
                      const TrainConfig& cfg)
{
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw Error(ErrorKind::ShapeMismatch, "Adam state, gradients and parameters differ in size");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto p = params.values();
  auto g = grads.values();
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps_adam);
  }
}

// --- data ------------------------------------------------------------------

/// One training example: features plus the labelled and prior gravity.
struct Sample
{
  std::vector<double> f;
  UnitVec3 g_star = UnitVec3::unit_z();
  UnitVec3 g_prior = UnitVec3::unit_z();
  double prior_error_deg{0.0};
  double nongravity_ratio{0.0};
};

using Dataset = std::vector<Sample>;

/// Source of per-frame feature vectors standing in for an image backbone.
class FeatureProvider
{
public:
  virtual ~FeatureProvider() = default;
  virtual std::size_t dim() const = 0;
  /// Features for frame `index` whose true gravity is `g_star`.
  virtual std::vector<double> features(std::size_t index, const UnitVec3& g_star) = 0;
};

/// f = s·(A·g* + b + η) on the informative coordinates, s·η on the
/// distractor coordinates. A and b come from their own seed so that every
/// split shares the same embedding.
class SyntheticLinearFeatures : public FeatureProvider
{
public:
  SyntheticLinearFeatures(int dim, int distractor_dims, double noise_sigma, std::uint64_t embedding_seed,
                          std::uint64_t noise_seed, double scale = 1.0)
    : m_dim(dim), m_informative(dim - distractor_dims), m_sigma(noise_sigma), m_scale(scale), m_rng(noise_seed)
  {
    if (dim <= 0 || distractor_dims < 0 || distractor_dims >= dim || noise_sigma < 0.0 || !(scale > 0.0))
      throw Error(ErrorKind::InvalidArgument, "invalid synthetic feature layout");
    std::mt19937_64 emb(embedding_seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    m_a.resize(3 * static_cast<std::size_t>(m_informative));
    for (double& v : m_a)
      v = n01(emb);
    m_b.resize(m_informative);
    for (double& v : m_b)
      v = 0.5 * n01(emb);
  }

  std::size_t dim() const override { return static_cast<std::size_t>(m_dim); }

  std::vector<double> features(std::size_t, const UnitVec3& g) override
  {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> f(m_dim);
    for (int i = 0; i < m_informative; ++i)
    {
      const double* a = &m_a[3 * static_cast<std::size_t>(i)];
      f[i] = m_scale * (a[0] * g.x() + a[1] * g.y() + a[2] * g.z() + m_b[i] + m_sigma * n01(m_rng));
    }
    for (int i = m_informative; i < m_dim; ++i)
      f[i] = m_scale * n01(m_rng);
    return f;
  }

private:
  int m_dim;
  int m_informative;
  double m_sigma;
  double m_scale;
  std::mt19937_64 m_rng;
  std::vector<double> m_a;  // informative x 3
  std::vector<double> m_b;
};

/// Precomputed features read from a dataset CSV.
class FileFeatures : public FeatureProvider
{
public:
  explicit FileFeatures(std::vector<std::vector<double>> rows) : m_rows(std::move(rows))
  {
    for (const auto& r : m_rows)
      if (r.size() != dim())
        throw Error(ErrorKind::ShapeMismatch, "feature rows differ in length");
  }

  std::size_t dim() const override { return m_rows.empty() ? 0 : m_rows.front().size(); }

  std::vector<double> features(std::size_t index, const UnitVec3&) override
  {
    if (index >= m_rows.size())
      throw Error(ErrorKind::InvalidArgument, "feature index out of range");
    return m_rows[index];
  }

private:
  std::vector<std::vector<double>> m_rows;
};

struct DriftMode
{
  double weight{1.0};
  double mean_deg{0.0};
  double std_deg{0.0};
};

struct SynthConfig
{
  int C{64};
  int n_train{20000};
  int n_val{4000};
  double feature_noise_sigma{0.3};
  double feature_scale{0.1};  // keeps initial head outputs small
  int distractor_dims{16};
  std::vector<DriftMode> drift_mixture{{0.6, 8.0, 4.0}, {0.3, 25.0, 8.0}, {0.1, 50.0, 15.0}};
  std::uint64_t seed{42};
};

inline double mixture_mean_deg(const std::vector<DriftMode>& modes)
{
  double m = 0.0;
  for (const auto& d : modes)
    m += d.weight * d.mean_deg;
  return m;
}

inline void validate(const SynthConfig& c)
{
  if (c.C <= 0 || c.n_train <= 0 || c.n_val <= 0 || c.feature_noise_sigma < 0.0 || !(c.feature_scale > 0.0) ||
      c.distractor_dims < 0 ||
      c.distractor_dims >= c.C || c.drift_mixture.empty())
    throw Error(ErrorKind::InvalidArgument, "invalid synthetic data configuration");
  double w = 0.0;
  for (const auto& d : c.drift_mixture)
  {
    if (d.weight < 0.0 || d.std_deg < 0.0)
      throw Error(ErrorKind::InvalidArgument, "drift mode weights and spreads must be non-negative");
    w += d.weight;
  }
  if (std::abs(w - 1.0) > 1e-9)
    throw Error(ErrorKind::InvalidArgument, "drift mixture weights must sum to 1");
}

inline UnitVec3 random_unit(std::mt19937_64& rng)
{
  std::normal_distribution<double> n01(0.0, 1.0);
  while (true)
  {
    const Vec3 v{n01(rng), n01(rng), n01(rng)};
    if (norm(v) > 1e-6)
      return normalize(v);
  }
}

/// Unit vector orthogonal to `g`, uniformly distributed on that great circle.
inline UnitVec3 random_orthogonal(const UnitVec3& g, std::mt19937_64& rng)
{
  while (true)
  {
    const Vec3 c = cross(g.vec(), random_unit(rng).vec());
    if (norm(c) > 1e-6)
      return normalize(c);
  }
}

/// Rotates g by `angle_deg` about a random axis orthogonal to it, so the
/// result sits exactly that far from g.
inline UnitVec3 drift_direction(const UnitVec3& g, double angle_deg, std::mt19937_64& rng)
{
  const UnitVec3 axis = random_orthogonal(g, rng);
  const Rot3 r = quat_to_rot(quat_from_axis_angle(axis.vec(), deg_to_rad(angle_deg)));
  return normalize(r * g.vec());
}

struct SynthData
{
  Dataset train;
  Dataset val;
};

namespace detail
{

inline Dataset synth_split(int n, FeatureProvider& features, const std::vector<DriftMode>& mixture,
                           std::mt19937_64& rng)
{
  std::vector<double> weights;
  for (const auto& d : mixture)
    weights.push_back(d.weight);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::normal_distribution<double> n01(0.0, 1.0);

  Dataset out;
  out.reserve(n);
  for (int i = 0; i < n; ++i)
  {
    Sample s;
    s.g_star = random_unit(rng);
    const DriftMode& mode = mixture[pick(rng)];
    const double angle = std::min(180.0, std::abs(mode.mean_deg + mode.std_deg * n01(rng)));
    s.g_prior = drift_direction(s.g_star, angle, rng);
    s.prior_error_deg = angle_deg(s.g_prior, s.g_star);
    // Dynamic acceleration grows with the drift it causes, with spread.
    s.nongravity_ratio = 0.01 * angle * std::exp(0.3 * n01(rng));
    s.f = features.features(static_cast<std::size_t>(i), s.g_star);
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace detail

/// Desk-scale stand-in for a labelled image dataset.
inline SynthData make_synth(const SynthConfig& cfg)
{
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  const std::uint64_t embedding_seed = rng();
  const std::uint64_t noise_seed = rng();
  SyntheticLinearFeatures features(cfg.C, cfg.distractor_dims, cfg.feature_noise_sigma, embedding_seed, noise_seed,
                                   cfg.feature_scale);
  SynthData data;
  data.train = detail::synth_split(cfg.n_train, features, cfg.drift_mixture, rng);
  data.val = detail::synth_split(cfg.n_val, features, cfg.drift_mixture, rng);
  return data;
}

// --- dataset files -----------------------------------------------------------

inline void write_dataset_csv(const Dataset& data, const std::filesystem::path& path)
{
  auto out = csv::open_output(path);
  out << "g_star_x,g_star_y,g_star_z,g_prior_x,g_prior_y,g_prior_z,prior_error_deg,nongravity_ratio";
  const std::size_t c = data.empty() ? 0 : data.front().f.size();
  for (std::size_t i = 0; i < c; ++i)
    out << ",f" << i;
  out << '\n';
  for (const auto& s : data)
  {
    std::vector<double> row{s.g_star.x(),  s.g_star.y(),  s.g_star.z(),          s.g_prior.x(),
                            s.g_prior.y(), s.g_prior.z(), s.prior_error_deg, s.nongravity_ratio};
    row.insert(row.end(), s.f.begin(), s.f.end());
    out << csv::join(row) << '\n';
  }
}

inline Dataset read_dataset_csv(const std::filesystem::path& path)
{
  std::vector<std::string> header;
  const auto rows = csv::read_numeric(path, 9, 1u << 20, &header);
  Dataset data;
  std::vector<std::vector<double>> features;
  for (const auto& row : rows)
  {
    const auto& v = row.values;
    if (!features.empty() && v.size() != 8 + features.front().size())
      throw MalformedRowError(path.string(), row.line, "feature width differs from earlier rows");
    Sample s;
    try
    {
      s.g_star = UnitVec3::checked(v[0], v[1], v[2]);
      s.g_prior = UnitVec3::checked(v[3], v[4], v[5]);
    }
    catch (const Error& e)
    {
      throw MalformedRowError(path.string(), row.line, e.what());
    }
    s.prior_error_deg = v[6];
    s.nongravity_ratio = v[7];
    features.emplace_back(v.begin() + 8, v.end());
    data.push_back(std::move(s));
  }
  FileFeatures provider(std::move(features));
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i].f = provider.features(i, data[i].g_star);
  return data;
}

// --- training ----------------------------------------------------------------

/// Aggregate quality of the model over a dataset.
struct EvalStats
{
  LossBreakdown loss;
  double err_pred_deg{0.0};
  double err_corr_deg{0.0};
  double err_img_deg{0.0};
  double err_prior_deg{0.0};
  double mean_tau{0.0};
};

inline EvalStats evaluate(const CalibratorParams& params, const Dataset& data, const LossWeights& w)
{
  if (data.empty())
    throw Error(ErrorKind::EmptyInput, "cannot evaluate on an empty dataset");
  EvalStats s;
  std::vector<LossBreakdown> terms;
  terms.reserve(data.size());
  for (const auto& sample : data)
  {
    const auto cache = forward(params, sample.f, sample.g_prior);
    const auto& out = cache.out;
    terms.push_back(loss_terms(out, sample.g_star, oracle_tau(sample.prior_error_deg)));
    s.err_pred_deg += angle_deg(out.g_pred, sample.g_star);
    s.err_corr_deg += angle_deg(out.g_corr, sample.g_star);
    s.err_img_deg += angle_deg(out.g_img, sample.g_star);
    s.err_prior_deg += angle_deg(sample.g_prior, sample.g_star);
    s.mean_tau += out.tau;
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  s.loss = total_loss(terms, w);
  s.err_pred_deg *= inv;
  s.err_corr_deg *= inv;
  s.err_img_deg *= inv;
  s.err_prior_deg *= inv;
  s.mean_tau *= inv;
  return s;
}

struct EpochRecord
{
  int epoch{0};
  double lr{0.0};
  LossBreakdown train;
  EvalStats val;
};

using History = std::vector<EpochRecord>;

/// Samples per gradient chunk. Chunks are reduced in index order, so the
/// batch gradient does not depend on the thread count.
inline constexpr std::size_t kGradChunk = 16;

struct BatchResult
{
  LossBreakdown loss;
};

/// Mean-loss gradient of a minibatch, accumulated into `grads` (zeroed first).
inline BatchResult batch_gradient(const CalibratorParams& params, const Dataset& data,
                                  std::span<const std::size_t> indices, const LossWeights& w, GradientSet& grads,
                                  std::vector<GradientSet>& chunk_buffers, int threads)
{
  const std::size_t n = indices.size();
  if (n == 0)
    throw Error(ErrorKind::EmptyBatch, "empty minibatch");
  const std::size_t chunks = (n + kGradChunk - 1) / kGradChunk;
  while (chunk_buffers.size() < chunks)
    chunk_buffers.emplace_back(params.dims());
  std::vector<LossBreakdown> terms(n);
  const TermWeights tw = TermWeights::from(w);
  const double scale = 1.0 / static_cast<double>(n);

  auto run_chunk = [&](std::size_t k) {
    GradientSet& g = chunk_buffers[k];
    g.set_zero();
    const std::size_t end = std::min(n, (k + 1) * kGradChunk);
    for (std::size_t j = k * kGradChunk; j < end; ++j)
    {
      const Sample& s = data[indices[j]];
      const double tau_star = oracle_tau(s.prior_error_deg);
      const auto cache = forward(params, s.f, s.g_prior);
      terms[j] = loss_terms(cache.out, s.g_star, tau_star);
      backward(params, cache, loss_output_grads(cache.out, s.g_star, tau_star, tw, scale), g);
    }
  };

  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || chunks == 1)
  {
    for (std::size_t k = 0; k < chunks; ++k)
      run_chunk(k);
  }
  else
  {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(workers, chunks); ++t)
      pool.emplace_back([&, t] {
        for (std::size_t k = t; k < chunks; k += workers)
          run_chunk(k);
      });
    for (auto& th : pool)
      th.join();
  }

  grads.set_zero();
  for (std::size_t k = 0; k < chunks; ++k)
    grads += chunk_buffers[k];
  return {total_loss(terms, w)};
}

inline void clip_global_norm(GradientSet& grads, double max_norm)
{
  if (max_norm <= 0.0)
    return;
  double sq = 0.0;
  for (double g : grads.values())
    sq += g * g;
  const double n = std::sqrt(sq);
  if (n > max_norm)
    grads *= max_norm / n;
}

/// Epochs of shuffled minibatches with Adam and a cosine schedule.
/// `on_epoch` (optional) sees each history row as it is produced.
inline History train_loop(CalibratorParams& params, const Dataset& train, const Dataset& val, const LossWeights& w,
                          const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {})
{
  validate(cfg);
  if (train.empty())
    throw Error(ErrorKind::EmptyInput, "training set is empty");

  History history;
  AdamState adam(params.size());
  GradientSet grads(params.dims());
  std::vector<GradientSet> chunk_buffers;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t batch = static_cast<std::size_t>(cfg.batch);
  const std::size_t steps_per_epoch = (train.size() + batch - 1) / batch;
  const double total_steps = static_cast<double>(steps_per_epoch) * cfg.epochs;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch)
  {
    std::shuffle(order.begin(), order.end(), rng);
    const double epoch_lr = cosine_lr(cfg.lr_heads, epoch, cfg.epochs);
    LossBreakdown acc;
    double weight_sum = 0.0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step)
    {
      const std::size_t begin = step * batch;
      const std::size_t end = std::min(train.size(), begin + batch);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const auto res = batch_gradient(params, train, idx, w, grads, chunk_buffers, cfg.threads);
      clip_global_norm(grads, cfg.clip_norm);
      const double lr = cfg.lr_step == LrStep::Epoch
                          ? epoch_lr
                          : cosine_lr(cfg.lr_heads, static_cast<double>(epoch * steps_per_epoch + step), total_steps);
      adam_step(params, grads, adam, lr, cfg);

      const double bw = static_cast<double>(idx.size());
      acc.main += bw * res.loss.main;
      acc.delta += bw * res.loss.delta;
      acc.tau += bw * res.loss.tau;
      acc.img += bw * res.loss.img;
      weight_sum += bw;
    }
    acc.main /= weight_sum;
    acc.delta /= weight_sum;
    acc.tau /= weight_sum;
    acc.img /= weight_sum;
    acc.total = weighted_total(acc, w);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = epoch_lr;
    rec.train = acc;
    if (!val.empty())
      rec.val = evaluate(params, val, w);
    history.push_back(rec);
    if (on_epoch)
      on_epoch(rec);
  }
  return history;
}

inline constexpr const char* kHistoryHeader =
  "epoch,lr,train_main,train_delta,train_tau,train_img,train_total,val_main,val_delta,val_tau,val_img,val_total,"
  "val_err_pred_deg,val_err_corr_deg,val_err_img_deg,val_err_prior_deg,val_mean_tau";

inline std::string history_row(const EpochRecord& r)
{
  return std::to_string(r.epoch) + "," +
         csv::join({r.lr, r.train.main, r.train.delta, r.train.tau, r.train.img, r.train.total, r.val.loss.main,
                    r.val.loss.delta, r.val.loss.tau, r.val.loss.img, r.val.loss.total, r.val.err_pred_deg,
                    r.val.err_corr_deg, r.val.err_img_deg, r.val.err_prior_deg, r.val.mean_tau});
}

inline void write_history_csv(const History& h, const std::filesystem::path& path)
{
  auto out = csv::open_output(path);
  out << kHistoryHeader << '\n';
  for (const auto& r : h)
    out << history_row(r) << '\n';
}

} // namespace gravprior
