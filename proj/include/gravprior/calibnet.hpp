/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include "gravprior/binio.hpp"
#include "gravprior/error.hpp"
#include "gravprior/geom3.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gravprior
{

/// Largest residual rotation the correction head can emit (45 degrees).
inline constexpr double kDeltaMax = std::numbers::pi / 4.0;

/// Initial bias of the gate logit, σ(-3) ≈ 0.047.
inline constexpr double kTauLogitBias = -3.0;

enum class Activation : std::uint32_t
{
  Tanh = 0,
  Relu = 1,
};

struct NetDims
{
  int C{64};        // feature width
  int H_prior{32};  // PriorMLP hidden width
  int H_head{64};   // shared delta/tau head hidden width
  int H_img{64};    // image-only head hidden width
  Activation prior_act{Activation::Tanh};
  Activation head_act{Activation::Relu};
  Activation img_act{Activation::Relu};

  friend bool operator==(const NetDims&, const NetDims&) = default;
};

inline void validate(const NetDims& d)
{
  if (d.C <= 0 || d.H_prior <= 0 || d.H_head <= 0 || d.H_img <= 0)
    throw Error(ErrorKind::InvalidArgument, "network dimensions must be positive");
}

/// Parameter blocks in declaration (and checkpoint) order. Weights are
/// row-major (out x in).
enum class Block : int
{
  PriorW1,  // H_prior x 3
  PriorB1,  // H_prior
  PriorW2,  // 2C x H_prior  (rows [0, C) -> gamma offset, [C, 2C) -> beta)
  PriorB2,  // 2C
  HeadW1,   // H_head x C
  HeadB1,   // H_head
  HeadW2,   // 3 x H_head    (rows: delta_x, delta_y, tau logit)
  HeadB2,   // 3
  ImgW1,    // H_img x C
  ImgB1,    // H_img
  ImgW2,    // 3 x H_img
  ImgB2,    // 3
};
inline constexpr int kBlockCount = 12;

inline std::array<std::size_t, kBlockCount> block_sizes(const NetDims& d)
{
  const auto C = static_cast<std::size_t>(d.C);
  const auto hp = static_cast<std::size_t>(d.H_prior);
  const auto hh = static_cast<std::size_t>(d.H_head);
  const auto hi = static_cast<std::size_t>(d.H_img);
  return {hp * 3, hp, 2 * C * hp, 2 * C, hh * C, hh, 3 * hh, 3, hi * C, hi, 3 * hi, 3};
}

/// Flat parameter (or gradient) storage with typed views per block.
class ParamVector
{
public:
  ParamVector() = default;

  explicit ParamVector(const NetDims& dims) : m_dims(dims)
  {
    validate(dims);
    const auto sizes = block_sizes(dims);
    std::size_t off = 0;
    for (int b = 0; b < kBlockCount; ++b)
    {
      m_offsets[b] = off;
      off += sizes[b];
    }
    m_offsets[kBlockCount] = off;
    m_values.assign(off, 0.0);
  }

  const NetDims& dims() const { return m_dims; }
  std::size_t size() const { return m_values.size(); }

  std::span<double> values() { return m_values; }
  std::span<const double> values() const { return m_values; }

  std::span<double> block(Block b)
  {
    const auto i = static_cast<int>(b);
    return std::span<double>(m_values).subspan(m_offsets[i], m_offsets[i + 1] - m_offsets[i]);
  }
  std::span<const double> block(Block b) const
  {
    const auto i = static_cast<int>(b);
    return std::span<const double>(m_values).subspan(m_offsets[i], m_offsets[i + 1] - m_offsets[i]);
  }

  void set_zero() { std::fill(m_values.begin(), m_values.end(), 0.0); }

  ParamVector& operator+=(const ParamVector& o)
  {
    if (o.size() != size())
      throw Error(ErrorKind::ShapeMismatch, "parameter vectors differ in size");
    for (std::size_t i = 0; i < m_values.size(); ++i)
      m_values[i] += o.m_values[i];
    return *this;
  }

  ParamVector& operator*=(double s)
  {
    for (double& v : m_values)
      v *= s;
    return *this;
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

private:
  NetDims m_dims;
  std::array<std::size_t, kBlockCount + 1> m_offsets{};
  std::vector<double> m_values;
};

using CalibratorParams = ParamVector;
using GradientSet = ParamVector;

/// Xavier-uniform weights, zero biases; PriorMLP output layer zeroed so FiLM
/// starts as the identity; gate logit bias -3 with its weight row zeroed.
inline CalibratorParams init_params(const NetDims& dims, std::uint64_t seed)
{
  CalibratorParams p(dims);
  std::mt19937_64 rng(seed);
  auto xavier = [&](std::span<double> w, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (double& v : w)
      v = dist(rng);
  };
  xavier(p.block(Block::PriorW1), 3, dims.H_prior);
  xavier(p.block(Block::HeadW1), dims.C, dims.H_head);
  xavier(p.block(Block::HeadW2), dims.H_head, 3);
  xavier(p.block(Block::ImgW1), dims.C, dims.H_img);
  xavier(p.block(Block::ImgW2), dims.H_img, 3);

  auto head_w2 = p.block(Block::HeadW2);
  std::fill(head_w2.begin() + 2 * dims.H_head, head_w2.end(), 0.0);
  p.block(Block::HeadB2)[2] = kTauLogitBias;
  return p;
}

// --- small dense helpers ----------------------------------------------------

namespace nn
{

inline double sigmoid(double x)
{
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double activate(Activation a, double x) { return a == Activation::Tanh ? std::tanh(x) : (x > 0.0 ? x : 0.0); }

/// d act / d pre, written in terms of the pre-activation and its output.
inline double activate_grad(Activation a, double pre, double out)
{
  return a == Activation::Tanh ? 1.0 - out * out : (pre > 0.0 ? 1.0 : 0.0);
}

/// y = W x + b, W is rows x cols.
inline void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y)
{
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < y.size(); ++r)
  {
    const double* row = w.data() + r * cols;
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c)
      acc += row[c] * x[c];
    y[r] = acc;
  }
}

/// dW += dy xᵀ, db += dy, and (optionally) dx = Wᵀ dy.
inline void affine_backward(std::span<const double> w, std::span<const double> x, std::span<const double> dy,
                            std::span<double> dw, std::span<double> db, std::span<double> dx)
{
  const std::size_t cols = x.size();
  if (!dx.empty())
    std::fill(dx.begin(), dx.end(), 0.0);
  for (std::size_t r = 0; r < dy.size(); ++r)
  {
    const double g = dy[r];
    db[r] += g;
    if (g == 0.0)
      continue;
    double* drow = dw.data() + r * cols;
    const double* row = w.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c)
      drow[c] += g * x[c];
    if (!dx.empty())
      for (std::size_t c = 0; c < cols; ++c)
        dx[c] += g * row[c];
  }
}

inline Vec3 to_vec3(std::span<const double> v) { return {v[0], v[1], v[2]}; }

/// Backward of n = v / ||v||: (I - n nᵀ) g / ||v||.
inline Vec3 normalize_backward(const Vec3& n, double length, const Vec3& grad)
{
  return (1.0 / length) * (grad - dot(n, grad) * n);
}

} // namespace nn

// --- forward pieces ---------------------------------------------------------

struct FilmOutput
{
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> f_tilde;
};

inline void check_features(const CalibratorParams& params, std::span<const double> f)
{
  if (f.size() != static_cast<std::size_t>(params.dims().C))
    throw Error(ErrorKind::ShapeMismatch, "feature length " + std::to_string(f.size()) + " != C = " +
                                              std::to_string(params.dims().C));
}

/// (γ, β) = PriorMLP(ĝ) with γ = 1 + offset; f̃ = γ ⊙ f + β.
inline FilmOutput film_condition(const CalibratorParams& params, std::span<const double> f, const UnitVec3& g_hat)
{
  check_features(params, f);
  const auto& d = params.dims();
  const std::array<double, 3> g{g_hat.x(), g_hat.y(), g_hat.z()};
  std::vector<double> hidden(d.H_prior);
  nn::affine(params.block(Block::PriorW1), params.block(Block::PriorB1), g, hidden);
  for (double& h : hidden)
    h = nn::activate(d.prior_act, h);
  std::vector<double> mod(2 * d.C);
  nn::affine(params.block(Block::PriorW2), params.block(Block::PriorB2), hidden, mod);

  FilmOutput out;
  out.gamma.resize(d.C);
  out.beta.resize(d.C);
  out.f_tilde.resize(d.C);
  for (int i = 0; i < d.C; ++i)
  {
    out.gamma[i] = 1.0 + mod[i];
    out.beta[i] = mod[d.C + i];
    out.f_tilde[i] = out.gamma[i] * f[i] + out.beta[i];
  }
  return out;
}

struct HeadsOutput
{
  EulerDelta delta;
  double tau{0.0};
  UnitVec3 g_img = UnitVec3::unit_z();
};

/// δ = δ_max·tanh(h₁,₂), τ = σ(h₃) from the conditioned features; the image
/// head reads the unconditioned features.
inline HeadsOutput heads_forward(const CalibratorParams& params, std::span<const double> f_tilde,
                                 std::span<const double> f)
{
  check_features(params, f);
  check_features(params, f_tilde);
  const auto& d = params.dims();

  std::vector<double> hh(d.H_head);
  nn::affine(params.block(Block::HeadW1), params.block(Block::HeadB1), f_tilde, hh);
  for (double& v : hh)
    v = nn::activate(d.head_act, v);
  std::array<double, 3> h{};
  nn::affine(params.block(Block::HeadW2), params.block(Block::HeadB2), hh, h);

  std::vector<double> hi(d.H_img);
  nn::affine(params.block(Block::ImgW1), params.block(Block::ImgB1), f, hi);
  for (double& v : hi)
    v = nn::activate(d.img_act, v);
  std::array<double, 3> z{};
  nn::affine(params.block(Block::ImgW2), params.block(Block::ImgB2), hi, z);

  HeadsOutput out;
  out.delta = {kDeltaMax * std::tanh(h[0]), kDeltaMax * std::tanh(h[1])};
  out.tau = nn::sigmoid(h[2]);
  out.g_img = normalize(nn::to_vec3(z));
  return out;
}

/// normalize(R_y(δy)·R_x(δx)·ĝ)
inline UnitVec3 apply_correction(const UnitVec3& g_hat, const EulerDelta& delta)
{
  const Rot3 r = euler_rot(Axis::Y, delta.delta_y) * euler_rot(Axis::X, delta.delta_x);
  return normalize(r * g_hat.vec());
}

/// normalize(τ·g_img + (1-τ)·g_corr). Endpoints return the branch exactly.
inline UnitVec3 fuse(double tau, const UnitVec3& g_img, const UnitVec3& g_corr)
{
  if (!(tau >= 0.0 && tau <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "tau outside [0, 1]");
  if (tau == 0.0)
    return g_corr;
  if (tau == 1.0)
    return g_img;
  return normalize(tau * g_img.vec() + (1.0 - tau) * g_corr.vec());
}

struct ForwardOutput
{
  UnitVec3 g_pred = UnitVec3::unit_z();
  UnitVec3 g_corr = UnitVec3::unit_z();
  UnitVec3 g_img = UnitVec3::unit_z();
  double tau{0.0};
  EulerDelta delta;
  std::vector<double> gamma;
  std::vector<double> beta;
};

/// Intermediates kept for the reverse pass.
struct ForwardCache
{
  std::vector<double> f;
  UnitVec3 g_hat = UnitVec3::unit_z();
  std::array<double, 3> g_in{};
  std::vector<double> prior_pre, prior_h;
  std::vector<double> f_tilde;
  std::vector<double> head_pre, head_h;
  std::array<double, 3> h{};
  std::vector<double> img_pre, img_h;
  Vec3 z;
  double z_norm{0.0};
  Vec3 v;
  double v_norm{0.0};
  Vec3 w;
  double w_norm{0.0};
  bool tau_forced{false};
  ForwardOutput out;
};

/// Full pass: FiLM -> heads -> correction -> gated fusion. `tau_override`
/// pins the gate (0: IMU-only ablation, 1: image-only ablation).
inline ForwardCache forward(const CalibratorParams& params, std::span<const double> f, const UnitVec3& g_hat,
                            std::optional<double> tau_override = std::nullopt)
{
  check_features(params, f);
  const auto& d = params.dims();
  ForwardCache c;
  c.f.assign(f.begin(), f.end());
  c.g_hat = g_hat;
  c.g_in = {g_hat.x(), g_hat.y(), g_hat.z()};

  // PriorMLP + FiLM.
  c.prior_pre.resize(d.H_prior);
  c.prior_h.resize(d.H_prior);
  nn::affine(params.block(Block::PriorW1), params.block(Block::PriorB1), c.g_in, c.prior_pre);
  for (int i = 0; i < d.H_prior; ++i)
    c.prior_h[i] = nn::activate(d.prior_act, c.prior_pre[i]);
  std::vector<double> mod(2 * d.C);
  nn::affine(params.block(Block::PriorW2), params.block(Block::PriorB2), c.prior_h, mod);
  c.out.gamma.resize(d.C);
  c.out.beta.resize(d.C);
  c.f_tilde.resize(d.C);
  for (int i = 0; i < d.C; ++i)
  {
    c.out.gamma[i] = 1.0 + mod[i];
    c.out.beta[i] = mod[d.C + i];
    c.f_tilde[i] = c.out.gamma[i] * f[i] + c.out.beta[i];
  }

  // Correction / gate head.
  c.head_pre.resize(d.H_head);
  c.head_h.resize(d.H_head);
  nn::affine(params.block(Block::HeadW1), params.block(Block::HeadB1), c.f_tilde, c.head_pre);
  for (int i = 0; i < d.H_head; ++i)
    c.head_h[i] = nn::activate(d.head_act, c.head_pre[i]);
  nn::affine(params.block(Block::HeadW2), params.block(Block::HeadB2), c.head_h, c.h);
  c.out.delta = {kDeltaMax * std::tanh(c.h[0]), kDeltaMax * std::tanh(c.h[1])};
  c.out.tau = nn::sigmoid(c.h[2]);
  if (tau_override)
  {
    if (!(*tau_override >= 0.0 && *tau_override <= 1.0))
      throw Error(ErrorKind::InvalidArgument, "tau override outside [0, 1]");
    c.out.tau = *tau_override;
    c.tau_forced = true;
  }

  // Image-only head on the unconditioned features.
  c.img_pre.resize(d.H_img);
  c.img_h.resize(d.H_img);
  nn::affine(params.block(Block::ImgW1), params.block(Block::ImgB1), f, c.img_pre);
  for (int i = 0; i < d.H_img; ++i)
    c.img_h[i] = nn::activate(d.img_act, c.img_pre[i]);
  std::array<double, 3> z{};
  nn::affine(params.block(Block::ImgW2), params.block(Block::ImgB2), c.img_h, z);
  c.z = nn::to_vec3(z);
  c.z_norm = norm(c.z);
  c.out.g_img = normalize(c.z);

  // Residual rotation of the prior.
  c.v = euler_rot(Axis::Y, c.out.delta.delta_y) * (euler_rot(Axis::X, c.out.delta.delta_x) * g_hat.vec());
  c.v_norm = norm(c.v);
  c.out.g_corr = normalize(c.v);

  // Gated fusion.
  const double tau = c.out.tau;
  c.w = tau * c.out.g_img.vec() + (1.0 - tau) * c.out.g_corr.vec();
  c.w_norm = norm(c.w);
  c.out.g_pred = normalize(c.w);
  return c;
}

/// Upstream gradients of a scalar loss with respect to the forward outputs.
struct OutputGrads
{
  Vec3 g_pred;
  Vec3 g_corr;
  Vec3 g_img;
  double tau{0.0};
  double delta_x{0.0};
  double delta_y{0.0};
};

/// Reverse pass; accumulates (+=) parameter gradients into `grads`. The prior
/// ĝ is an input, so nothing flows back into it.
inline void backward(const CalibratorParams& params, const ForwardCache& c, const OutputGrads& up, GradientSet& grads)
{
  const auto& d = params.dims();
  if (grads.size() != params.size())
    throw Error(ErrorKind::ShapeMismatch, "gradient set does not match parameters");
  const double tau = c.out.tau;
  const Vec3& g_img = c.out.g_img.vec();
  const Vec3& g_corr = c.out.g_corr.vec();

  // Fusion.
  const Vec3 dw = nn::normalize_backward(c.out.g_pred.vec(), c.w_norm, up.g_pred);
  double dtau = up.tau + dot(dw, g_img - g_corr);
  const Vec3 dg_img = up.g_img + tau * dw;
  const Vec3 dg_corr = up.g_corr + (1.0 - tau) * dw;

  // Correction rotation: v = Ry(δy) Rx(δx) ĝ.
  const Vec3 dv = nn::normalize_backward(g_corr, c.v_norm, dg_corr);
  const double ax = c.out.delta.delta_x, ay = c.out.delta.delta_y;
  const double cx = std::cos(ax), sx = std::sin(ax), cy = std::cos(ay), sy = std::sin(ay);
  const Vec3& g = c.g_hat.vec();
  const Vec3 rx_g{g.x, cx * g.y - sx * g.z, sx * g.y + cx * g.z};
  const Vec3 drx_g{0.0, -sx * g.y - cx * g.z, cx * g.y - sx * g.z};
  const Rot3 ry = euler_rot(Axis::Y, ay);
  const Vec3 dv_ddx = ry * drx_g;
  const Vec3 dv_ddy{-sy * rx_g.x + cy * rx_g.z, 0.0, -cy * rx_g.x - sy * rx_g.z};
  const double ddx = up.delta_x + dot(dv, dv_ddx);
  const double ddy = up.delta_y + dot(dv, dv_ddy);

  // Head output layer.
  std::array<double, 3> dh{};
  dh[0] = ddx * kDeltaMax * (1.0 - std::tanh(c.h[0]) * std::tanh(c.h[0]));
  dh[1] = ddy * kDeltaMax * (1.0 - std::tanh(c.h[1]) * std::tanh(c.h[1]));
  dh[2] = c.tau_forced ? 0.0 : dtau * tau * (1.0 - tau);

  std::vector<double> dhh(d.H_head);
  nn::affine_backward(params.block(Block::HeadW2), c.head_h, dh, grads.block(Block::HeadW2),
                      grads.block(Block::HeadB2), dhh);
  for (int i = 0; i < d.H_head; ++i)
    dhh[i] *= nn::activate_grad(d.head_act, c.head_pre[i], c.head_h[i]);
  std::vector<double> dft(d.C);
  nn::affine_backward(params.block(Block::HeadW1), c.f_tilde, dhh, grads.block(Block::HeadW1),
                      grads.block(Block::HeadB1), dft);

  // FiLM: f̃ = (1 + m_γ) ⊙ f + m_β.
  std::vector<double> dmod(2 * d.C);
  for (int i = 0; i < d.C; ++i)
  {
    dmod[i] = dft[i] * c.f[i];
    dmod[d.C + i] = dft[i];
  }
  std::vector<double> dph(d.H_prior);
  nn::affine_backward(params.block(Block::PriorW2), c.prior_h, dmod, grads.block(Block::PriorW2),
                      grads.block(Block::PriorB2), dph);
  for (int i = 0; i < d.H_prior; ++i)
    dph[i] *= nn::activate_grad(d.prior_act, c.prior_pre[i], c.prior_h[i]);
  nn::affine_backward(params.block(Block::PriorW1), c.g_in, dph, grads.block(Block::PriorW1),
                      grads.block(Block::PriorB1), {});

  // Image head.
  const Vec3 dz = nn::normalize_backward(g_img, c.z_norm, dg_img);
  const std::array<double, 3> dz_arr{dz.x, dz.y, dz.z};
  std::vector<double> dhi(d.H_img);
  nn::affine_backward(params.block(Block::ImgW2), c.img_h, dz_arr, grads.block(Block::ImgW2),
                      grads.block(Block::ImgB2), dhi);
  for (int i = 0; i < d.H_img; ++i)
    dhi[i] *= nn::activate_grad(d.img_act, c.img_pre[i], c.img_h[i]);
  nn::affine_backward(params.block(Block::ImgW1), c.f, dhi, grads.block(Block::ImgW1), grads.block(Block::ImgB1),
                      {});
}

// --- checkpoint -------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "GCKP", u32 version, NetDims (4 x u32 widths, 3 x u32 activations),
/// u64 parameter count, then f64 values in block order. Little-endian.
inline void save_checkpoint(const CalibratorParams& params, const std::filesystem::path& path)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorKind::MissingFile, "cannot write " + path.string());
  const auto& d = params.dims();
  binio::put_magic(out, "GCKP");
  binio::put_u32(out, kCheckpointVersion);
  for (int v : {d.C, d.H_prior, d.H_head, d.H_img})
    binio::put_u32(out, static_cast<std::uint32_t>(v));
  for (Activation a : {d.prior_act, d.head_act, d.img_act})
    binio::put_u32(out, static_cast<std::uint32_t>(a));
  binio::put_u64(out, params.size());
  for (double v : params.values())
    binio::put_f64(out, v);
}

inline CalibratorParams load_checkpoint(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
  binio::expect_magic(in, "GCKP", path.string());
  const auto version = binio::get_u32(in);
  if (version != kCheckpointVersion)
    throw Error(ErrorKind::MalformedRow, path.string() + ": unsupported checkpoint version " + std::to_string(version));
  NetDims d;
  d.C = static_cast<int>(binio::get_u32(in));
  d.H_prior = static_cast<int>(binio::get_u32(in));
  d.H_head = static_cast<int>(binio::get_u32(in));
  d.H_img = static_cast<int>(binio::get_u32(in));
  auto act = [&] {
    const auto v = binio::get_u32(in);
    if (v > 1)
      throw Error(ErrorKind::MalformedRow, path.string() + ": unknown activation code");
    return static_cast<Activation>(v);
  };
  d.prior_act = act();
  d.head_act = act();
  d.img_act = act();
  CalibratorParams p(d);
  const auto count = binio::get_u64(in);
  if (count != p.size())
    throw Error(ErrorKind::MalformedRow, path.string() + ": parameter count does not match dimensions");
  for (double& v : p.values())
    v = binio::get_f64(in);
  return p;
}

} // namespace gravprior
