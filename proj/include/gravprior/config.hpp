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
#include "gravprior/losses.hpp"
#include "gravprior/trainer.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gravprior
{

/// Everything the synth/train pipeline can be configured with.
struct RunConfig
{
  SynthConfig synth;
  TrainConfig train;
  NetDims dims;
  LossWeights weights;
  std::uint64_t init_seed{1};
};

/// Ordered key -> value settings. Later assignments win.
using Settings = std::map<std::string, std::string>;

/// `key = value`, `key: value` or `key value`, one per line; '#' starts a
/// comment. Keys may use '-' or '_' interchangeably.
inline Settings parse_settings(std::string_view text, const std::string& origin = "config")
{
  Settings out;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size())
  {
    const std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = csv::trim(line);
    if (line.empty())
      continue;
    std::size_t sep = line.find_first_of("=:");
    if (sep == std::string_view::npos)
      sep = line.find_first_of(" \t");
    if (sep == std::string_view::npos)
      throw MalformedRowError(origin, lineno, "expected 'key = value'");
    std::string key(csv::trim(line.substr(0, sep)));
    const std::string value(csv::trim(line.substr(sep + 1)));
    std::replace(key.begin(), key.end(), '-', '_');
    if (key.empty() || value.empty())
      throw MalformedRowError(origin, lineno, "expected 'key = value'");
    out[key] = value;
  }
  return out;
}

inline Settings read_settings(const std::filesystem::path& path)
{
  auto in = csv::open_input(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_settings(text, path.string());
}

/// Pairs of `--key value` (or `--key=value`) tokens.
inline Settings parse_overrides(const std::vector<std::string>& args)
{
  Settings out;
  for (std::size_t i = 0; i < args.size(); ++i)
  {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0)
      throw Error(ErrorKind::InvalidArgument, "unexpected argument '" + a + "'");
    std::string key = a.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos)
    {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    }
    else
    {
      if (i + 1 >= args.size())
        throw Error(ErrorKind::InvalidArgument, "missing value for --" + key);
      value = args[++i];
    }
    std::replace(key.begin(), key.end(), '-', '_');
    out[key] = value;
  }
  return out;
}

namespace detail
{

inline double to_double(const std::string& key, const std::string& v)
{
  double d = 0.0;
  if (!csv::parse_double(v, d))
    throw Error(ErrorKind::InvalidArgument, key + ": '" + v + "' is not a number");
  return d;
}

inline std::int64_t to_int(const std::string& key, const std::string& v)
{
  std::int64_t i = 0;
  if (!csv::parse_int64(v, i))
    throw Error(ErrorKind::InvalidArgument, key + ": '" + v + "' is not an integer");
  return i;
}

inline Activation to_activation(const std::string& key, const std::string& v)
{
  if (v == "tanh")
    return Activation::Tanh;
  if (v == "relu")
    return Activation::Relu;
  throw Error(ErrorKind::InvalidArgument, key + ": expected tanh or relu");
}

} // namespace detail

/// "w:mean:std,w:mean:std,..."
inline std::vector<DriftMode> parse_drift_mixture(const std::string& text)
{
  std::vector<DriftMode> modes;
  for (auto item : csv::split(text))
  {
    const auto parts = csv::split(item, ':');
    DriftMode m;
    if (parts.size() != 3 || !csv::parse_double(parts[0], m.weight) || !csv::parse_double(parts[1], m.mean_deg) ||
        !csv::parse_double(parts[2], m.std_deg))
      throw Error(ErrorKind::InvalidArgument, "drift_mixture: expected weight:mean:std entries");
    modes.push_back(m);
  }
  return modes;
}

inline std::string format_drift_mixture(const std::vector<DriftMode>& modes)
{
  std::string out;
  for (const auto& m : modes)
  {
    if (!out.empty())
      out += ',';
    out += csv::format_double(m.weight) + ":" + csv::format_double(m.mean_deg) + ":" + csv::format_double(m.std_deg);
  }
  return out;
}

/// Applies known keys; unknown keys are an error so typos do not pass silently.
inline void apply_settings(RunConfig& cfg, const Settings& settings)
{
  using detail::to_double;
  using detail::to_int;
  for (const auto& [key, v] : settings)
  {
    if (key == "C" || key == "c" || key == "feature_dim")
    {
      cfg.synth.C = static_cast<int>(to_int(key, v));
      cfg.dims.C = cfg.synth.C;
    }
    else if (key == "n_train") cfg.synth.n_train = static_cast<int>(to_int(key, v));
    else if (key == "n_val") cfg.synth.n_val = static_cast<int>(to_int(key, v));
    else if (key == "feature_noise_sigma") cfg.synth.feature_noise_sigma = to_double(key, v);
    else if (key == "feature_scale") cfg.synth.feature_scale = to_double(key, v);
    else if (key == "distractor_dims") cfg.synth.distractor_dims = static_cast<int>(to_int(key, v));
    else if (key == "drift_mixture") cfg.synth.drift_mixture = parse_drift_mixture(v);
    else if (key == "synth_seed") cfg.synth.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "H_prior" || key == "h_prior") cfg.dims.H_prior = static_cast<int>(to_int(key, v));
    else if (key == "H_head" || key == "h_head") cfg.dims.H_head = static_cast<int>(to_int(key, v));
    else if (key == "H_img" || key == "h_img") cfg.dims.H_img = static_cast<int>(to_int(key, v));
    else if (key == "prior_act") cfg.dims.prior_act = detail::to_activation(key, v);
    else if (key == "head_act") cfg.dims.head_act = detail::to_activation(key, v);
    else if (key == "img_act") cfg.dims.img_act = detail::to_activation(key, v);
    else if (key == "init_seed") cfg.init_seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "lr_heads" || key == "lr") cfg.train.lr_heads = to_double(key, v);
    else if (key == "lr_backbone") cfg.train.lr_backbone = to_double(key, v);
    else if (key == "epochs") cfg.train.epochs = static_cast<int>(to_int(key, v));
    else if (key == "batch") cfg.train.batch = static_cast<int>(to_int(key, v));
    else if (key == "beta1") cfg.train.beta1 = to_double(key, v);
    else if (key == "beta2") cfg.train.beta2 = to_double(key, v);
    else if (key == "eps_adam") cfg.train.eps_adam = to_double(key, v);
    else if (key == "seed" || key == "train_seed") cfg.train.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "clip_norm") cfg.train.clip_norm = to_double(key, v);
    else if (key == "threads") cfg.train.threads = static_cast<int>(to_int(key, v));
    else if (key == "lr_step")
    {
      if (v == "epoch") cfg.train.lr_step = LrStep::Epoch;
      else if (v == "iter") cfg.train.lr_step = LrStep::Iter;
      else throw Error(ErrorKind::InvalidArgument, "lr_step: expected epoch or iter");
    }
    else if (key == "lambda_delta") cfg.weights.lambda_delta = to_double(key, v);
    else if (key == "lambda_tau") cfg.weights.lambda_tau = to_double(key, v);
    else if (key == "lambda_img") cfg.weights.lambda_img = to_double(key, v);
    else
      throw Error(ErrorKind::InvalidArgument, "unknown configuration key '" + key + "'");
  }
  validate(cfg.synth);
  validate(cfg.train);
  validate(cfg.dims);
  if (cfg.weights.lambda_delta < 0.0 || cfg.weights.lambda_tau < 0.0 || cfg.weights.lambda_img < 0.0)
    throw Error(ErrorKind::InvalidArgument, "loss weights must be non-negative");
}

} // namespace gravprior
