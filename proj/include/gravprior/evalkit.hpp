/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include "gravprior/csv.hpp"
#include "gravprior/error.hpp"
#include "gravprior/geom3.hpp"
#include "gravprior/labels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace gravprior
{

/// Angular error statistics in degrees.
struct ErrorSummary
{
  double mean{0.0};
  double median{0.0};
  double p90{0.0};
  double p95{0.0};
  std::size_t count{0};
};

/// Percentile of an ascending-sorted list, linear interpolation between the
/// closest ranks at position p/100·(n-1).
inline double percentile_sorted(std::span<const double> sorted, double p)
{
  if (sorted.empty())
    throw Error(ErrorKind::EmptyInput, "percentile of an empty list");
  if (!(p >= 0.0 && p <= 100.0))
    throw Error(ErrorKind::InvalidArgument, "percentile outside [0, 100]");
  // Scale before dividing so integer percentiles get an exact k/100 fraction.
  const double num = p * static_cast<double>(sorted.size() - 1);
  const auto lo = std::min(static_cast<std::size_t>(std::floor(num / 100.0)), sorted.size() - 1);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = (num - 100.0 * static_cast<double>(lo)) / 100.0;
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline ErrorSummary summarize(std::span<const double> errors_deg)
{
  if (errors_deg.empty())
    throw Error(ErrorKind::EmptyInput, "summarize of an empty list");
  std::vector<double> s(errors_deg.begin(), errors_deg.end());
  double sum = 0.0;
  for (double e : s)
  {
    if (!(e >= 0.0 && e <= 180.0))
      throw Error(ErrorKind::InvalidArgument, "angular error outside [0, 180]");
    sum += e;
  }
  std::sort(s.begin(), s.end());
  ErrorSummary out;
  out.count = s.size();
  out.mean = sum / static_cast<double>(s.size());
  out.median = percentile_sorted(s, 50.0);
  out.p90 = percentile_sorted(s, 90.0);
  out.p95 = percentile_sorted(s, 95.0);
  return out;
}

/// Per-frame angular errors between predictions and labels.
inline std::vector<double> angular_errors(std::span<const UnitVec3> pred, std::span<const UnitVec3> truth)
{
  if (pred.size() != truth.size())
    throw Error(ErrorKind::ShapeMismatch, "prediction/label count mismatch");
  std::vector<double> e(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    e[i] = angle_deg(pred[i], truth[i]);
  return e;
}

/// Index of the bin containing x; bins are right-open except the last one,
/// which is closed. Returns -1 outside [edges.front(), edges.back()].
inline int bin_index(std::span<const double> edges, double x)
{
  if (edges.size() < 2 || !(x >= edges.front() && x <= edges.back()))
    return -1;
  if (x == edges.back())
    return static_cast<int>(edges.size()) - 2;
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  return static_cast<int>(it - edges.begin()) - 1;
}

inline void validate_edges(std::span<const double> edges)
{
  if (edges.size() < 2)
    throw Error(ErrorKind::InvalidArgument, "need at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1]))
      throw Error(ErrorKind::InvalidArgument, "bin edges must be strictly increasing");
}

inline const std::vector<double>& default_tilt_edges()
{
  static const std::vector<double> e{0.0, 60.0, 120.0, 180.0};
  return e;
}

inline const std::vector<double>& fine_tilt_edges()
{
  static const std::vector<double> e{0.0, 30.0, 60.0, 90.0, 120.0, 150.0, 180.0};
  return e;
}

struct TiltBin
{
  double lo{0.0};
  double hi{0.0};
  std::size_t count{0};
  std::optional<ErrorSummary> summary;  // empty bins have none
};

struct TiltBinReport
{
  std::vector<double> edges;
  std::vector<TiltBin> bins;
  std::size_t total{0};
};

/// Bins frames by tilt_deg(g_gt) over `edges`, which must cover [0, 180].
inline TiltBinReport tilt_breakdown(std::span<const UnitVec3> pred, std::span<const UnitVec3> g_gt,
                                    std::span<const double> edges = default_tilt_edges())
{
  if (g_gt.empty())
    throw Error(ErrorKind::EmptyInput, "tilt breakdown of an empty set");
  if (pred.size() != g_gt.size())
    throw Error(ErrorKind::ShapeMismatch, "prediction/label count mismatch");
  validate_edges(edges);
  if (edges.front() != 0.0 || edges.back() != 180.0)
    throw Error(ErrorKind::InvalidArgument, "tilt edges must span [0, 180]");

  std::vector<std::vector<double>> per_bin(edges.size() - 1);
  for (std::size_t i = 0; i < g_gt.size(); ++i)
    per_bin[bin_index(edges, tilt_deg(g_gt[i]))].push_back(angle_deg(pred[i], g_gt[i]));

  TiltBinReport r;
  r.edges.assign(edges.begin(), edges.end());
  r.total = g_gt.size();
  for (std::size_t b = 0; b < per_bin.size(); ++b)
  {
    TiltBin bin{edges[b], edges[b + 1], per_bin[b].size(), std::nullopt};
    if (!per_bin[b].empty())
      bin.summary = summarize(per_bin[b]);
    r.bins.push_back(bin);
  }
  return r;
}

enum class UprightFrame
{
  Arkit,  // (0, 1, 0) in the ARKit camera frame, converted to (0, 0, -1)
  Euroc   // (0, 1, 0) taken literally in the EuRoC frame
};

inline UnitVec3 upright_direction(UprightFrame frame)
{
  return frame == UprightFrame::Arkit ? arkit_to_euroc(UnitVec3::unit_y()) : UnitVec3::unit_y();
}

/// The constant "assume upright" baseline for n frames.
inline std::vector<UnitVec3> assume_upright(std::size_t n, UprightFrame frame = UprightFrame::Arkit)
{
  if (n == 0)
    throw Error(ErrorKind::InvalidArgument, "assume_upright needs n >= 1");
  return std::vector<UnitVec3>(n, upright_direction(frame));
}

struct GateBin
{
  double lo{0.0};
  double hi{0.0};
  std::size_t count{0};
  std::optional<double> mean_tau;
};

struct GateBinReport
{
  std::vector<double> edges;
  std::vector<GateBin> bins;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline const std::vector<double>& default_prior_error_edges()
{
  static const std::vector<double> e{0.0, 10.0, 20.0, 30.0, 45.0, 60.0, kInf};
  return e;
}

inline const std::vector<double>& default_ratio_edges()
{
  static const std::vector<double> e{-kInf, 0.05, 0.10, 0.20, 0.50, kInf};
  return e;
}

/// Mean τ per bin of `key`. Values outside the edges are ignored.
inline GateBinReport gate_bins(std::span<const double> tau, std::span<const double> key, std::span<const double> edges)
{
  if (tau.empty())
    throw Error(ErrorKind::EmptyInput, "gate diagnostics of an empty set");
  if (tau.size() != key.size())
    throw Error(ErrorKind::ShapeMismatch, "tau/key count mismatch");
  validate_edges(edges);
  std::vector<double> sum(edges.size() - 1, 0.0);
  std::vector<std::size_t> count(edges.size() - 1, 0);
  for (std::size_t i = 0; i < tau.size(); ++i)
  {
    if (!(tau[i] >= 0.0 && tau[i] <= 1.0))
      throw Error(ErrorKind::InvalidArgument, "tau outside [0, 1]");
    const int b = bin_index(edges, key[i]);
    if (b < 0)
      continue;
    sum[b] += tau[i];
    ++count[b];
  }
  GateBinReport r;
  r.edges.assign(edges.begin(), edges.end());
  for (std::size_t b = 0; b < count.size(); ++b)
  {
    GateBin bin{edges[b], edges[b + 1], count[b], std::nullopt};
    if (count[b] > 0)
      bin.mean_tau = sum[b] / static_cast<double>(count[b]);
    r.bins.push_back(bin);
  }
  return r;
}

struct GateDiagnostics
{
  GateBinReport by_prior_error;
  GateBinReport by_ratio;
};

/// The |r| is used for binning over the non-gravity ratio.
inline GateDiagnostics gate_diagnostics(std::span<const double> tau, std::span<const double> prior_error_deg,
                                        std::span<const double> nongravity_ratio,
                                        std::span<const double> error_edges = default_prior_error_edges(),
                                        std::span<const double> ratio_edges = default_ratio_edges())
{
  std::vector<double> abs_r(nongravity_ratio.size());
  std::transform(nongravity_ratio.begin(), nongravity_ratio.end(), abs_r.begin(), [](double r) { return std::abs(r); });
  return {gate_bins(tau, prior_error_deg, error_edges), gate_bins(tau, abs_r, ratio_edges)};
}

/// Cell counts of directions on an equal-area (cos θ, φ) grid over S².
struct SphereDensity
{
  int n_theta{0};
  int n_phi{0};
  std::vector<std::size_t> counts;  // row-major [theta][phi]
};

inline SphereDensity sphere_density(std::span<const UnitVec3> dirs, int n_theta = 18, int n_phi = 36)
{
  if (n_theta <= 0 || n_phi <= 0)
    throw Error(ErrorKind::InvalidArgument, "sphere grid needs positive dimensions");
  SphereDensity d{n_theta, n_phi, std::vector<std::size_t>(static_cast<std::size_t>(n_theta) * n_phi, 0)};
  for (const auto& g : dirs)
  {
    const double u = (1.0 - std::clamp(g.z(), -1.0, 1.0)) / 2.0;  // 0 at +Z, 1 at -Z
    double phi = std::atan2(g.y() + 0.0, g.x() + 0.0);  // folds -0 so the poles land in phi cell 0
    if (phi < 0.0)
      phi += 2.0 * std::numbers::pi;
    const int it = std::min(n_theta - 1, static_cast<int>(u * n_theta));
    const int ip = std::min(n_phi - 1, static_cast<int>(phi / (2.0 * std::numbers::pi) * n_phi));
    ++d.counts[static_cast<std::size_t>(it) * n_phi + ip];
  }
  return d;
}

inline void write_sphere_density_csv(const SphereDensity& d, const std::filesystem::path& path)
{
  auto out = csv::open_output(path);
  out << "theta_lo_deg,theta_hi_deg,phi_lo_deg,phi_hi_deg,count\n";
  for (int i = 0; i < d.n_theta; ++i)
  {
    const double t_lo = rad_to_deg(std::acos(1.0 - 2.0 * i / d.n_theta));
    const double t_hi = rad_to_deg(std::acos(std::max(-1.0, 1.0 - 2.0 * (i + 1) / static_cast<double>(d.n_theta))));
    for (int j = 0; j < d.n_phi; ++j)
    {
      out << csv::format_double(t_lo) << ',' << csv::format_double(t_hi) << ','
          << csv::format_double(360.0 * j / d.n_phi) << ',' << csv::format_double(360.0 * (j + 1) / d.n_phi) << ','
          << d.counts[static_cast<std::size_t>(i) * d.n_phi + j] << '\n';
    }
  }
}

// ---- reports ---------------------------------------------------------------

namespace detail
{

inline std::string fmt(double v, int prec = 2)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

inline std::string edge_label(double lo, double hi, const char* unit)
{
  if (std::isinf(lo))
    return "<" + fmt(hi, 2) + unit;
  if (std::isinf(hi))
    return ">" + fmt(lo, 2) + unit;
  return fmt(lo, 2) + "-" + fmt(hi, 2) + unit;
}

} // namespace detail

struct MethodRow
{
  std::string name;
  ErrorSummary summary;
};

inline void print_method_table(std::ostream& os, std::span<const MethodRow> rows)
{
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %9s %9s %9s %9s %8s\n", "Method", "Mean", "Median", "P90", "P95", "N");
  os << line;
  for (const auto& r : rows)
  {
    std::snprintf(line, sizeof line, "%-24s %9.2f %9.2f %9.2f %9.2f %8zu\n", r.name.c_str(), r.summary.mean,
                  r.summary.median, r.summary.p90, r.summary.p95, r.summary.count);
    os << line;
  }
}

inline void print_tilt_report(std::ostream& os, const TiltBinReport& r)
{
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %8s %9s %9s %9s %9s\n", "Tilt", "N", "Mean", "Median", "P90", "P95");
  os << line;
  for (const auto& b : r.bins)
  {
    const std::string label = detail::edge_label(b.lo, b.hi, "");
    if (b.summary)
      std::snprintf(line, sizeof line, "%-16s %8zu %9.2f %9.2f %9.2f %9.2f\n", label.c_str(), b.count, b.summary->mean,
                    b.summary->median, b.summary->p90, b.summary->p95);
    else
      std::snprintf(line, sizeof line, "%-16s %8zu %9s %9s %9s %9s\n", label.c_str(), b.count, "-", "-", "-", "-");
    os << line;
  }
}

inline void print_gate_report(std::ostream& os, const GateBinReport& r, const std::string& title, const char* unit)
{
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %8s %9s\n", title.c_str(), "N", "mean tau");
  os << line;
  for (const auto& b : r.bins)
  {
    const std::string label = detail::edge_label(b.lo, b.hi, unit);
    if (b.mean_tau)
      std::snprintf(line, sizeof line, "%-16s %8zu %9.3f\n", label.c_str(), b.count, *b.mean_tau);
    else
      std::snprintf(line, sizeof line, "%-16s %8zu %9s\n", label.c_str(), b.count, "-");
    os << line;
  }
}

inline nlohmann::json to_json(const ErrorSummary& s)
{
  return {{"mean", s.mean}, {"median", s.median}, {"p90", s.p90}, {"p95", s.p95}, {"count", s.count}};
}

namespace detail
{

inline nlohmann::json edge_json(double v)
{
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  return v;
}

} // namespace detail

inline nlohmann::json to_json(const TiltBinReport& r)
{
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : r.bins)
  {
    nlohmann::json j{{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}};
    j["summary"] = b.summary ? to_json(*b.summary) : nlohmann::json(nullptr);
    bins.push_back(j);
  }
  return {{"total", r.total}, {"bins", bins}};
}

inline nlohmann::json to_json(const GateBinReport& r)
{
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : r.bins)
    bins.push_back({{"lo", detail::edge_json(b.lo)},
                    {"hi", detail::edge_json(b.hi)},
                    {"count", b.count},
                    {"mean_tau", b.mean_tau ? nlohmann::json(*b.mean_tau) : nlohmann::json(nullptr)}});
  return {{"bins", bins}};
}

inline void write_tilt_csv(const TiltBinReport& r, const std::filesystem::path& path)
{
  auto out = csv::open_output(path);
  out << "tilt_lo,tilt_hi,count,mean,median,p90,p95\n";
  for (const auto& b : r.bins)
  {
    out << csv::format_double(b.lo) << ',' << csv::format_double(b.hi) << ',' << b.count;
    if (b.summary)
      out << ',' << csv::format_double(b.summary->mean) << ',' << csv::format_double(b.summary->median) << ','
          << csv::format_double(b.summary->p90) << ',' << csv::format_double(b.summary->p95);
    else
      out << ",,,,";
    out << '\n';
  }
}

inline void write_gate_csv(const GateBinReport& r, const std::filesystem::path& path)
{
  auto out = csv::open_output(path);
  out << "lo,hi,count,mean_tau\n";
  for (const auto& b : r.bins)
  {
    out << csv::format_double(b.lo) << ',' << csv::format_double(b.hi) << ',' << b.count << ',';
    if (b.mean_tau)
      out << csv::format_double(*b.mean_tau);
    out << '\n';
  }
}

/// Per-split orientation statistics over a set of sequence records.
struct SplitStats
{
  std::string split;
  std::size_t sequences{0};
  std::size_t frames{0};
  std::vector<std::size_t> tilt_counts;  // per tilt bin
  std::optional<ErrorSummary> prior_error;
};

inline SplitStats split_stats(const std::string& split, std::span<const std::vector<LabeledFrame>> records,
                              std::span<const double> edges = default_tilt_edges())
{
  validate_edges(edges);
  SplitStats s;
  s.split = split;
  s.sequences = records.size();
  s.tilt_counts.assign(edges.size() - 1, 0);
  std::vector<double> prior;
  for (const auto& rec : records)
    for (const auto& f : rec)
    {
      ++s.frames;
      const int b = bin_index(edges, f.tilt_deg);
      if (b >= 0)
        ++s.tilt_counts[b];
      prior.push_back(f.prior_error_deg);
    }
  if (!prior.empty())
    s.prior_error = summarize(prior);
  return s;
}

inline void print_split_stats(std::ostream& os, std::span<const SplitStats> rows, std::span<const double> edges)
{
  os << "Split        Seqs   Frames";
  for (std::size_t b = 0; b + 1 < edges.size(); ++b)
  {
    char cell[40];
    std::snprintf(cell, sizeof cell, " %13s", detail::edge_label(edges[b], edges[b + 1], "").c_str());
    os << cell;
  }
  os << "  PriorMean\n";
  for (const auto& r : rows)
  {
    char cell[64];
    std::snprintf(cell, sizeof cell, "%-10s %6zu %8zu", r.split.c_str(), r.sequences, r.frames);
    os << cell;
    for (std::size_t c : r.tilt_counts)
    {
      std::snprintf(cell, sizeof cell, " %13zu", c);
      os << cell;
    }
    os << "  " << (r.prior_error ? detail::fmt(r.prior_error->mean) : std::string("-")) << '\n';
  }
}

} // namespace gravprior
