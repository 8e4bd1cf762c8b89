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
#include "gravprior/mahony.hpp"
#include "gravprior/procrustes.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gravprior
{

struct PoseSample
{
  double t{0.0};
  Quat q_wc;  // camera -> world (ARKit, Y-up)
  Vec3 p_wc;  // meters; carried along, unused by the gravity math

  friend bool operator==(const PoseSample&, const PoseSample&) = default;
};

struct LabeledFrame
{
  double t{0.0};
  UnitVec3 g_gt = UnitVec3::unit_z();     // EuRoC camera convention
  UnitVec3 g_prior = UnitVec3::unit_z();  // EuRoC camera convention
  double prior_error_deg{0.0};
  double nongravity_ratio{0.0};
  double tilt_deg{0.0};
  bool burn_in{false};
};

struct SequenceRecord
{
  std::string id;
  std::vector<LabeledFrame> frames;
  AlignmentResult alignment;
  std::size_t dropped_frames{0};
};

struct LabelOptions
{
  MahonyGains gains;
  double window_s{0.05};   // half-width of the accelerometer window for r
  double burn_in_s{1.0};   // frames this close to the first IMU sample are flagged
};

/// World gravity in the ARKit world frame.
inline const Vec3 kArkitWorldGravity{0.0, -1.0, 0.0};

/// Camera-frame gravity from a camera->world pose, converted to the EuRoC
/// camera convention.
inline UnitVec3 gravity_from_pose(const Quat& q_wc)
{
  const Rot3 r_wc = quat_to_rot(q_wc);
  const UnitVec3 g_arkit = normalize(r_wc.transposed() * kArkitWorldGravity);
  return arkit_to_euroc(g_arkit);
}

struct GravityLabel
{
  double t{0.0};
  UnitVec3 g_gt = UnitVec3::unit_z();
};

inline std::vector<GravityLabel> build_labels(std::span<const PoseSample> poses)
{
  if (poses.empty())
    throw Error(ErrorKind::EmptyStream, "pose stream is empty");
  std::vector<GravityLabel> out(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i)
    out[i] = {poses[i].t, gravity_from_pose(poses[i].q_wc)};
  return out;
}

/// Mean of ||a||/g - 1 over the window.
inline double nongravity_ratio(std::span<const Vec3> accel_window, double gravity = kGravity)
{
  if (accel_window.empty())
    throw Error(ErrorKind::EmptyWindow, "no accelerometer samples in window");
  double sum = 0.0;
  for (const auto& a : accel_window)
    sum += norm(a) / gravity - 1.0;
  return sum / static_cast<double>(accel_window.size());
}

inline double tilt_deg(const UnitVec3& g) { return rad_to_deg(std::acos(std::clamp(g.z(), -1.0, 1.0))); }

/// Everything about a recording that does not depend on the IMU->camera
/// rotation. Kept separate so several sequences can share one global fit.
struct PreparedSequence
{
  std::string id;
  std::vector<double> t;
  std::vector<UnitVec3> g_gt;
  std::vector<GravityEstimate> estimates;
  std::vector<double> nongravity;
  std::vector<bool> burn_in;
  std::size_t dropped_frames{0};

  PairedDirections pairs() const
  {
    PairedDirections p;
    p.g_cam = g_gt;
    p.g_imu.reserve(estimates.size());
    for (const auto& e : estimates)
      p.g_imu.push_back(e.g_imu);
    return p;
  }
};

inline PreparedSequence prepare_sequence(std::span<const PoseSample> poses, std::span<const ImuSample> imu,
                                         const LabelOptions& opts, std::string id = {})
{
  if (poses.empty())
    throw Error(ErrorKind::EmptyStream, "pose stream is empty");
  if (imu.empty())
    throw Error(ErrorKind::EmptyStream, "IMU stream is empty");

  const double t0 = std::max(poses.front().t, imu.front().t);
  const double t1 = std::min(poses.back().t, imu.back().t);
  if (t0 > t1)
    throw Error(ErrorKind::NoTemporalOverlap, "pose and IMU streams do not overlap in time");

  PreparedSequence seq;
  seq.id = std::move(id);
  std::vector<PoseSample> kept;
  for (const auto& p : poses)
  {
    if (p.t < t0 || p.t > t1)
      ++seq.dropped_frames;
    else
      kept.push_back(p);
  }

  for (const auto& p : kept)
    seq.t.push_back(p.t);
  for (const auto& label : build_labels(kept))
    seq.g_gt.push_back(label.g_gt);
  seq.estimates = run_sequence(imu, seq.t, opts.gains);

  // Accelerometer windows; `lo` only moves forward since frames are sorted.
  std::size_t lo = 0;
  std::vector<Vec3> window;
  for (double t : seq.t)
  {
    while (lo < imu.size() && imu[lo].t < t - opts.window_s)
      ++lo;
    window.clear();
    for (std::size_t k = lo; k < imu.size() && imu[k].t <= t + opts.window_s; ++k)
      window.push_back(imu[k].accel);
    seq.nongravity.push_back(nongravity_ratio(window));
    seq.burn_in.push_back(t < imu.front().t + opts.burn_in_s);
  }
  return seq;
}

inline SequenceRecord finalize_sequence(const PreparedSequence& seq, const AlignmentResult& alignment)
{
  SequenceRecord rec;
  rec.id = seq.id;
  rec.alignment = alignment;
  rec.dropped_frames = seq.dropped_frames;
  const auto priors = align_sequence(alignment.r, seq.estimates);
  rec.frames.reserve(seq.t.size());
  for (std::size_t i = 0; i < seq.t.size(); ++i)
  {
    LabeledFrame f;
    f.t = seq.t[i];
    f.g_gt = seq.g_gt[i];
    f.g_prior = priors[i];
    f.prior_error_deg = angle_deg(f.g_prior, f.g_gt);
    f.nongravity_ratio = seq.nongravity[i];
    f.tilt_deg = tilt_deg(f.g_gt);
    f.burn_in = seq.burn_in[i];
    rec.frames.push_back(f);
  }
  return rec;
}

/// Filter -> Procrustes against pose labels -> aligned priors, per frame.
inline SequenceRecord build_sequence(std::span<const PoseSample> poses, std::span<const ImuSample> imu,
                                     const LabelOptions& opts = {}, std::string id = {})
{
  const PreparedSequence seq = prepare_sequence(poses, imu, opts, std::move(id));
  return finalize_sequence(seq, solve_procrustes(seq.pairs()));
}

/// One rotation fitted over the pooled pairs of every sequence.
inline AlignmentResult solve_global(std::span<const PreparedSequence> seqs)
{
  PairedDirections all;
  for (const auto& s : seqs)
  {
    const auto p = s.pairs();
    all.g_cam.insert(all.g_cam.end(), p.g_cam.begin(), p.g_cam.end());
    all.g_imu.insert(all.g_imu.end(), p.g_imu.begin(), p.g_imu.end());
  }
  return solve_procrustes(all);
}

// --- SequenceRecord files ---------------------------------------------------

inline constexpr const char* kRecordHeader =
  "t,g_gt_x,g_gt_y,g_gt_z,g_prior_x,g_prior_y,g_prior_z,prior_error_deg,nongravity_ratio,tilt_deg,burn_in";

inline void write_record_csv(const SequenceRecord& rec, const std::filesystem::path& path)
{
  auto out = csv::open_output(path);
  out << kRecordHeader << '\n';
  for (const auto& f : rec.frames)
  {
    out << csv::join({f.t, f.g_gt.x(), f.g_gt.y(), f.g_gt.z(), f.g_prior.x(), f.g_prior.y(), f.g_prior.z(),
                      f.prior_error_deg, f.nongravity_ratio, f.tilt_deg})
        << ',' << (f.burn_in ? 1 : 0) << '\n';
  }
}

inline nlohmann::json alignment_to_json(const AlignmentResult& a)
{
  nlohmann::json r = nlohmann::json::array();
  for (int i = 0; i < 3; ++i)
    r.push_back({a.r(i, 0), a.r(i, 1), a.r(i, 2)});
  return {{"R_imu_to_cam", r},
          {"residual_rms_deg", a.residual_rms_deg},
          {"condition", to_string(a.condition)},
          {"singular_values", a.singular_values},
          {"pairs", a.pairs}};
}

inline AlignmentResult alignment_from_json(const nlohmann::json& j)
{
  AlignmentResult a;
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      m(i, k) = j.at("R_imu_to_cam").at(i).at(k).get<double>();
  a.r = Rot3::checked(m);
  a.residual_rms_deg = j.at("residual_rms_deg").get<double>();
  a.condition = j.at("condition").get<std::string>() == "degenerate" ? Conditioning::Degenerate
                                                                     : Conditioning::WellPosed;
  if (j.contains("singular_values"))
    a.singular_values = j.at("singular_values").get<std::array<double, 3>>();
  if (j.contains("pairs"))
    a.pairs = j.at("pairs").get<std::size_t>();
  return a;
}

inline void write_record_sidecar(const SequenceRecord& rec, const std::filesystem::path& path)
{
  nlohmann::json j = alignment_to_json(rec.alignment);
  j["id"] = rec.id;
  j["frames"] = rec.frames.size();
  j["dropped_frames"] = rec.dropped_frames;
  auto out = csv::open_output(path);
  out << j.dump(2) << '\n';
}

/// Reads the per-frame CSV (10 or 11 columns; the trailing burn_in is optional).
inline std::vector<LabeledFrame> read_record_csv(const std::filesystem::path& path)
{
  std::vector<LabeledFrame> frames;
  for (const auto& row : csv::read_numeric(path, 10, 11))
  {
    const auto& v = row.values;
    LabeledFrame f;
    try
    {
      f.t = v[0];
      f.g_gt = UnitVec3::checked(v[1], v[2], v[3]);
      f.g_prior = UnitVec3::checked(v[4], v[5], v[6]);
    }
    catch (const Error& e)
    {
      throw MalformedRowError(path.string(), row.line, e.what());
    }
    f.prior_error_deg = v[7];
    f.nongravity_ratio = v[8];
    f.tilt_deg = v[9];
    f.burn_in = v.size() > 10 && v[10] != 0.0;
    frames.push_back(f);
  }
  return frames;
}

} // namespace gravprior
