/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include "gravprior/binio.hpp"
#include "gravprior/csv.hpp"
#include "gravprior/error.hpp"
#include "gravprior/geom3.hpp"
#include "gravprior/labels.hpp"
#include "gravprior/mahony.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gravprior
{

namespace fs = std::filesystem;

struct Intrinsics
{
  double fx{0.0}, fy{0.0}, cx{0.0}, cy{0.0};
  // Radial-tangential (k1, k2, p1, p2, k3).
  double k1{0.0}, k2{0.0}, p1{0.0}, p2{0.0}, k3{0.0};
  int width{1920};
  int height{1440};

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

inline void validate(const Intrinsics& k)
{
  if (!(k.fx > 0.0) || !(k.fy > 0.0))
    throw Error(ErrorKind::InvalidArgument, "focal lengths must be positive");
  if (k.width <= 0 || k.height <= 0)
    throw Error(ErrorKind::InvalidArgument, "image size must be positive");
  if (!(k.cx >= 0.0 && k.cx < k.width) || !(k.cy >= 0.0 && k.cy < k.height))
    throw Error(ErrorKind::InvalidArgument, "principal point outside the image");
}

struct StrayRecording
{
  std::vector<PoseSample> odometry;
  std::vector<ImuSample> imu;
  Intrinsics intrinsics;
};

struct EurocPose
{
  std::int64_t t_ns{0};
  Vec3 p;
  Quat q;  // body -> world (Z-up)

  friend bool operator==(const EurocPose&, const EurocPose&) = default;
};

struct TimedGravity
{
  double t{0.0};
  UnitVec3 g = UnitVec3::unit_z();
};

struct EurocRecording
{
  std::vector<ImuSample> imu;
  std::vector<std::int64_t> imu_t_ns;  // lossless stamps, parallel to imu
  std::optional<std::vector<EurocPose>> gt_poses;
  /// Body-frame gravity from the ground-truth poses, when present.
  std::optional<std::vector<TimedGravity>> gt_gravity;
};

/// Column positions for the Stray CSVs, overridable for files whose layout
/// differs (`odo.qw=8,imu.t=0`, ...).
struct ColumnMap
{
  std::map<std::string, int> odometry{{"t", 0},  {"x", 1},  {"y", 2},  {"z", 3},
                                      {"qx", 4}, {"qy", 5}, {"qz", 6}, {"qw", 7}};
  std::map<std::string, int> imu{{"t", 0},       {"a_x", 1},     {"a_y", 2},     {"a_z", 3},
                                 {"alpha_x", 4}, {"alpha_y", 5}, {"alpha_z", 6}};
  bool customised{false};

  /// Applies "odo.key=idx,imu.key=idx" overrides.
  static ColumnMap parse(std::string_view spec)
  {
    ColumnMap map;
    if (csv::trim(spec).empty())
      return map;
    map.customised = true;
    for (auto item : csv::split(spec))
    {
      const auto eq = item.find('=');
      const auto dot = item.find('.');
      std::int64_t idx = 0;
      if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq ||
          !csv::parse_int64(item.substr(eq + 1), idx) || idx < 0)
        throw Error(ErrorKind::InvalidArgument, "bad column-map entry '" + std::string(item) + "'");
      const std::string file(item.substr(0, dot));
      const std::string key(item.substr(dot + 1, eq - dot - 1));
      auto& target = (file == "odo" || file == "odometry") ? map.odometry : map.imu;
      if ((file != "odo" && file != "odometry" && file != "imu") || !target.contains(key))
        throw Error(ErrorKind::InvalidArgument, "unknown column '" + std::string(item.substr(0, eq)) + "'");
      target[key] = static_cast<int>(idx);
    }
    return map;
  }
};

namespace detail
{

inline std::size_t width_of(const std::map<std::string, int>& cols)
{
  int w = 0;
  for (const auto& [_, idx] : cols)
    w = std::max(w, idx + 1);
  return static_cast<std::size_t>(w);
}

template <typename T>
void require_sorted(const std::vector<T>& v, const std::vector<std::size_t>& lines, const fs::path& path)
{
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i].t < v[i - 1].t)
      throw Error(ErrorKind::NonMonotonicTime,
                  path.string() + ":" + std::to_string(lines[i]) + ": timestamp decreases");
}

inline fs::path require_file(const fs::path& path)
{
  if (!fs::is_regular_file(path))
    throw Error(ErrorKind::MissingFile, path.string() + " not found");
  return path;
}

} // namespace detail

inline std::vector<PoseSample> read_stray_odometry(const fs::path& path, const ColumnMap& cols = {})
{
  const std::size_t w = detail::width_of(cols.odometry);
  std::vector<PoseSample> out;
  std::vector<std::size_t> lines;
  for (const auto& row : csv::read_numeric(detail::require_file(path), w, cols.customised ? 1024 : w))
  {
    auto at = [&](const char* k) { return row.values[cols.odometry.at(k)]; };
    PoseSample p;
    p.t = at("t");
    p.p_wc = {at("x"), at("y"), at("z")};
    const Quat q{at("qw"), at("qx"), at("qy"), at("qz")};
    if (std::abs(q.norm() - 1.0) > 1e-3)
      throw MalformedRowError(path.string(), row.line, "quaternion is not unit length");
    p.q_wc = q;
    out.push_back(p);
    lines.push_back(row.line);
  }
  detail::require_sorted(out, lines, path);
  return out;
}

inline std::vector<ImuSample> read_stray_imu(const fs::path& path, const ColumnMap& cols = {})
{
  const std::size_t w = detail::width_of(cols.imu);
  std::vector<ImuSample> out;
  std::vector<std::size_t> lines;
  for (const auto& row : csv::read_numeric(detail::require_file(path), w, cols.customised ? 1024 : w))
  {
    auto at = [&](const char* k) { return row.values[cols.imu.at(k)]; };
    out.push_back({at("t"), {at("alpha_x"), at("alpha_y"), at("alpha_z")}, {at("a_x"), at("a_y"), at("a_z")}});
    lines.push_back(row.line);
  }
  detail::require_sorted(out, lines, path);
  return out;
}

/// `camera_matrix.csv`: the 3x3 K, row per line. An optional
/// `distortion.csv` holds k1,k2,p1,p2,k3 on one line.
inline Intrinsics read_camera_matrix(const fs::path& dir, int width, int height)
{
  const fs::path kpath = dir / "camera_matrix.csv";
  const auto rows = csv::read_numeric(detail::require_file(kpath), 3, 3);
  if (rows.size() != 3)
    throw MalformedRowError(kpath.string(), rows.empty() ? 1 : rows.back().line, "expected 3 rows");
  Intrinsics k;
  k.fx = rows[0].values[0];
  k.cx = rows[0].values[2];
  k.fy = rows[1].values[1];
  k.cy = rows[1].values[2];
  k.width = width;
  k.height = height;
  const fs::path dpath = dir / "distortion.csv";
  if (fs::exists(dpath))
  {
    const auto d = csv::read_numeric(dpath, 5, 5);
    if (d.size() != 1)
      throw MalformedRowError(dpath.string(), 1, "expected a single row k1,k2,p1,p2,k3");
    k.k1 = d[0].values[0];
    k.k2 = d[0].values[1];
    k.p1 = d[0].values[2];
    k.p2 = d[0].values[3];
    k.k3 = d[0].values[4];
  }
  validate(k);
  return k;
}

inline StrayRecording read_stray(const fs::path& dir, const ColumnMap& cols = {}, int width = 1920,
                                 int height = 1440)
{
  if (!fs::is_directory(dir))
    throw Error(ErrorKind::MissingFile, dir.string() + " is not a directory");
  StrayRecording rec;
  rec.odometry = read_stray_odometry(dir / "odometry.csv", cols);
  rec.imu = read_stray_imu(dir / "imu.csv", cols);
  rec.intrinsics = read_camera_matrix(dir, width, height);
  return rec;
}

inline void write_stray(const StrayRecording& rec, const fs::path& dir)
{
  fs::create_directories(dir);
  {
    auto out = csv::open_output(dir / "odometry.csv");
    out << "t,x,y,z,qx,qy,qz,qw\n";
    for (const auto& p : rec.odometry)
      out << csv::join({p.t, p.p_wc.x, p.p_wc.y, p.p_wc.z, p.q_wc.x, p.q_wc.y, p.q_wc.z, p.q_wc.w}) << '\n';
  }
  {
    auto out = csv::open_output(dir / "imu.csv");
    out << "t,a_x,a_y,a_z,alpha_x,alpha_y,alpha_z\n";
    for (const auto& s : rec.imu)
      out << csv::join({s.t, s.accel.x, s.accel.y, s.accel.z, s.gyro.x, s.gyro.y, s.gyro.z}) << '\n';
  }
  {
    const auto& k = rec.intrinsics;
    auto out = csv::open_output(dir / "camera_matrix.csv");
    out << csv::join({k.fx, 0.0, k.cx}) << '\n' << csv::join({0.0, k.fy, k.cy}) << '\n' << "0,0,1\n";
    if (k.k1 != 0.0 || k.k2 != 0.0 || k.p1 != 0.0 || k.p2 != 0.0 || k.k3 != 0.0)
    {
      auto d = csv::open_output(dir / "distortion.csv");
      d << csv::join({k.k1, k.k2, k.p1, k.p2, k.k3}) << '\n';
    }
  }
}

// --- EuRoC ------------------------------------------------------------------

inline double ns_to_seconds(std::int64_t ns)
{
  // Split so the integer part stays exact.
  const std::int64_t sec = ns / 1'000'000'000;
  const std::int64_t rem = ns % 1'000'000'000;
  return static_cast<double>(sec) + static_cast<double>(rem) * 1e-9;
}

namespace detail
{

struct RawRow
{
  std::size_t line{0};
  std::int64_t t_ns{0};
  std::vector<double> values;  // fields after the timestamp
};

inline std::vector<RawRow> read_ns_rows(const fs::path& path, std::size_t min_fields)
{
  std::ifstream in = csv::open_input(detail::require_file(path));
  std::vector<RawRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    const auto view = csv::trim(line);
    if (view.empty() || view.front() == '#')
      continue;
    const auto fields = csv::split(view);
    if (fields.size() < min_fields)
      throw MalformedRowError(path.string(), lineno,
                              "expected at least " + std::to_string(min_fields) + " fields, got " +
                                std::to_string(fields.size()));
    RawRow row;
    row.line = lineno;
    if (!csv::parse_int64(fields[0], row.t_ns))
    {
      // Header rows without '#' are tolerated only at the top.
      if (rows.empty())
        continue;
      throw MalformedRowError(path.string(), lineno, "bad nanosecond timestamp");
    }
    row.values.resize(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i)
      if (!csv::parse_double(fields[i], row.values[i - 1]))
        throw MalformedRowError(path.string(), lineno, "non-numeric field");
    if (!rows.empty() && row.t_ns < rows.back().t_ns)
      throw Error(ErrorKind::NonMonotonicTime, path.string() + ":" + std::to_string(lineno) + ": timestamp decreases");
    rows.push_back(std::move(row));
  }
  return rows;
}

inline fs::path euroc_root(const fs::path& dir)
{
  if (fs::is_directory(dir / "imu0"))
    return dir;
  if (fs::is_directory(dir / "mav0" / "imu0"))
    return dir / "mav0";
  throw Error(ErrorKind::MissingFile, (dir / "imu0").string() + " not found");
}

} // namespace detail

/// Reads `imu0/data.csv` (t[ns], gyro xyz, accel xyz) and, when present,
/// `state_groundtruth_estimate0/data.csv` (t[ns], p xyz, q wxyz, ...).
/// Accepts either the sequence root or its `mav0` directory.
inline EurocRecording read_euroc(const fs::path& dir)
{
  const fs::path root = detail::euroc_root(dir);
  EurocRecording rec;
  for (const auto& row : detail::read_ns_rows(root / "imu0" / "data.csv", 7))
  {
    const auto& v = row.values;
    rec.imu.push_back({ns_to_seconds(row.t_ns), {v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
    rec.imu_t_ns.push_back(row.t_ns);
  }

  const fs::path gt = root / "state_groundtruth_estimate0" / "data.csv";
  if (fs::exists(gt))
  {
    std::vector<EurocPose> poses;
    std::vector<TimedGravity> gravity;
    for (const auto& row : detail::read_ns_rows(gt, 8))
    {
      const auto& v = row.values;
      EurocPose p{row.t_ns, {v[0], v[1], v[2]}, {v[3], v[4], v[5], v[6]}};
      if (std::abs(p.q.norm() - 1.0) > 1e-3)
        throw MalformedRowError(gt.string(), row.line, "quaternion is not unit length");
      poses.push_back(p);
      const Rot3 r_wb = quat_to_rot(p.q);
      gravity.push_back({ns_to_seconds(row.t_ns), normalize(r_wb.transposed() * Vec3{0.0, 0.0, -1.0})});
    }
    rec.gt_poses = std::move(poses);
    rec.gt_gravity = std::move(gravity);
  }
  return rec;
}

inline void write_euroc(const EurocRecording& rec, const fs::path& dir)
{
  if (rec.imu_t_ns.size() != rec.imu.size())
    throw Error(ErrorKind::ShapeMismatch, "imu_t_ns and imu differ in length");
  {
    auto out = csv::open_output(dir / "imu0" / "data.csv");
    out << "#timestamp [ns],w_RS_S_x [rad s^-1],w_RS_S_y [rad s^-1],w_RS_S_z [rad s^-1],"
           "a_RS_S_x [m s^-2],a_RS_S_y [m s^-2],a_RS_S_z [m s^-2]\n";
    for (std::size_t i = 0; i < rec.imu.size(); ++i)
    {
      const auto& s = rec.imu[i];
      out << rec.imu_t_ns[i] << ','
          << csv::join({s.gyro.x, s.gyro.y, s.gyro.z, s.accel.x, s.accel.y, s.accel.z}) << '\n';
    }
  }
  if (rec.gt_poses)
  {
    auto out = csv::open_output(dir / "state_groundtruth_estimate0" / "data.csv");
    out << "#timestamp,p_RS_R_x [m],p_RS_R_y [m],p_RS_R_z [m],q_RS_w [],q_RS_x [],q_RS_y [],q_RS_z []\n";
    for (const auto& p : *rec.gt_poses)
      out << p.t_ns << ',' << csv::join({p.p.x, p.p.y, p.p.z, p.q.w, p.q.x, p.q.y, p.q.z}) << '\n';
  }
}

// --- Undistort + resize remap table -----------------------------------------

struct RemapTable
{
  int out_width{0};
  int out_height{0};
  std::vector<float> map;  // (u, v) source coordinate per output pixel, row-major

  std::pair<float, float> at(int u, int v) const
  {
    const std::size_t i = 2 * (static_cast<std::size_t>(v) * out_width + u);
    return {map[i], map[i + 1]};
  }

  friend bool operator==(const RemapTable&, const RemapTable&) = default;
};

/// Radial factor and tangential offset of the radial-tangential model at a
/// normalised image point: distorted = (x, y) * radial + (tx, ty).
struct DistortionTerms
{
  double radial{1.0};
  double tx{0.0};
  double ty{0.0};
};

inline DistortionTerms distortion_terms(const Intrinsics& k, double x, double y)
{
  const double r2 = x * x + y * y;
  return {1.0 + r2 * (k.k1 + r2 * (k.k2 + r2 * k.k3)), 2.0 * k.p1 * x * y + k.p2 * (r2 + 2.0 * x * x),
          k.p1 * (r2 + 2.0 * y * y) + 2.0 * k.p2 * x * y};
}

/// Source pixel for every output pixel of an undistorted, resized image.
///
/// The output camera is the input pinhole scaled by (out_w / width,
/// out_h / height). Each output pixel is back-projected through it, pushed
/// through the forward distortion model, and projected with the original K.
inline RemapTable build_remap_table(const Intrinsics& k, int out_width, int out_height)
{
  validate(k);
  if (out_width <= 0 || out_height <= 0)
    throw Error(ErrorKind::InvalidArgument, "output size must be positive");
  const double sx = static_cast<double>(out_width) / k.width;
  const double sy = static_cast<double>(out_height) / k.height;
  const double fx_o = k.fx * sx, fy_o = k.fy * sy, cx_o = k.cx * sx, cy_o = k.cy * sy;

  RemapTable table;
  table.out_width = out_width;
  table.out_height = out_height;
  table.map.resize(2 * static_cast<std::size_t>(out_width) * out_height);
  for (int v = 0; v < out_height; ++v)
  {
    for (int u = 0; u < out_width; ++u)
    {
      // Offsets from the principal point keep the zero-distortion,
      // same-size case exact: cx + (u - cx) == u.
      const double du = u - cx_o, dv = v - cy_o;
      const auto d = distortion_terms(k, du / fx_o, dv / fy_o);
      const std::size_t i = 2 * (static_cast<std::size_t>(v) * out_width + u);
      table.map[i] = static_cast<float>(k.cx + (k.fx / fx_o) * du * d.radial + k.fx * d.tx);
      table.map[i + 1] = static_cast<float>(k.cy + (k.fy / fy_o) * dv * d.radial + k.fy * d.ty);
    }
  }
  return table;
}

inline constexpr std::uint32_t kRemapVersion = 1;

/// "GRMP", u32 version, u32 width, u32 height, then (u, v) float32 pairs,
/// row-major, little-endian.
inline void write_remap_table(const RemapTable& t, const fs::path& path)
{
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorKind::MissingFile, "cannot write " + path.string());
  binio::put_magic(out, "GRMP");
  binio::put_u32(out, kRemapVersion);
  binio::put_u32(out, static_cast<std::uint32_t>(t.out_width));
  binio::put_u32(out, static_cast<std::uint32_t>(t.out_height));
  for (float f : t.map)
    binio::put_f32(out, f);
}

inline RemapTable read_remap_table(const fs::path& path)
{
  std::ifstream in(detail::require_file(path), std::ios::binary);
  binio::expect_magic(in, "GRMP", path.string());
  const auto version = binio::get_u32(in);
  if (version != kRemapVersion)
    throw Error(ErrorKind::MalformedRow, path.string() + ": unsupported remap version " + std::to_string(version));
  RemapTable t;
  t.out_width = static_cast<int>(binio::get_u32(in));
  t.out_height = static_cast<int>(binio::get_u32(in));
  t.map.resize(2 * static_cast<std::size_t>(t.out_width) * t.out_height);
  for (float& f : t.map)
    f = binio::get_f32(in);
  return t;
}

} // namespace gravprior
