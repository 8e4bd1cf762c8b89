/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include "gravprior/calibnet.hpp"
#include "gravprior/config.hpp"
#include "gravprior/csv.hpp"
#include "gravprior/error.hpp"
#include "gravprior/evalkit.hpp"
#include "gravprior/gradcheck.hpp"
#include "gravprior/ingest.hpp"
#include "gravprior/labels.hpp"
#include "gravprior/mahony.hpp"
#include "gravprior/procrustes.hpp"
#include "gravprior/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace gravprior::cli
{

namespace fs = std::filesystem;
using nlohmann::json;

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

inline int exit_code_for(ErrorKind kind)
{
  if (is_numeric_failure(kind))
    return kExitNumeric;
  if (kind == ErrorKind::InvalidArgument)
    return kExitUsage;
  return kExitData;
}

// ---- per-sample prediction files -----------------------------------------

inline constexpr const char* kPredictionHeader =
  "g_gt_x,g_gt_y,g_gt_z,g_prior_x,g_prior_y,g_prior_z,g_pred_x,g_pred_y,g_pred_z,g_img_x,g_img_y,g_img_z,"
  "g_corr_x,g_corr_y,g_corr_z,tau,prior_error_deg,nongravity_ratio";

struct Prediction
{
  UnitVec3 g_gt = UnitVec3::unit_z();
  UnitVec3 g_prior = UnitVec3::unit_z();
  UnitVec3 g_pred = UnitVec3::unit_z();
  UnitVec3 g_img = UnitVec3::unit_z();
  UnitVec3 g_corr = UnitVec3::unit_z();
  double tau{0.0};
  double prior_error_deg{0.0};
  double nongravity_ratio{0.0};
};

inline void write_predictions(const std::vector<Prediction>& preds, const fs::path& path)
{
  auto out = csv::open_output(path);
  out << kPredictionHeader << '\n';
  for (const auto& p : preds)
  {
    std::vector<double> row;
    for (const auto* g : {&p.g_gt, &p.g_prior, &p.g_pred, &p.g_img, &p.g_corr})
      row.insert(row.end(), {g->x(), g->y(), g->z()});
    row.insert(row.end(), {p.tau, p.prior_error_deg, p.nongravity_ratio});
    out << csv::join(row) << '\n';
  }
}

inline std::vector<Prediction> read_predictions(const fs::path& path)
{
  std::vector<Prediction> preds;
  for (const auto& row : csv::read_numeric(path, 18, 18))
  {
    const auto& v = row.values;
    auto unit = [&](std::size_t k) {
      try
      {
        return UnitVec3::checked({v[k], v[k + 1], v[k + 2]});
      }
      catch (const Error& e)
      {
        throw MalformedRowError(path.string(), row.line, e.what());
      }
    };
    Prediction p;
    p.g_gt = unit(0);
    p.g_prior = unit(3);
    p.g_pred = unit(6);
    p.g_img = unit(9);
    p.g_corr = unit(12);
    p.tau = v[15];
    p.prior_error_deg = v[16];
    p.nongravity_ratio = v[17];
    preds.push_back(p);
  }
  if (preds.empty())
    throw Error(ErrorKind::EmptyInput, path.string() + " has no predictions");
  return preds;
}

inline std::vector<double> parse_edges(const std::string& text)
{
  std::vector<double> edges;
  for (auto item : csv::split(text))
  {
    const auto t = csv::trim(item);
    double v = 0.0;
    if (t == "inf" || t == "+inf")
      v = kInf;
    else if (t == "-inf")
      v = -kInf;
    else if (!csv::parse_double(t, v))
      throw Error(ErrorKind::InvalidArgument, "bad bin edge '" + std::string(t) + "'");
    edges.push_back(v);
  }
  validate_edges(edges);
  return edges;
}

// ---- application ----------------------------------------------------------

struct Globals
{
  bool json_out{false};
  int threads{static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))};
  std::string config;
};

/// Builds a RunConfig from --config plus unrecognised `--key value` tokens.
inline RunConfig load_run_config(const Globals& g, const std::vector<std::string>& extras)
{
  RunConfig cfg;
  cfg.train.threads = g.threads;
  Settings s;
  if (!g.config.empty())
    s = read_settings(g.config);
  for (auto& [k, v] : parse_overrides(extras))
    s[k] = v;
  apply_settings(cfg, s);
  return cfg;
}

inline std::vector<UnitVec3> column(const std::vector<Prediction>& p, UnitVec3 Prediction::*field)
{
  std::vector<UnitVec3> out;
  out.reserve(p.size());
  for (const auto& x : p)
    out.push_back(x.*field);
  return out;
}

inline UnitVec3 Prediction::*prediction_field(const std::string& name)
{
  if (name == "pred" || name == "fused")
    return &Prediction::g_pred;
  if (name == "prior")
    return &Prediction::g_prior;
  if (name == "img")
    return &Prediction::g_img;
  if (name == "corr")
    return &Prediction::g_corr;
  throw Error(ErrorKind::InvalidArgument, "unknown prediction column '" + name + "'");
}

inline UprightFrame parse_upright(const std::string& s)
{
  if (s == "arkit")
    return UprightFrame::Arkit;
  if (s == "euroc")
    return UprightFrame::Euroc;
  throw Error(ErrorKind::InvalidArgument, "--upright-frame expects arkit or euroc");
}

/// Reads records from a file or from every *.csv in a directory (sorted).
inline std::vector<std::vector<LabeledFrame>> read_records(const fs::path& path)
{
  std::vector<std::vector<LabeledFrame>> out;
  if (fs::is_directory(path))
  {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file() && e.path().extension() == ".csv")
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
      out.push_back(read_record_csv(f));
  }
  else
    out.push_back(read_record_csv(path));
  return out;
}

/// Runs one invocation. `argv[0]` is the program name.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Gravity-prior calibration toolkit", "gravprior"};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.json_out, "Machine-readable output");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "key=value configuration file");

  std::function<void()> action;

  // extract
  std::vector<std::string> ex_dirs;
  std::string ex_out_dir, ex_cols;
  bool ex_global = false;
  int ex_w = 1920, ex_h = 1440;
  double ex_kp = MahonyGains{}.kp, ex_ki = MahonyGains{}.ki;
  auto* ex = app.add_subcommand("extract", "Stray recordings -> labelled sequence records");
  ex->add_option("dirs", ex_dirs, "Recording directories")->required();
  ex->add_option("--out-dir", ex_out_dir, "Output directory")->required();
  ex->add_flag("--global-fit", ex_global, "One IMU->camera rotation for all recordings");
  ex->add_option("--column-map", ex_cols, "Column overrides, e.g. odo.qw=8,imu.t=0");
  ex->add_option("--width", ex_w, "Image width");
  ex->add_option("--height", ex_h, "Image height");
  ex->add_option("--kp", ex_kp, "Mahony proportional gain");
  ex->add_option("--ki", ex_ki, "Mahony integral gain");
  ex->callback([&] {
    action = [&] {
      const auto cols = ColumnMap::parse(ex_cols);
      LabelOptions opts;
      opts.gains.kp = ex_kp;
      opts.gains.ki = ex_ki;
      std::vector<PreparedSequence> seqs;
      for (const auto& d : ex_dirs)
      {
        const auto rec = read_stray(d, cols, ex_w, ex_h);
        seqs.push_back(prepare_sequence(rec.odometry, rec.imu, opts, fs::path(d).filename().string()));
      }
      std::optional<AlignmentResult> global;
      if (ex_global)
        global = solve_global(seqs);
      json report = json::array();
      for (const auto& s : seqs)
      {
        const auto rec = finalize_sequence(s, global ? *global : solve_procrustes(s.pairs()));
        const fs::path base = fs::path(ex_out_dir) / (rec.id.empty() ? "sequence" : rec.id);
        write_record_csv(rec, base.string() + ".csv");
        write_record_sidecar(rec, base.string() + ".json");
        json j = alignment_to_json(rec.alignment);
        j["id"] = rec.id;
        j["frames"] = rec.frames.size();
        j["dropped_frames"] = rec.dropped_frames;
        report.push_back(j);
        if (!g.json_out)
          out << rec.id << ": " << rec.frames.size() << " frames, " << rec.dropped_frames << " dropped, residual "
              << detail::fmt(rec.alignment.residual_rms_deg, 3) << " deg, " << to_string(rec.alignment.condition)
              << '\n';
      }
      if (g.json_out)
        out << report.dump(2) << '\n';
    };
  });

  // mahony
  std::string mh_imu, mh_frames, mh_out, mh_cols;
  MahonyGains mh_gains;
  auto* mh = app.add_subcommand("mahony", "IMU CSV -> body-frame gravity estimates");
  mh->add_option("--imu", mh_imu, "IMU CSV (t,a_x,a_y,a_z,alpha_x,alpha_y,alpha_z)")->required();
  mh->add_option("--frames", mh_frames, "Single-column CSV of query times (default: every IMU sample)");
  mh->add_option("--out", mh_out, "Output CSV")->required();
  mh->add_option("--column-map", mh_cols, "Column overrides");
  mh->add_option("--kp", mh_gains.kp, "Proportional gain");
  mh->add_option("--ki", mh_gains.ki, "Integral gain");
  mh->add_option("--accel-sign", mh_gains.accel_sign, "+1 if the accelerometer reads up at rest, -1 otherwise");
  mh->callback([&] {
    action = [&] {
      validate_gains(mh_gains);
      const auto imu = read_stray_imu(mh_imu, ColumnMap::parse(mh_cols));
      std::vector<double> times;
      if (mh_frames.empty())
        for (const auto& s : imu)
          times.push_back(s.t);
      else
        for (const auto& row : csv::read_numeric(mh_frames, 1, 1))
          times.push_back(row.values[0]);
      const auto est = run_sequence(imu, times, mh_gains);
      auto o = csv::open_output(mh_out);
      o << "t,g_x,g_y,g_z\n";
      for (const auto& e : est)
        o << csv::join({e.t, e.g_imu.x(), e.g_imu.y(), e.g_imu.z()}) << '\n';
      if (g.json_out)
        out << json{{"estimates", est.size()}, {"out", mh_out}}.dump() << '\n';
      else
        out << est.size() << " estimates written to " << mh_out << '\n';
    };
  });

  // align
  std::string al_pairs, al_out;
  auto* al = app.add_subcommand("align", "Paired directions -> IMU->camera rotation");
  al->add_option("--pairs", al_pairs, "CSV g_cam_x,g_cam_y,g_cam_z,g_imu_x,g_imu_y,g_imu_z")->required();
  al->add_option("--out", al_out, "Output JSON (default: stdout)");
  al->callback([&] {
    action = [&] {
      PairedDirections p;
      for (const auto& row : csv::read_numeric(al_pairs, 6, 6))
      {
        const auto& v = row.values;
        try
        {
          p.g_cam.push_back(normalize({v[0], v[1], v[2]}));
          p.g_imu.push_back(normalize({v[3], v[4], v[5]}));
        }
        catch (const Error& e)
        {
          throw MalformedRowError(al_pairs, row.line, e.what());
        }
      }
      const auto j = alignment_to_json(solve_procrustes(p));
      if (!al_out.empty())
      {
        auto o = csv::open_output(al_out);
        o << j.dump(2) << '\n';
      }
      if (al_out.empty() || g.json_out)
        out << j.dump(2) << '\n';
      else
        out << "rotation written to " << al_out << " (residual " << detail::fmt(j["residual_rms_deg"].get<double>(), 4)
            << " deg)\n";
    };
  });

  // synth
  std::string sy_out;
  auto* sy = app.add_subcommand("synth", "Synthetic train/val datasets");
  sy->add_option("--out-dir", sy_out, "Output directory")->required();
  sy->allow_extras();
  sy->callback([&] {
    action = [&] {
      const auto cfg = load_run_config(g, sy->remaining());
      const auto data = make_synth(cfg.synth);
      write_dataset_csv(data.train, fs::path(sy_out) / "train.csv");
      write_dataset_csv(data.val, fs::path(sy_out) / "val.csv");
      double prior = 0.0;
      for (const auto& s : data.val)
        prior += s.prior_error_deg;
      prior /= static_cast<double>(data.val.size());
      if (g.json_out)
        out << json{{"train", data.train.size()}, {"val", data.val.size()}, {"val_prior_mean_deg", prior}}.dump()
            << '\n';
      else
        out << data.train.size() << " train / " << data.val.size() << " val samples in " << sy_out
            << " (val prior mean " << detail::fmt(prior) << " deg)\n";
    };
  });

  // train
  std::string tr_train, tr_val, tr_out, tr_history, tr_init;
  bool tr_quiet = false;
  auto* tr = app.add_subcommand("train", "Train the calibrator");
  tr->add_option("--train", tr_train, "Training dataset CSV")->required();
  tr->add_option("--val", tr_val, "Validation dataset CSV");
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--history", tr_history, "Per-epoch history CSV");
  tr->add_option("--init", tr_init, "Start from this checkpoint");
  tr->add_flag("--quiet", tr_quiet, "No per-epoch lines");
  tr->allow_extras();
  tr->callback([&] {
    action = [&] {
      auto cfg = load_run_config(g, tr->remaining());
      const Dataset train = read_dataset_csv(tr_train);
      const Dataset val = tr_val.empty() ? Dataset{} : read_dataset_csv(tr_val);
      if (train.empty())
        throw Error(ErrorKind::EmptyInput, tr_train + " has no samples");
      cfg.dims.C = static_cast<int>(train.front().f.size());
      CalibratorParams params = tr_init.empty() ? init_params(cfg.dims, cfg.init_seed) : load_checkpoint(tr_init);
      const auto history = train_loop(params, train, val, cfg.weights, cfg.train, [&](const EpochRecord& r) {
        if (tr_quiet || g.json_out)
          return;
        out << "epoch " << r.epoch << " lr " << r.lr << " train " << detail::fmt(r.train.total, 4);
        if (!val.empty())
          out << " val " << detail::fmt(r.val.loss.total, 4) << " err " << detail::fmt(r.val.err_pred_deg)
              << " deg (prior " << detail::fmt(r.val.err_prior_deg) << ")";
        out << '\n';
      });
      save_checkpoint(params, tr_out);
      if (!tr_history.empty())
        write_history_csv(history, tr_history);
      if (g.json_out)
      {
        const auto& last = history.back();
        json j{{"epochs", history.size()}, {"checkpoint", tr_out}, {"train_total", last.train.total}};
        if (!val.empty())
          j["val"] = {{"err_pred_deg", last.val.err_pred_deg}, {"err_img_deg", last.val.err_img_deg},
                      {"err_prior_deg", last.val.err_prior_deg}, {"mean_tau", last.val.mean_tau}};
        out << j.dump(2) << '\n';
      }
    };
  });

  // eval
  std::string ev_ckpt, ev_data, ev_preds, ev_upright = "arkit";
  auto* ev = app.add_subcommand("eval", "Method comparison on a dataset");
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint")->required();
  ev->add_option("--data", ev_data, "Dataset CSV")->required();
  ev->add_option("--predictions", ev_preds, "Write per-sample predictions CSV");
  ev->add_option("--upright-frame", ev_upright, "Frame of the upright constant: arkit or euroc");
  ev->callback([&] {
    action = [&] {
      const UprightFrame frame = parse_upright(ev_upright);
      const auto params = load_checkpoint(ev_ckpt);
      const Dataset data = read_dataset_csv(ev_data);
      if (data.empty())
        throw Error(ErrorKind::EmptyInput, ev_data + " has no samples");
      std::vector<UnitVec3> gt, prior;
      std::vector<Prediction> preds;
      std::vector<UnitVec3> imu_only, img_only;
      for (const auto& s : data)
      {
        const auto fused = forward(params, s.f, s.g_prior).out;
        imu_only.push_back(forward(params, s.f, s.g_prior, 0.0).out.g_pred);
        img_only.push_back(forward(params, s.f, s.g_prior, 1.0).out.g_pred);
        gt.push_back(s.g_star);
        prior.push_back(s.g_prior);
        preds.push_back({s.g_star, s.g_prior, fused.g_pred, fused.g_img, fused.g_corr, fused.tau,
                         s.prior_error_deg, s.nongravity_ratio});
      }
      std::vector<UnitVec3> fused;
      for (const auto& p : preds)
        fused.push_back(p.g_pred);
      const std::vector<MethodRow> rows{
        {"Assume Upright", summarize(angular_errors(assume_upright(data.size(), frame), gt))},
        {"IMU prior", summarize(angular_errors(prior, gt))},
        {"IMU-only (tau=0)", summarize(angular_errors(imu_only, gt))},
        {"Image-only (tau=1)", summarize(angular_errors(img_only, gt))},
        {"Fused", summarize(angular_errors(fused, gt))},
      };
      if (!ev_preds.empty())
        write_predictions(preds, ev_preds);
      if (g.json_out)
      {
        json j = json::object();
        for (const auto& r : rows)
          j[r.name] = to_json(r.summary);
        out << j.dump(2) << '\n';
      }
      else
        print_method_table(out, rows);
    };
  });

  // tilt-report
  std::string tl_preds, tl_edges = "0,60,120,180", tl_col = "pred", tl_csv;
  auto* tl = app.add_subcommand("tilt-report", "Errors binned by camera tilt");
  tl->add_option("--predictions", tl_preds, "Predictions CSV")->required();
  tl->add_option("--edges", tl_edges, "Tilt bin edges in degrees");
  tl->add_option("--column", tl_col, "Which estimate: pred, prior, img, corr");
  tl->add_option("--csv", tl_csv, "Also write the bins as CSV");
  tl->callback([&] {
    action = [&] {
      const auto edges = parse_edges(tl_edges);
      const auto p = read_predictions(tl_preds);
      const auto report = tilt_breakdown(column(p, prediction_field(tl_col)), column(p, &Prediction::g_gt), edges);
      if (!tl_csv.empty())
        write_tilt_csv(report, tl_csv);
      if (g.json_out)
        out << to_json(report).dump(2) << '\n';
      else
        print_tilt_report(out, report);
    };
  });

  // gate-diag
  std::string gd_preds, gd_err_edges, gd_r_edges;
  auto* gd = app.add_subcommand("gate-diag", "Mean gate value by prior error and non-gravity ratio");
  gd->add_option("--predictions", gd_preds, "Predictions CSV")->required();
  gd->add_option("--error-edges", gd_err_edges, "Prior-error bin edges (degrees)");
  gd->add_option("--ratio-edges", gd_r_edges, "Non-gravity ratio bin edges");
  gd->callback([&] {
    action = [&] {
      const auto p = read_predictions(gd_preds);
      std::vector<double> tau, err, r;
      for (const auto& x : p)
      {
        tau.push_back(x.tau);
        err.push_back(x.prior_error_deg);
        r.push_back(x.nongravity_ratio);
      }
      const auto ee = gd_err_edges.empty() ? default_prior_error_edges() : parse_edges(gd_err_edges);
      const auto re = gd_r_edges.empty() ? default_ratio_edges() : parse_edges(gd_r_edges);
      const auto d = gate_diagnostics(tau, err, r, ee, re);
      if (g.json_out)
        out << json{{"by_prior_error", to_json(d.by_prior_error)}, {"by_ratio", to_json(d.by_ratio)}}.dump(2) << '\n';
      else
      {
        print_gate_report(out, d.by_prior_error, "Prior error", "");
        out << '\n';
        print_gate_report(out, d.by_ratio, "Ratio |r|", "");
      }
    };
  });

  // stats
  std::vector<std::string> st_inputs;
  std::string st_edges = "0,60,120,180", st_density;
  auto* st = app.add_subcommand("stats", "Per-split orientation statistics of sequence records");
  st->add_option("inputs", st_inputs, "split:path entries (path is a record CSV or a directory)")->required();
  st->add_option("--edges", st_edges, "Tilt bin edges in degrees");
  st->add_option("--density", st_density, "Write an S2 density CSV of g_gt");
  st->callback([&] {
    action = [&] {
      const auto edges = parse_edges(st_edges);
      std::vector<SplitStats> rows;
      std::vector<UnitVec3> all_gt;
      for (const auto& in : st_inputs)
      {
        const auto colon = in.find(':');
        const std::string split = colon == std::string::npos ? "all" : in.substr(0, colon);
        const std::string path = colon == std::string::npos ? in : in.substr(colon + 1);
        const auto records = read_records(path);
        rows.push_back(split_stats(split, records, edges));
        for (const auto& rec : records)
          for (const auto& f : rec)
            all_gt.push_back(f.g_gt);
      }
      if (!st_density.empty())
        write_sphere_density_csv(sphere_density(all_gt), st_density);
      if (g.json_out)
      {
        json j = json::array();
        for (const auto& r : rows)
          j.push_back({{"split", r.split},
                       {"sequences", r.sequences},
                       {"frames", r.frames},
                       {"tilt_counts", r.tilt_counts},
                       {"prior_error", r.prior_error ? to_json(*r.prior_error) : json(nullptr)}});
        out << j.dump(2) << '\n';
      }
      else
        print_split_stats(out, rows, edges);
    };
  });

  // remap
  std::string rm_dir, rm_out;
  int rm_w = 1920, rm_h = 1440, rm_ow = 640, rm_oh = 480;
  auto* rm = app.add_subcommand("remap", "Undistort+resize lookup table from intrinsics");
  rm->add_option("--camera-dir", rm_dir, "Directory with camera_matrix.csv (and optional distortion.csv)")->required();
  rm->add_option("--width", rm_w, "Source image width");
  rm->add_option("--height", rm_h, "Source image height");
  rm->add_option("--out-width", rm_ow, "Output width");
  rm->add_option("--out-height", rm_oh, "Output height");
  rm->add_option("--out", rm_out, "Output table file")->required();
  rm->callback([&] {
    action = [&] {
      const auto k = read_camera_matrix(rm_dir, rm_w, rm_h);
      const auto table = build_remap_table(k, rm_ow, rm_oh);
      write_remap_table(table, rm_out);
      if (g.json_out)
        out << json{{"out", rm_out}, {"width", rm_ow}, {"height", rm_oh}}.dump() << '\n';
      else
        out << rm_ow << "x" << rm_oh << " remap table written to " << rm_out << '\n';
    };
  });

  // gradcheck
  GradcheckConfig gc;
  auto* gcmd = app.add_subcommand("gradcheck", "Finite-difference check of the loss gradient");
  gcmd->add_option("--seed", gc.seed, "RNG seed");
  gcmd->add_option("--configs", gc.configs, "Random configurations")->check(CLI::PositiveNumber);
  gcmd->callback([&] {
    action = [&] {
      const auto r = gradcheck(gc);
      if (g.json_out)
        out << json{{"configs", r.configs},          {"checked", r.checked},
                    {"failures", r.failures},        {"kinked", r.kinked},
                    {"max_rel_error", r.max_rel_error}, {"max_abs_error", r.max_abs_error},
                    {"passed", r.passed()}}
                 .dump(2)
            << '\n';
      else
        out << "configs " << r.configs << ", parameters checked " << r.checked << ", kinked " << r.kinked
            << ", failures " << r.failures << ", max rel error " << r.max_rel_error << ", max abs error "
            << r.max_abs_error << (r.passed() ? "  OK" : "  FAILED") << '\n';
      if (!r.passed())
        throw Error(ErrorKind::NoConvergence, "gradient check failed");
    };
  });

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp& e)
  {
    out << app.help();
    return kExitOk;
  }
  catch (const CLI::CallForAllHelp& e)
  {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  }
  catch (const CLI::ParseError& e)
  {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try
  {
    if (action)
      action();
  }
  catch (const Error& e)
  {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  }
  catch (const nlohmann::json::exception& e)
  {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  catch (const std::filesystem::filesystem_error& e)
  {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

} // namespace gravprior::cli
