/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#include "cli_app.hpp"
#include "support/sim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace gravprior;
using gravprior::sim::random_direction;
using gravprior::sim::scratch_dir;
namespace fs = std::filesystem;

namespace
{

struct Result
{
  int code{0};
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "gravprior");
  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const fs::path& p)
{
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);)
    ++n;
  return n;
}

UnitVec3 with_tilt(double deg)
{
  const double t = deg * std::numbers::pi / 180.0;
  return normalize(Vec3{std::sin(t), 0.0, std::cos(t)});
}

const fs::path kFixtures = GRAVPRIOR_FIXTURES;

} // namespace

TEST(Cli, ExitCodeMapping)
{
  EXPECT_EQ(cli::exit_code_for(ErrorKind::InvalidArgument), cli::kExitUsage);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::MissingFile), cli::kExitData);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::MalformedRow), cli::kExitData);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::NoConvergence), cli::kExitNumeric);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::DegenerateVector), cli::kExitNumeric);
}

TEST(Cli, UsageErrors)
{
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"remap"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"gradcheck", "--configs", "0"}).code, cli::kExitUsage);
  const auto help = run_cli({"--help"});
  EXPECT_EQ(help.code, cli::kExitOk);
  EXPECT_NE(help.out.find("gradcheck"), std::string::npos);
}

TEST(Cli, Gradcheck)
{
  const auto r = run_cli({"--json", "gradcheck", "--seed", "3", "--configs", "3"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["configs"], 3);
}

TEST(Cli, StatsTiltCounts)
{
  const auto dir = scratch_dir("cli_stats");
  SequenceRecord rec;
  rec.id = "seq";
  for (double t : {30.0, 90.0, 150.0})
  {
    LabeledFrame f;
    f.t = t;
    f.g_gt = with_tilt(t);
    f.g_prior = f.g_gt;
    f.tilt_deg = t;
    rec.frames.push_back(f);
  }
  write_record_csv(rec, dir / "rec" / "seq.csv");
  const auto r = run_cli({"--json", "stats", "train:" + (dir / "rec").string(), "--density",
                          (dir / "density.csv").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["split"], "train");
  EXPECT_EQ(j[0]["frames"], 3);
  EXPECT_EQ(j[0]["tilt_counts"], (std::vector<int>{1, 1, 1}));
  EXPECT_EQ(line_count(dir / "density.csv"), 1u + 18u * 36u);

  const auto text = run_cli({"stats", (dir / "rec" / "seq.csv").string(), "--edges", "0,90,180"});
  ASSERT_EQ(text.code, cli::kExitOk) << text.err;
  EXPECT_NE(text.out.find("all"), std::string::npos);

  EXPECT_EQ(run_cli({"stats", (dir / "missing.csv").string()}).code, cli::kExitData);
  EXPECT_EQ(run_cli({"stats", (dir / "rec").string(), "--edges", "0,90,90"}).code, cli::kExitUsage);
}

TEST(Cli, TrainEvalPipeline)
{
  const auto dir = scratch_dir("cli_pipeline");
  const std::string d = dir.string();
  auto r = run_cli({"--json", "synth", "--out-dir", d, "--n_train", "96", "--n_val", "48", "--C", "32"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["train"], 96);
  EXPECT_EQ(line_count(dir / "val.csv"), 49u);

  r = run_cli({"--threads", "2", "--json", "train", "--train", d + "/train.csv", "--val", d + "/val.csv", "--out",
               d + "/model.gckp", "--history", d + "/history.csv", "--epochs", "2", "--batch", "32"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto tj = nlohmann::json::parse(r.out);
  EXPECT_EQ(tj["epochs"], 2);
  EXPECT_TRUE(tj["val"]["mean_tau"].is_number());
  EXPECT_EQ(line_count(dir / "history.csv"), 3u);

  r = run_cli({"--json", "eval", "--checkpoint", d + "/model.gckp", "--data", d + "/val.csv", "--predictions",
               d + "/preds.csv"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto ej = nlohmann::json::parse(r.out);
  for (const char* k : {"Assume Upright", "IMU prior", "IMU-only (tau=0)", "Image-only (tau=1)", "Fused"})
    EXPECT_EQ(ej[k]["count"], 48) << k;
  EXPECT_EQ(line_count(dir / "preds.csv"), 49u);

  const auto preds = cli::read_predictions(dir / "preds.csv");
  ASSERT_EQ(preds.size(), 48u);
  cli::write_predictions(preds, dir / "preds2.csv");
  EXPECT_EQ(cli::read_predictions(dir / "preds2.csv").front().tau, preds.front().tau);

  r = run_cli({"--json", "tilt-report", "--predictions", d + "/preds.csv", "--column", "prior", "--csv",
               d + "/tilt.csv"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["total"], 48);
  EXPECT_EQ(line_count(dir / "tilt.csv"), 4u);

  r = run_cli({"gate-diag", "--predictions", d + "/preds.csv", "--ratio-edges", "0,0.1,inf"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("mean tau"), std::string::npos);

  r = run_cli({"eval", "--checkpoint", d + "/model.gckp", "--data", d + "/val.csv", "--upright-frame", "sideways"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"tilt-report", "--predictions", d + "/preds.csv", "--column", "nope"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"eval", "--checkpoint", d + "/absent.gckp", "--data", d + "/val.csv"}).code, cli::kExitData);
  EXPECT_EQ(run_cli({"synth", "--out-dir", d, "--no_such_key", "1"}).code, cli::kExitUsage);
}

TEST(Cli, AlignRecoversRotation)
{
  const auto dir = scratch_dir("cli_align");
  const Rot3 r = rot_z(0.4) * euler_rot(Axis::X, -0.3);
  std::mt19937_64 rng(21);
  {
    std::ofstream o(dir / "pairs.csv");
    o << "g_cam_x,g_cam_y,g_cam_z,g_imu_x,g_imu_y,g_imu_z\n";
    for (int i = 0; i < 50; ++i)
    {
      const auto gi = random_direction(rng).vec();
      const auto gc = r * gi;
      o << csv::join({gc.x, gc.y, gc.z, gi.x, gi.y, gi.z}) << '\n';
    }
  }
  const auto res = run_cli({"align", "--pairs", (dir / "pairs.csv").string()});
  ASSERT_EQ(res.code, cli::kExitOk) << res.err;
  const auto j = nlohmann::json::parse(res.out);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      EXPECT_NEAR(j["R_imu_to_cam"][a][b].get<double>(), r(a, b), 1e-9);
  EXPECT_LT(j["residual_rms_deg"].get<double>(), 1e-6);
}

TEST(Cli, MahonyOnFixture)
{
  const auto dir = scratch_dir("cli_mahony");
  const auto r = run_cli({"mahony", "--imu", (kFixtures / "stray_small" / "imu.csv").string(), "--out",
                          (dir / "g.csv").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(line_count(dir / "g.csv"), 9u);
  const auto rows = csv::read_numeric(dir / "g.csv", 4, 4);
  for (const auto& row : rows)
  {
    const double n = std::hypot(row.values[1], row.values[2], row.values[3]);
    EXPECT_NEAR(n, 1.0, 1e-9);
  }
  EXPECT_EQ(run_cli({"mahony", "--imu", (dir / "none.csv").string(), "--out", (dir / "x.csv").string()}).code,
            cli::kExitData);
  EXPECT_EQ(run_cli({"mahony", "--imu", (kFixtures / "stray_small" / "imu.csv").string(), "--out",
                     (dir / "x.csv").string(), "--kp", "-1"})
              .code,
            cli::kExitUsage);
}

TEST(Cli, Remap)
{
  const auto dir = scratch_dir("cli_remap");
  const auto r = run_cli({"--json", "remap", "--camera-dir", (kFixtures / "stray_small").string(), "--out-width",
                          "64", "--out-height", "48", "--out", (dir / "t.grmp").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto t = read_remap_table(dir / "t.grmp");
  EXPECT_EQ(t.out_width, 64);
  EXPECT_EQ(t.out_height, 48);
  EXPECT_EQ(run_cli({"remap", "--camera-dir", dir.string(), "--out", (dir / "u.grmp").string()}).code,
            cli::kExitData);
}
