// Copyright 2026 The radar_odom Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "radar_odom/commands.hpp"
#include "support/metric_oracle.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace radar_odom {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path &p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::map<std::string, double> report_of(const fs::path &p) {
  std::map<std::string, double> out;
  for (const auto &l : lines_of(p)) {
    if (l.empty() || l[0] == '#') continue;
    std::istringstream in(l);
    std::string key;
    double v = 0;
    in >> key >> v;
    out[key] = v;
  }
  return out;
}

/// Data rows of a CSV after checking the provenance line and the header.
std::vector<std::vector<std::string>> csv_rows(const fs::path &p, const std::string &header) {
  const auto lines = lines_of(p);
  EXPECT_GE(lines.size(), 2u) << p;
  if (lines.size() < 2) return {};
  EXPECT_EQ(lines[0].rfind(std::string("# radar_odom ") + kVersion + " config_hash=", 0), 0u) << lines[0];
  EXPECT_EQ(lines[0].size(), std::string("# radar_odom  config_hash=").size() + std::string(kVersion).size() + 16);
  EXPECT_EQ(lines[1], header);
  const std::size_t fields = detail::split(header, ',').size();
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    std::vector<std::string> row;
    for (auto f : detail::split(lines[i], ',')) row.emplace_back(f);
    EXPECT_EQ(row.size(), fields) << p << " line " << i + 1;
    rows.push_back(row);
  }
  return rows;
}

double num(const std::string &s) {
  double v = 0;
  EXPECT_TRUE(detail::parse_double(s, v)) << s;
  return v;
}

class Commands : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("radar_odom_cmd_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  std::ostringstream log_, err_;
};

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
}

TEST_F(Commands, SettingsLayeringAndErrors) {
  Settings s = run_defaults();
  const std::string base_hash = s.hash();
  EXPECT_EQ(s.str("mode"), "radar_kissicp");
  EXPECT_EQ(s.str("icp.max_iterations"), "50");
  {
    std::ofstream f(dir_ / "a.conf");
    f << "# comment\n\n  mode = radar_imu  \nicp.max_iterations=30\n";
  }
  s.merge_file(dir_ / "a.conf");
  EXPECT_EQ(s.str("mode"), "radar_imu");
  EXPECT_EQ(odometry_config(s).icp.max_iterations, 30u);
  EXPECT_NE(s.hash(), base_hash);
  s.assign("mode=radar_kissicp");
  s.assign("icp.max_iterations=50");
  EXPECT_EQ(s.hash(), base_hash);

  {
    std::ofstream f(dir_ / "b.conf");
    f << "mode=radar_imu\nicp.iters=3\n";
  }
  try {
    s.merge_file(dir_ / "b.conf");
    FAIL();
  } catch (const InputError &e) {
    EXPECT_NE(std::string(e.what()).find("b.conf:2: unknown setting 'icp.iters'"), std::string::npos) << e.what();
  }
  EXPECT_THROW(s.assign("no equals sign"), InputError);
  s.set("deskew", "maybe");
  EXPECT_THROW(odometry_config(s), InputError);
  s.set("deskew", "false");
  s.set("mode", "lidar");
  EXPECT_THROW(odometry_config(s), InputError);
}

TEST_F(Commands, DefaultsMirrorLibraryConfig) {
  const OdometryConfig lib;
  const OdometryConfig c = odometry_config(run_defaults());
  EXPECT_EQ(c.mode, lib.mode);
  EXPECT_EQ(c.frontend, lib.frontend);
  EXPECT_EQ(c.frontend_params.z_q, lib.frontend_params.z_q);
  EXPECT_EQ(c.frontend_params.smoothing_window, lib.frontend_params.smoothing_window);
  EXPECT_EQ(c.icp.convergence_epsilon, lib.icp.convergence_epsilon);
  EXPECT_EQ(c.icp.initial_threshold, lib.icp.initial_threshold);
  EXPECT_EQ(c.map.voxel_size, lib.map.voxel_size);
  EXPECT_EQ(c.map.max_range, lib.map.max_range);
  EXPECT_EQ(c.max_imu_gap, lib.max_imu_gap);
  EXPECT_EQ(c.deskew, lib.deskew);
  EXPECT_EQ(c.velocity_update, lib.velocity_update);
}

// One shared synthetic fixture: two seconds of flat_loop, eight scans.
class SynthFixture : public Commands {
 protected:
  void SetUp() override {
    Commands::SetUp();
    Settings s = synth_defaults();
    s.set("scenario", "flat_loop");
    s.set("duration", "2");
    s.set("out", (dir_ / "data").string());
    ASSERT_EQ(cmd_synth(s, log_, err_), 0) << err_.str();
  }

  Settings run_settings(const std::string &mode, const std::string &out) const {
    Settings s = run_defaults();
    s.set("mode", mode);
    s.set("scans", (dir_ / "data" / "scans").string());
    s.set("imu", (dir_ / "data" / "imu.csv").string());
    s.set("out", (dir_ / out).string());
    return s;
  }
};

TEST_F(SynthFixture, SynthWritesScansImuGroundTruthAndManifest) {
  const auto files = list_scan_files(dir_ / "data" / "scans");
  ASSERT_EQ(files.size(), 8u);
  EXPECT_EQ(files[0].filename(), "0.png");
  EXPECT_EQ(files[1].filename(), "250000.png");
  const PolarScan scan = read_polar_png(files[3]);
  EXPECT_EQ(scan.n_azimuths(), 400u);
  EXPECT_EQ(scan.azimuth_timestamps.front(), 750'000);
  const auto imu = read_imu_csv(dir_ / "data" / "imu.csv");
  EXPECT_EQ(imu.size(), 201u);
  EXPECT_EQ(lines_of(dir_ / "data" / "imu.csv")[0].rfind("# radar_odom ", 0), 0u);
  EXPECT_EQ(read_trajectory(dir_ / "data" / "gt.txt").size(), 8u);

  // the manifest is a config that resolves to the same settings
  Settings again = synth_defaults();
  again.merge_file(dir_ / "data" / "manifest.txt");
  EXPECT_EQ(again.values().at("duration"), "2");
  EXPECT_EQ(lines_of(dir_ / "data" / "manifest.txt")[0], detail::provenance(again).substr(0, 47));
}

TEST_F(SynthFixture, RunImuModeWritesOnePosePerScan) {
  const Settings s = run_settings("radar_imu", "imu");
  ASSERT_EQ(cmd_run(s, log_, err_), 0) << err_.str();
  const Trajectory est = read_trajectory(dir_ / "imu" / "trajectory.txt");
  const Trajectory gt = read_trajectory(dir_ / "data" / "gt.txt");
  ASSERT_EQ(est.size(), 8u);
  for (std::size_t i = 0; i < est.size(); ++i) EXPECT_EQ(est[i].timestamp, gt[i].timestamp);
  const auto rows = csv_rows(dir_ / "imu" / "diagnostics.csv", kDiagnosticsHeader);
  ASSERT_EQ(rows.size(), 8u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i][0], std::to_string(i));
    EXPECT_EQ(rows[i][1], std::to_string(gt[i].timestamp));
    EXPECT_EQ(rows[i][7], "0");  // degenerate
    EXPECT_EQ(rows[i][8], "0");  // imu_fallback
  }
  EXPECT_EQ(lines_of(dir_ / "imu" / "diagnostics.csv")[0], detail::provenance(s).substr(0, 47));
  EXPECT_NE(log_.str().find("8 frames"), std::string::npos);
}

TEST_F(SynthFixture, RerunFromManifestIsByteIdentical) {
  ASSERT_EQ(cmd_run(run_settings("radar_kissicp", "kiss"), log_, err_), 0) << err_.str();
  const std::string traj = slurp(dir_ / "kiss" / "trajectory.txt");
  const std::string diag = slurp(dir_ / "kiss" / "diagnostics.csv");
  const std::string manifest = slurp(dir_ / "kiss" / "manifest.txt");
  Settings again = run_defaults();
  again.merge_file(dir_ / "kiss" / "manifest.txt");
  ASSERT_EQ(cmd_run(again, log_, err_), 0) << err_.str();
  EXPECT_EQ(slurp(dir_ / "kiss" / "trajectory.txt"), traj);
  EXPECT_EQ(slurp(dir_ / "kiss" / "diagnostics.csv"), diag);
  EXPECT_EQ(slurp(dir_ / "kiss" / "manifest.txt"), manifest);
}

TEST_F(SynthFixture, MissingImuFailsBeforeProcessing) {
  Settings s = run_settings("radar_imu", "noimu");
  s.set("imu", (dir_ / "absent.csv").string());
  EXPECT_EQ(cmd_run(s, log_, err_), 1);
  EXPECT_NE(err_.str().find("absent.csv"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "noimu"));
  s.set("imu", "");
  EXPECT_EQ(cmd_run(s, log_, err_), 1);
  EXPECT_FALSE(fs::exists(dir_ / "noimu"));
}

TEST_F(Commands, RunRejectsUnreadableInputs) {
  Settings s = run_defaults();
  s.set("out", (dir_ / "o").string());
  EXPECT_EQ(cmd_run(s, log_, err_), 1);  // no scans key
  s.set("scans", (dir_ / "nowhere").string());
  EXPECT_EQ(cmd_run(s, log_, err_), 1);
  fs::create_directories(dir_ / "empty");
  s.set("scans", (dir_ / "empty").string());
  EXPECT_EQ(cmd_run(s, log_, err_), 1);
  {
    std::ofstream f(dir_ / "empty" / "5.png");
    f << "not an image";
  }
  EXPECT_EQ(cmd_run(s, log_, err_), 1);
  EXPECT_NE(err_.str().find("Radar data format"), std::string::npos) << err_.str();
}

TEST_F(Commands, SynthSettingsReachTheScenario) {
  Settings s = synth_defaults();
  s.set("scenario", "ravine");
  s.set("ravine_depth", "3.5");
  s.set("sensor.n_azimuths", "200");
  s.set("noise.floor_max", "5");
  const Scenario sc = scenario_from(s);
  EXPECT_NEAR(evaluate_motion(sc.motion, sc.duration).pose.translation().z(), -3.5, 1e-12);
  EXPECT_EQ(sc.spec.n_azimuths, 200u);
  EXPECT_EQ(sc.noise.noise_floor_max, 5.0);
  EXPECT_EQ(scenario_from(synth_defaults()).noise.noise_floor_max, 0.0);  // flat_loop's own
  s.set("ravine_depth", "0");
  EXPECT_THROW(scenario_from(s), InputError);
  s.set("ravine_depth", "2");
  s.set("scenario", "moon_base");
  s.set("out", (dir_ / "x").string());
  EXPECT_EQ(cmd_synth(s, log_, err_), 1);
}

// Straight 30 m path with a drifting estimate.
struct DriftPair {
  Trajectory gt, est;
};

DriftPair drift_pair(std::size_t n = 61) {
  DriftPair d;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 1.0);
  Pose e;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t t = static_cast<std::int64_t>(i) * 250'000;
    const Pose g(so3_exp(Vec3(0, 0.02 * std::sin(0.3 * double(i)), 0.05 * double(i))),
                 Vec3(0.5 * double(i), std::sin(0.2 * double(i)), 0.1 * std::cos(0.1 * double(i))));
    if (i > 0) {
      const Pose step = d.gt.back().pose.inverse() * g;
      e = e * step * se3_exp(Twist(Vec3(noise(rng), noise(rng), noise(rng)) * 0.01, Vec3(0, 0, noise(rng)) * 0.002));
    } else {
      e = g;
    }
    d.gt.push_back({t, g});
    d.est.push_back({t, e});
  }
  return d;
}

std::vector<oracle::M4> mats(const Trajectory &t) {
  std::vector<oracle::M4> out;
  for (const auto &s : t) out.push_back(s.pose.matrix());
  return out;
}

TEST_F(Commands, EvalOfGroundTruthAgainstItselfIsZero) {
  const DriftPair d = drift_pair();
  write_trajectory(dir_ / "gt.txt", d.gt);
  Settings s = eval_defaults();
  s.set("gt", (dir_ / "gt.txt").string());
  s.set("est", (dir_ / "gt.txt").string());
  s.set("lengths", "5,10");
  s.set("out", (dir_ / "e").string());
  ASSERT_EQ(cmd_eval(s, log_, err_), 0) << err_.str();
  const auto r = report_of(dir_ / "e" / "report.txt");
  EXPECT_EQ(r.at("pairs"), 61);
  EXPECT_EQ(r.at("dropped"), 0);
  for (const char *k : {"ate_trans_rmse_m", "ate_rot_rmse_rad", "unaligned_trans_rmse_m", "kitti_trans_pct",
                        "kitti_rot_deg_per_m"})
    EXPECT_EQ(r.at(k), 0.0) << k;
  for (const auto &row : csv_rows(dir_ / "e" / "rpe.csv", kRpeHeader)) {
    EXPECT_EQ(num(row[2]), 0.0);
    EXPECT_EQ(num(row[3]), 0.0);
  }
}

TEST_F(Commands, EvalMatchesIndependentOracle) {
  const DriftPair d = drift_pair();
  write_trajectory(dir_ / "gt.txt", d.gt);
  write_trajectory(dir_ / "est.txt", d.est);
  Settings s = eval_defaults();
  s.set("gt", (dir_ / "gt.txt").string());
  s.set("est", (dir_ / "est.txt").string());
  s.set("lengths", "5,10,20");
  s.set("out", (dir_ / "e").string());
  ASSERT_EQ(cmd_eval(s, log_, err_), 0) << err_.str();

  // the oracle sees the trajectories exactly as written
  const auto gt = mats(read_trajectory(dir_ / "gt.txt"));
  const auto est = mats(read_trajectory(dir_ / "est.txt"));
  const auto r = report_of(dir_ / "e" / "report.txt");
  const auto a = oracle::ate(gt, est, true);
  const auto u = oracle::ate(gt, est, false);
  const auto k = oracle::kitti(gt, est, {5, 10, 20});
  EXPECT_NEAR(r.at("ate_trans_rmse_m"), a.rmse, 1e-9);
  EXPECT_NEAR(r.at("ate_trans_pct"), a.pct, 1e-9);
  EXPECT_NEAR(r.at("unaligned_trans_rmse_m"), u.rmse, 1e-9);
  EXPECT_NEAR(r.at("kitti_trans_pct"), k.trans_pct, 1e-9);
  EXPECT_NEAR(r.at("kitti_rot_deg_per_m"), k.rot_deg_per_m, 1e-9);
  EXPECT_EQ(r.at("kitti_segments"), k.segments);
  EXPECT_GT(a.rmse, 0.01);

  const auto rpe = oracle::rpe(gt, est, 1);
  const auto rows = csv_rows(dir_ / "e" / "rpe.csv", kRpeHeader);
  ASSERT_EQ(rows.size(), rpe.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i][0], std::to_string(i + 1));
    EXPECT_NEAR(num(rows[i][2]), rpe[i].trans, 1e-9);
    EXPECT_NEAR(num(rows[i][3]), rpe[i].rot, 1e-9);
  }

  const auto lengths = csv_rows(dir_ / "e" / "kitti_lengths.csv", kKittiLengthsHeader);
  ASSERT_EQ(lengths.size(), 3u);
  EXPECT_EQ(lengths[0][0], "5");
  std::size_t total = 0;
  for (const auto &row : lengths) total += std::stoul(row[1]);
  EXPECT_EQ(total, static_cast<std::size_t>(k.segments));
  EXPECT_EQ(csv_rows(dir_ / "e" / "kitti_segments.csv", kKittiSegmentsHeader).size(), total);
  EXPECT_EQ(csv_rows(dir_ / "e" / "overlaps.csv", kOverlapHeader).size(), 60u);
  EXPECT_EQ(csv_rows(dir_ / "e" / "histogram.csv", kHistogramHeader).size(), 100u);
}

TEST_F(Commands, EvalReportsDroppedPairsAndDegenerateExit) {
  DriftPair d = drift_pair();
  Trajectory late = d.est;
  for (auto &p : late) p.timestamp += 5'000'000;  // overlaps gt for the last 10 s only
  write_trajectory(dir_ / "gt.txt", d.gt);
  write_trajectory(dir_ / "late.txt", late);
  Settings s = eval_defaults();
  s.set("gt", (dir_ / "gt.txt").string());
  s.set("est", (dir_ / "late.txt").string());
  s.set("lengths", "2");
  s.set("out", (dir_ / "e").string());
  ASSERT_EQ(cmd_eval(s, log_, err_), 0) << err_.str();
  const auto r = report_of(dir_ / "e" / "report.txt");
  EXPECT_EQ(r.at("pairs"), 41);
  EXPECT_EQ(r.at("dropped"), 20);

  s.set("lengths", "500");  // longer than the path
  EXPECT_EQ(cmd_eval(s, log_, err_), 2);
  s.set("est", (dir_ / "missing.txt").string());
  EXPECT_EQ(cmd_eval(s, log_, err_), 1);
}

Trajectory steps(const std::function<Pose(std::size_t)> &pose_at, std::size_t n = 21) {
  Trajectory t;
  for (std::size_t i = 0; i < n; ++i) t.push_back({static_cast<std::int64_t>(i) * 100'000, pose_at(i)});
  return t;
}

int planarity_on(const fs::path &dir, const Trajectory &gt, std::ostream &log, std::ostream &err) {
  write_trajectory(dir / "gt.txt", gt);
  Settings s = planarity_defaults();
  s.set("gt", (dir / "gt.txt").string());
  s.set("out", (dir / "p").string());
  return cmd_planarity(s, log, err);
}

std::vector<std::size_t> histogram_counts(const fs::path &p) {
  std::vector<std::size_t> out;
  for (const auto &row : csv_rows(p, kHistogramHeader)) out.push_back(std::stoul(row[3]));
  return out;
}

TEST_F(Commands, PlanarityPlanarFixtureFillsTopBin) {
  const Trajectory gt = steps([](std::size_t i) {
    const double s = double(i);
    return Pose(so3_exp(Vec3(0, 0, 0.1 * s)), Vec3(s, 0.3 * s * s, 0));
  });
  ASSERT_EQ(planarity_on(dir_, gt, log_, err_), 0) << err_.str();
  const auto counts = histogram_counts(dir_ / "p" / "histogram.csv");
  ASSERT_EQ(counts.size(), 100u);
  EXPECT_EQ(counts[99], 20u);
  const auto summary = report_of(dir_ / "p" / "summary.txt");
  EXPECT_EQ(summary.at("deviation_from_unity"), 0.0);
  EXPECT_EQ(summary.at("mean"), 1.0);
  const auto rows = csv_rows(dir_ / "p" / "histogram.csv", kHistogramHeader);
  EXPECT_EQ(rows[0][1], "0");
  EXPECT_EQ(rows[99][2], "1");
}

TEST_F(Commands, PlanarityPureZFillsBottomBin) {
  const Trajectory gt = steps([](std::size_t i) { return Pose(Vec3(0, 0, 0.5 * double(i))); });
  ASSERT_EQ(planarity_on(dir_, gt, log_, err_), 0) << err_.str();
  const auto counts = histogram_counts(dir_ / "p" / "histogram.csv");
  EXPECT_EQ(counts[0], 20u);
  EXPECT_EQ(report_of(dir_ / "p" / "summary.txt").at("deviation_from_unity"), 1.0);
}

TEST_F(Commands, PlanarityMixedMatchesLibrary) {
  const Trajectory gt = steps([](std::size_t i) {
    const double s = double(i);
    return Pose(so3_exp(Vec3(0.05 * std::sin(s), 0.03 * s, 0.2 * s)), Vec3(s, std::cos(s), 0.2 * std::sin(2 * s)));
  });
  ASSERT_EQ(planarity_on(dir_, gt, log_, err_), 0) << err_.str();
  const auto expected = planarity_overlap(read_trajectory(dir_ / "gt.txt"));
  const auto rows = csv_rows(dir_ / "p" / "overlaps.csv", kOverlapHeader);
  ASSERT_EQ(rows.size(), expected.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(num(rows[i][2]), expected[i]) << i;
  const auto counts = histogram_counts(dir_ / "p" / "histogram.csv");
  EXPECT_EQ(counts, overlap_histogram(expected));
  EXPECT_NEAR(report_of(dir_ / "p" / "summary.txt").at("deviation_from_unity"), overlap_deviation(expected), 1e-15);
}

TEST_F(Commands, PlanarityNeedsTwoPoses) {
  EXPECT_EQ(planarity_on(dir_, steps([](std::size_t) { return Pose(); }, 1), log_, err_), 2);
}

}  // namespace
}  // namespace radar_odom
