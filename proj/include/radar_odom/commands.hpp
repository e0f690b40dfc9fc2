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

/**
 * \file commands.hpp
 * \brief The run / eval / synth / planarity subcommands.
 *
 * Each command takes a flat key=value Settings object. Defaults come from
 * the library structs; a config file and then individual overrides are
 * layered on top, and unknown keys are rejected. The fully resolved settings
 * are written back out as manifest.txt, which is itself a valid config file,
 * so `--config <out>/manifest.txt` repeats a run byte for byte.
 *
 * Every CSV starts with `# radar_odom <version> config_hash=<16 hex>` and a
 * header row. Exit codes: 0 success, 1 input error, 2 degenerate evaluation.
 */
#pragma once

#include "radar_odom/dataset_io.hpp"
#include "radar_odom/evaluation.hpp"
#include "radar_odom/pipeline.hpp"
#include "radar_odom/scenarios.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace radar_odom {

inline constexpr const char *kVersion = "1.0.0";

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitDegenerate = 2 };

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

class Settings {
 public:
  Settings() = default;
  Settings(std::initializer_list<std::pair<const std::string, std::string>> init) : values_(init) {}

  bool has(const std::string &key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string> &values() const { return values_; }

  /// Overrides a key that must already exist.
  void set(const std::string &key, const std::string &value) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw InputError("unknown setting '" + key + "'");
    it->second = value;
  }

  /// Applies `key=value`.
  void assign(std::string_view text, const std::string &where = "override") {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw InputError(where + ": expected key=value, got '" + std::string(text) + "'");
    const std::string key(detail::trim(text.substr(0, eq)));
    if (key.empty()) throw InputError(where + ": empty key");
    try {
      set(key, std::string(detail::trim(text.substr(eq + 1))));
    } catch (const InputError &e) {
      throw InputError(where + ": " + e.what());
    }
  }

  /// Layers a config file; '#' starts a comment line.
  void merge_file(const std::filesystem::path &path) {
    auto in = detail::open_input(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string_view t = detail::trim(line);
      if (t.empty() || t.front() == '#') continue;
      assign(t, path.string() + ":" + std::to_string(lineno));
    }
  }

  const std::string &str(const std::string &key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::logic_error("setting '" + key + "' has no default");
    return it->second;
  }

  double num(const std::string &key) const {
    double v = 0.0;
    if (!detail::parse_double(str(key), v)) throw InputError(key + ": not a number: '" + str(key) + "'");
    return v;
  }

  std::int64_t integer(const std::string &key) const {
    std::int64_t v = 0;
    if (!detail::parse_microseconds(str(key), v)) throw InputError(key + ": not an integer: '" + str(key) + "'");
    return v;
  }

  std::size_t count(const std::string &key) const {
    const std::int64_t v = integer(key);
    if (v < 0) throw InputError(key + ": must not be negative");
    return static_cast<std::size_t>(v);
  }

  bool flag(const std::string &key) const {
    const std::string &v = str(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InputError(key + ": expected true or false, got '" + v + "'");
  }

  std::vector<double> list(const std::string &key) const {
    std::vector<double> out;
    for (std::string_view part : detail::split(str(key), ',')) {
      double v = 0.0;
      if (!detail::parse_double(detail::trim(part), v)) throw InputError(key + ": bad list entry '" + std::string(part) + "'");
      out.push_back(v);
    }
    return out;
  }

  /// Sorted key=value lines; the hash covers exactly this text.
  std::string canonical() const {
    std::string s;
    for (const auto &[k, v] : values_) s += k + "=" + v + "\n";
    return s;
  }

  std::string hash() const {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical());
    return os.str();
  }

 private:
  std::map<std::string, std::string> values_;
};

namespace detail {

inline std::string fmt(double v) { return format_double(v); }
inline std::string fmt(std::size_t v) { return std::to_string(v); }

inline std::string provenance(const Settings &s) {
  return std::string("# radar_odom ") + kVersion + " config_hash=" + s.hash() + "\n";
}

inline std::ofstream open_csv(const std::filesystem::path &path, const Settings &s, const std::string &header) {
  auto out = open_output(path);
  out << provenance(s) << header << "\n";
  return out;
}

inline void write_manifest(const std::filesystem::path &path, const Settings &s, const std::string &extra = {}) {
  auto out = open_output(path);
  out << provenance(s) << extra << s.canonical();
}

inline void require(const Settings &s, const std::string &key) {
  if (s.str(key).empty()) throw InputError("missing required setting '" + key + "'");
}

inline std::filesystem::path prepare_out(const Settings &s) {
  require(s, "out");
  const std::filesystem::path out = s.str("out");
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw InputError("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

inline std::string fmt_fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace detail

/// Maps library exceptions to exit codes and prints the message.
template <typename Fn>
int guarded(std::ostream &err, Fn &&fn) {
  try {
    return fn();
  } catch (const DegenerateEvaluation &e) {
    err << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

// ---------------------------------------------------------------- run

inline Settings run_defaults() {
  using detail::fmt;
  const OdometryConfig c;
  return {
      {"mode", to_string(c.mode)},
      {"scans", ""},
      {"imu", ""},
      {"out", ""},
      {"range_resolution", "0.04"},
      {"frontend", to_string(c.frontend)},
      {"frontend.z_q", fmt(c.frontend_params.z_q)},
      {"frontend.smoothing_window", fmt(c.frontend_params.smoothing_window)},
      {"frontend.k", fmt(c.frontend_params.k)},
      {"frontend.min_power", fmt(c.frontend_params.min_power)},
      {"deskew", c.deskew ? "true" : "false"},
      {"icp.max_iterations", fmt(c.icp.max_iterations)},
      {"icp.convergence_epsilon", fmt(c.icp.convergence_epsilon)},
      {"icp.initial_threshold", fmt(c.icp.initial_threshold)},
      {"icp.min_motion_threshold", fmt(c.icp.min_motion_threshold)},
      {"map.voxel_size", fmt(c.map.voxel_size)},
      {"map.max_points_per_voxel", fmt(c.map.max_points_per_voxel)},
      {"map.max_range", fmt(c.map.max_range)},
      {"imu.max_gap_us", std::to_string(c.max_imu_gap)},
      {"imu.gravity_window", fmt(c.gravity_window)},
      {"velocity.update", to_string(c.velocity_update)},
      {"velocity.gain", fmt(c.velocity_gain)},
      {"seed", "0"},
  };
}

inline OdometryConfig odometry_config(const Settings &s) {
  OdometryConfig c;
  const std::string &mode = s.str("mode");
  if (mode == "radar_kissicp") c.mode = OdometryMode::radar_kissicp;
  else if (mode == "radar_imu") c.mode = OdometryMode::radar_imu;
  else throw InputError("mode: expected radar_kissicp or radar_imu, got '" + mode + "'");
  const std::string &fe = s.str("frontend");
  if (fe == "cen2018") c.frontend = FrontendKind::cen2018;
  else if (fe == "kstrongest") c.frontend = FrontendKind::kstrongest;
  else throw InputError("frontend: expected cen2018 or kstrongest, got '" + fe + "'");
  c.frontend_params.z_q = s.num("frontend.z_q");
  c.frontend_params.smoothing_window = s.count("frontend.smoothing_window");
  c.frontend_params.k = s.count("frontend.k");
  c.frontend_params.min_power = s.num("frontend.min_power");
  c.deskew = s.flag("deskew");
  c.icp.max_iterations = s.count("icp.max_iterations");
  c.icp.convergence_epsilon = s.num("icp.convergence_epsilon");
  c.icp.initial_threshold = s.num("icp.initial_threshold");
  c.icp.min_motion_threshold = s.num("icp.min_motion_threshold");
  c.map.voxel_size = s.num("map.voxel_size");
  c.map.max_points_per_voxel = s.count("map.max_points_per_voxel");
  c.map.max_range = s.num("map.max_range");
  c.max_imu_gap = s.integer("imu.max_gap_us");
  c.gravity_window = s.num("imu.gravity_window");
  const std::string &vu = s.str("velocity.update");
  if (vu == "differencing") c.velocity_update = VelocityUpdate::differencing;
  else if (vu == "complementary") c.velocity_update = VelocityUpdate::complementary;
  else throw InputError("velocity.update: expected differencing or complementary, got '" + vu + "'");
  c.velocity_gain = s.num("velocity.gain");
  if (!(c.map.voxel_size > 0) || !(c.map.max_range > 0)) throw InputError("map: voxel_size and max_range must be positive");
  if (c.frontend_params.smoothing_window == 0 || c.frontend_params.k == 0)
    throw InputError("frontend: smoothing_window and k must be positive");
  return c;
}

inline constexpr const char *kDiagnosticsHeader =
    "frame,timestamp,points,iterations,rmse,correspondences,converged,degenerate,imu_fallback,threshold,map_points";

/**
 * Runs the odometry over every scan of `scans`, in file-stem order. Inputs
 * are all read and checked before the first frame is processed.
 */
inline int cmd_run(const Settings &s, std::ostream &log, std::ostream &err) {
  return guarded(err, [&] {
    const OdometryConfig config = odometry_config(s);
    detail::require(s, "scans");
    const auto files = list_scan_files(s.str("scans"));
    if (files.empty()) throw InputError("no .png scans in " + s.str("scans"));
    std::vector<ImuSample> imu;
    if (!s.str("imu").empty()) imu = read_imu_csv(s.str("imu"));
    else if (config.mode == OdometryMode::radar_imu) throw InputError("mode radar_imu needs an IMU file (imu=...)");
    const double res = s.num("range_resolution");
    if (!(res > 0)) throw InputError("range_resolution must be positive");
    const auto out = detail::prepare_out(s);

    const auto t0 = std::chrono::steady_clock::now();
    RadarOdometry odom(config, std::move(imu));
    for (const auto &f : files) odom.process(read_polar_png(f, res));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_trajectory(out / "trajectory.txt", odom.trajectory());
    auto csv = detail::open_csv(out / "diagnostics.csv", s, kDiagnosticsHeader);
    std::size_t degenerate = 0, fallback = 0;
    const auto &results = odom.results();
    for (std::size_t i = 0; i < results.size(); ++i) {
      const FrameResult &r = results[i];
      degenerate += r.degenerate;
      fallback += r.imu_fallback;
      csv << i << ',' << r.timestamp << ',' << r.points << ',' << r.iterations << ',' << detail::fmt(r.rmse) << ','
          << r.correspondences << ',' << int(r.converged) << ',' << int(r.degenerate) << ',' << int(r.imu_fallback)
          << ',' << detail::fmt(r.threshold) << ',' << r.map_points << '\n';
    }
    detail::write_manifest(out / "manifest.txt", s, "# scans: " + std::to_string(files.size()) + "\n");
    log << "run: " << results.size() << " frames, " << degenerate << " degenerate, " << fallback
        << " imu fallbacks, " << detail::fmt_fixed(secs, 2) << " s -> " << out.string() << "\n";
    return int(kExitOk);
  });
}

// ---------------------------------------------------------------- planarity

inline constexpr const char *kOverlapHeader = "index,timestamp,overlap";
inline constexpr const char *kHistogramHeader = "bin,lower,upper,count";

namespace detail {

inline void write_overlaps(const std::filesystem::path &dir, const Settings &s, const Trajectory &gt,
                           const std::vector<double> &overlaps, std::size_t bins) {
  auto csv = open_csv(dir / "overlaps.csv", s, kOverlapHeader);
  for (std::size_t i = 0; i < overlaps.size(); ++i)
    csv << i << ',' << format_seconds(gt[i + 1].timestamp) << ',' << fmt(overlaps[i]) << '\n';
  auto hist = open_csv(dir / "histogram.csv", s, kHistogramHeader);
  const auto counts = overlap_histogram(overlaps, bins);
  for (std::size_t b = 0; b < counts.size(); ++b)
    hist << b << ',' << fmt(double(b) / double(bins)) << ',' << fmt(double(b + 1) / double(bins)) << ',' << counts[b]
         << '\n';
}

inline std::string planarity_summary(const std::vector<double> &overlaps) {
  double mean = 0.0;
  for (double o : overlaps) mean += o;
  mean /= static_cast<double>(overlaps.size());
  std::ostringstream os;
  os << "overlaps " << overlaps.size() << "\n"
     << "mean " << fmt(mean) << "\n"
     << "deviation_from_unity " << fmt(overlap_deviation(overlaps)) << "\n"
     << "mass_at_least_0.99 " << fmt(overlap_mass_above(overlaps, 0.99)) << "\n";
  return os.str();
}

}  // namespace detail

inline Settings planarity_defaults() {
  return {{"gt", ""}, {"out", ""}, {"angular_weight", "1"}, {"bins", "100"}};
}

/// Overlap CSV, histogram CSV and summary.txt for one trajectory.
inline int cmd_planarity(const Settings &s, std::ostream &log, std::ostream &err) {
  return guarded(err, [&] {
    detail::require(s, "gt");
    const Trajectory gt = read_trajectory(s.str("gt"));
    const std::size_t bins = s.count("bins");
    if (bins == 0) throw InputError("bins must be positive");
    const auto overlaps = planarity_overlap(gt, s.num("angular_weight"));
    const auto out = detail::prepare_out(s);
    detail::write_overlaps(out, s, gt, overlaps, bins);
    const std::string summary = detail::planarity_summary(overlaps);
    detail::open_output(out / "summary.txt") << detail::provenance(s) << summary;
    detail::write_manifest(out / "manifest.txt", s);
    log << summary;
    return int(kExitOk);
  });
}

// ---------------------------------------------------------------- eval

inline constexpr const char *kRpeHeader = "index,timestamp,trans_m,rot_rad";
inline constexpr const char *kKittiLengthsHeader = "length_m,segments,trans_pct,rot_deg_per_m";
inline constexpr const char *kKittiSegmentsHeader = "start_index,length_m,trans_pct,rot_deg_per_m";

inline Settings eval_defaults() {
  std::string lengths;
  for (double l : default_segment_lengths()) lengths += (lengths.empty() ? "" : ",") + detail::fmt(l);
  return {{"gt", ""},
          {"est", ""},
          {"out", ""},
          {"max_dt_us", std::to_string(kDefaultAssociationMaxDt)},
          {"lengths", lengths},
          {"angular_weight", "1"},
          {"bins", "100"}};
}

inline std::string format_report(const MetricsReport &r) {
  using detail::fmt;
  std::ostringstream os;
  os << "pairs " << r.pairs << "\n"
     << "dropped " << r.dropped << "\n"
     << "path_length_m " << fmt(r.ate_aligned.path_length) << "\n"
     << "ate_trans_rmse_m " << fmt(r.ate_aligned.trans_rmse) << "\n"
     << "ate_trans_pct " << fmt(r.ate_aligned.trans_pct) << "\n"
     << "ate_rot_rmse_rad " << fmt(r.ate_aligned.rot_rmse) << "\n"
     << "ate_rot_per_100m " << fmt(r.ate_aligned.rot_per_100m) << "\n"
     << "unaligned_trans_rmse_m " << fmt(r.ate_unaligned.trans_rmse) << "\n"
     << "unaligned_rot_rmse_rad " << fmt(r.ate_unaligned.rot_rmse) << "\n"
     << "kitti_trans_pct " << fmt(r.kitti.avg_trans_pct) << "\n"
     << "kitti_rot_deg_per_m " << fmt(r.kitti.avg_rot_deg_per_m) << "\n"
     << "kitti_segments " << r.kitti.segments.size() << "\n";
  return os.str();
}

/// Metrics report plus per-frame RPE, KITTI tables and planarity of gt.
inline int cmd_eval(const Settings &s, std::ostream &log, std::ostream &err) {
  return guarded(err, [&] {
    detail::require(s, "gt");
    detail::require(s, "est");
    const Trajectory gt = read_trajectory(s.str("gt"));
    const Trajectory est = read_trajectory(s.str("est"));
    const std::size_t bins = s.count("bins");
    if (bins == 0) throw InputError("bins must be positive");
    const MetricsReport r = evaluate(gt, est, s.list("lengths"), s.integer("max_dt_us"), s.num("angular_weight"));
    const auto out = detail::prepare_out(s);
    const std::string report = format_report(r);
    detail::open_output(out / "report.txt") << detail::provenance(s) << report;

    auto rpe = detail::open_csv(out / "rpe.csv", s, kRpeHeader);
    for (std::size_t i = 0; i < r.rpe.size(); ++i)
      rpe << i + 1 << ',' << detail::format_seconds(r.rpe[i].timestamp) << ',' << detail::fmt(r.rpe[i].trans) << ','
          << detail::fmt(r.rpe[i].rot) << '\n';
    auto lengths = detail::open_csv(out / "kitti_lengths.csv", s, kKittiLengthsHeader);
    for (const auto &l : r.kitti.per_length)
      lengths << detail::fmt(l.length) << ',' << l.count << ',' << detail::fmt(l.trans_pct) << ','
              << detail::fmt(l.rot_deg_per_m) << '\n';
    auto segs = detail::open_csv(out / "kitti_segments.csv", s, kKittiSegmentsHeader);
    for (const auto &g : r.kitti.segments)
      segs << g.start_index << ',' << detail::fmt(g.length) << ',' << detail::fmt(g.trans_pct) << ','
           << detail::fmt(g.rot_deg_per_m) << '\n';
    detail::write_overlaps(out, s, gt, r.planarity, bins);
    detail::write_manifest(out / "manifest.txt", s);
    log << report;
    return int(kExitOk);
  });
}

// ---------------------------------------------------------------- synth

inline Settings synth_defaults() {
  using detail::fmt;
  const SensorSpec spec;
  const NoiseConfig noise;
  const ScenarioOptions opt;
  return {
      {"scenario", "flat_loop"},
      {"seed", std::to_string(opt.seed)},
      {"out", ""},
      {"duration", "0"},
      {"ravine_depth", fmt(opt.ravine_depth)},
      {"speed", fmt(opt.speed)},
      {"sensor.n_azimuths", fmt(spec.n_azimuths)},
      {"sensor.range_resolution", fmt(spec.range_resolution)},
      {"sensor.max_range", fmt(spec.max_range)},
      {"sensor.sweep_period", fmt(spec.sweep_period)},
      {"sensor.imu_rate", fmt(spec.imu_rate)},
      // "default" keeps the scenario's own noise floor
      {"noise.floor_max", "default"},
      {"noise.blob_sigma_bins", fmt(noise.blob_sigma_bins)},
      {"noise.gyro_sigma", fmt(noise.gyro_sigma)},
      {"noise.accel_sigma", fmt(noise.accel_sigma)},
      {"noise.min_range", fmt(noise.min_range)},
  };
}

/// Builds the scenario described by synth settings.
inline Scenario scenario_from(const Settings &s) {
  ScenarioOptions opt;
  const std::int64_t seed = s.integer("seed");
  if (seed < 0) throw InputError("seed must not be negative");
  opt.seed = static_cast<std::uint64_t>(seed);
  opt.ravine_depth = s.num("ravine_depth");
  if (!(opt.ravine_depth > 0)) throw InputError("ravine_depth must be positive");
  opt.speed = s.num("speed");
  Scenario sc = make_scenario(s.str("scenario"), opt);
  sc.spec.n_azimuths = s.count("sensor.n_azimuths");
  sc.spec.range_resolution = s.num("sensor.range_resolution");
  sc.spec.max_range = s.num("sensor.max_range");
  sc.spec.sweep_period = s.num("sensor.sweep_period");
  sc.spec.imu_rate = s.num("sensor.imu_rate");
  sc.spec.validate();
  if (s.str("noise.floor_max") != "default") sc.noise.noise_floor_max = s.num("noise.floor_max");
  sc.noise.blob_sigma_bins = s.num("noise.blob_sigma_bins");
  sc.noise.gyro_sigma = s.num("noise.gyro_sigma");
  sc.noise.accel_sigma = s.num("noise.accel_sigma");
  sc.noise.min_range = s.num("noise.min_range");
  const double duration = s.num("duration");
  if (duration < 0) throw InputError("duration must not be negative");
  if (duration > 0) sc.duration = duration;
  return sc;
}

/**
 * Writes scans/<first row timestamp>.png, imu.csv, gt.txt and manifest.txt.
 * Scans are rendered and written one at a time.
 */
inline int cmd_synth(const Settings &s, std::ostream &log, std::ostream &err) {
  return guarded(err, [&] {
    const Scenario sc = scenario_from(s);
    const auto out = detail::prepare_out(s);
    const SyntheticSequence seq = sc.sequence(static_cast<std::uint64_t>(s.integer("seed")));
    for (std::size_t k = 0; k < seq.scan_count(); ++k) {
      const PolarScan scan = seq.scan(k);
      write_polar_png(out / "scans" / (std::to_string(scan.azimuth_timestamps.front()) + ".png"), scan);
    }
    write_imu_csv(out / "imu.csv", seq.imu(), detail::provenance(s).substr(2, detail::provenance(s).size() - 3));
    write_trajectory(out / "gt.txt", seq.ground_truth());
    std::ostringstream extra;
    extra << "# resolved: duration " << detail::fmt(sc.duration) << " s, noise floor "
          << detail::fmt(sc.noise.noise_floor_max) << ", " << seq.scan_count() << " scans, "
          << sc.world.landmarks.size() << " landmarks\n";
    detail::write_manifest(out / "manifest.txt", s, extra.str());
    log << "synth: " << sc.name << " seed " << s.str("seed") << ", " << seq.scan_count() << " scans -> "
        << out.string() << "\n";
    return int(kExitOk);
  });
}

}  // namespace radar_odom
