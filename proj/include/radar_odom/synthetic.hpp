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
 * \file synthetic.hpp
 * \brief Deterministic synthetic radar/IMU sequences with exact ground truth.
 *
 * Motion is given as position and ZYX Euler angles evaluated on second-order
 * jets, so velocity, acceleration and body rates come out analytically.
 *
 * Landmarks are vertical poles: a sweep hits a pole where the pole crosses
 * the sensor plane, so tilted sensors still see them. Each azimuth row is
 * rendered with the pose at that row's own timestamp, which bakes in the
 * intra-sweep motion skew.
 */
#pragma once

#include "radar_odom/dataset_io.hpp"
#include "radar_odom/evaluation.hpp"
#include "radar_odom/geometry.hpp"
#include "radar_odom/imu_preint.hpp"
#include "radar_odom/radar_frontend.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace radar_odom {

/// Value with first and second time derivatives.
struct Jet2 {
  double v = 0.0, d = 0.0, dd = 0.0;

  static Jet2 constant(double c) { return {c, 0.0, 0.0}; }
  static Jet2 variable(double t) { return {t, 1.0, 0.0}; }
};

inline Jet2 operator+(const Jet2 &a, const Jet2 &b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
inline Jet2 operator-(const Jet2 &a, const Jet2 &b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
inline Jet2 operator-(const Jet2 &a) { return {-a.v, -a.d, -a.dd}; }
inline Jet2 operator*(const Jet2 &a, const Jet2 &b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
}
inline Jet2 operator+(const Jet2 &a, double c) { return {a.v + c, a.d, a.dd}; }
inline Jet2 operator+(double c, const Jet2 &a) { return a + c; }
inline Jet2 operator-(const Jet2 &a, double c) { return {a.v - c, a.d, a.dd}; }
inline Jet2 operator-(double c, const Jet2 &a) { return {c - a.v, -a.d, -a.dd}; }
inline Jet2 operator*(const Jet2 &a, double c) { return {a.v * c, a.d * c, a.dd * c}; }
inline Jet2 operator*(double c, const Jet2 &a) { return a * c; }
inline Jet2 operator/(const Jet2 &a, double c) { return a * (1.0 / c); }

/// Applies f with f(u), f'(u), f''(u) given, by the chain rule.
inline Jet2 chain(const Jet2 &u, double f, double f1, double f2) {
  return {f, f1 * u.d, f2 * u.d * u.d + f1 * u.dd};
}
inline Jet2 sin(const Jet2 &u) { return chain(u, std::sin(u.v), std::cos(u.v), -std::sin(u.v)); }
inline Jet2 cos(const Jet2 &u) { return chain(u, std::cos(u.v), -std::sin(u.v), -std::cos(u.v)); }
inline Jet2 atan(const Jet2 &u) {
  const double q = 1.0 + u.v * u.v;
  return chain(u, std::atan(u.v), 1.0 / q, -2.0 * u.v / (q * q));
}

/// C2 step from 0 at u <= 0 to 1 at u >= 1 (quintic smootherstep).
inline Jet2 smootherstep(const Jet2 &u) {
  if (u.v <= 0.0) return Jet2::constant(0.0);
  if (u.v >= 1.0) return Jet2::constant(1.0);
  const double s = u.v;
  const double f = s * s * s * (s * (6.0 * s - 15.0) + 10.0);
  const double f1 = 30.0 * s * s * (s - 1.0) * (s - 1.0);
  const double f2 = 60.0 * s * (2.0 * s * s - 3.0 * s + 1.0);
  return chain(u, f, f1, f2);
}

/// Distance travelled when speed ramps from 0 to `speed` with a smootherstep
/// profile over [t0, t0 + ramp] and stays constant afterwards.
inline Jet2 ramp_distance(const Jet2 &t, double t0, double ramp, double speed) {
  if (t.v <= t0) return Jet2::constant(0.0);
  if (t.v >= t0 + ramp) return speed * (t - (t0 + 0.5 * ramp));
  const Jet2 s = (t - t0) / ramp;
  const Jet2 s2 = s * s, s4 = s2 * s2;
  return (speed * ramp) * (s4 * s2 - 3.0 * s4 * s + 2.5 * s4);
}

struct MotionJets {
  Jet2 x, y, z;             // m, world
  Jet2 roll, pitch, yaw;    // rad, ZYX: R = Rz(yaw) Ry(pitch) Rx(roll)
};

/// Maps time (seconds since sequence start, as a jet) to motion jets.
using MotionModel = std::function<MotionJets(const Jet2 &)>;

struct KinematicState {
  Pose pose;
  Vec3 velocity = Vec3::Zero();          // world
  Vec3 acceleration = Vec3::Zero();      // world
  Vec3 angular_velocity = Vec3::Zero();  // body
};

inline Rotation rotation_from_euler(double roll, double pitch, double yaw) {
  return so3_exp(Vec3(0, 0, yaw)) * so3_exp(Vec3(0, pitch, 0)) * so3_exp(Vec3(roll, 0, 0));
}

inline KinematicState evaluate_motion(const MotionModel &model, double t_s) {
  const MotionJets m = model(Jet2::variable(t_s));
  KinematicState k;
  k.pose = Pose(rotation_from_euler(m.roll.v, m.pitch.v, m.yaw.v), Vec3(m.x.v, m.y.v, m.z.v));
  k.velocity = Vec3(m.x.d, m.y.d, m.z.d);
  k.acceleration = Vec3(m.x.dd, m.y.dd, m.z.dd);
  const double sr = std::sin(m.roll.v), cr = std::cos(m.roll.v);
  const double sp = std::sin(m.pitch.v), cp = std::cos(m.pitch.v);
  k.angular_velocity = Vec3(m.roll.d - m.yaw.d * sp, m.pitch.d * cr + m.yaw.d * sr * cp,
                            -m.pitch.d * sr + m.yaw.d * cr * cp);
  return k;
}

struct SensorSpec {
  std::size_t n_azimuths = 400;
  double range_resolution = 0.04;  // m
  double max_range = 270.0;        // m
  double sweep_period = 0.25;      // s
  double imu_rate = 100.0;         // Hz

  std::size_t n_range_bins() const { return static_cast<std::size_t>(std::llround(max_range / range_resolution)); }
  std::int64_t sweep_us() const { return std::llround(sweep_period * 1e6); }

  void validate() const {
    if (n_azimuths == 0 || !(range_resolution > 0) || !(max_range > 0) || !(sweep_period > 0) || !(imu_rate > 0))
      throw InputError("SensorSpec: all fields must be positive");
  }
};

struct Landmark {
  Vec3 position = Vec3::Zero();
  double reflectivity = 200.0;  // (0, 255]
  double half_height = std::numeric_limits<double>::infinity();  // pole extent about position.z
};

/// Straight channel with vertical walls. While the sensor is inside it, only
/// landmarks inside the channel are visible and every azimuth that meets a
/// wall gets a wall return.
struct Ravine {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double heading = 0.0;  // rad, channel axis direction
  double length = 100.0;
  double width = 8.0;
  double depth = 2.0;    // descent of the floor, used by the scenario motion
  double wall_reflectivity = 100.0;

  Eigen::Vector2d to_local(const Eigen::Vector2d &p) const {
    const Eigen::Vector2d d = p - center;
    const double c = std::cos(heading), s = std::sin(heading);
    return {c * d.x() + s * d.y(), -s * d.x() + c * d.y()};
  }
  bool contains(const Vec3 &p) const {
    const Eigen::Vector2d l = to_local(p.head<2>());
    return std::abs(l.x()) <= 0.5 * length && std::abs(l.y()) < 0.5 * width;
  }
  /// Distance along a ray from inside the channel to the first wall, if the
  /// wall exists there.
  std::optional<double> wall_hit(const Vec3 &origin, const Vec3 &direction) const {
    const Eigen::Vector2d o = to_local(origin.head<2>());
    const double c = std::cos(heading), s = std::sin(heading);
    const Eigen::Vector2d d(c * direction.x() + s * direction.y(), -s * direction.x() + c * direction.y());
    if (std::abs(d.y()) < 1e-12) return std::nullopt;
    const double wall = d.y() > 0 ? 0.5 * width : -0.5 * width;
    const double dist = (wall - o.y()) / d.y();
    if (std::abs(o.x() + dist * d.x()) > 0.5 * length) return std::nullopt;
    return dist;
  }
};

struct SyntheticWorld {
  std::vector<Landmark> landmarks;
  std::optional<Ravine> ravine;
};

struct NoiseConfig {
  double noise_floor_max = 20.0;   // uniform [0, max] added to every bin
  double blob_sigma_bins = 1.5;
  double gyro_sigma = 0.0;         // rad/s, white
  double accel_sigma = 0.0;        // m/s^2, white
  double min_range = 1.0;          // m, returns closer than this are ignored

  static NoiseConfig zero() {
    NoiseConfig n;
    n.noise_floor_max = 0.0;
    return n;
  }
};

struct SyntheticData {
  std::vector<PolarScan> scans;
  std::vector<ImuSample> imu;
  Trajectory ground_truth;
};

/**
 * Lazily renders the scans of a synthetic sequence. Scan k covers
 * [k * sweep, (k + 1) * sweep) us; row i is captured at k * sweep + i * sweep / n
 * and looks along azimuth counter i * 5600 / n. Noise for scan k comes from
 * its own generator seeded with (seed, k).
 */
class SyntheticSequence {
 public:
  SyntheticSequence(SyntheticWorld world, MotionModel motion, SensorSpec spec, NoiseConfig noise,
                    std::uint64_t seed, double duration_s)
      : world_(std::move(world)), motion_(std::move(motion)), spec_(spec), noise_(noise), seed_(seed),
        duration_s_(duration_s) {
    spec_.validate();
    for (const auto &l : world_.landmarks)
      if (!(l.reflectivity > 0.0 && l.reflectivity <= 255.0))
        throw InputError("SyntheticWorld: landmark reflectivity must lie in (0, 255]");
  }

  const SensorSpec &spec() const { return spec_; }
  const SyntheticWorld &world() const { return world_; }
  double duration() const { return duration_s_; }

  std::size_t scan_count() const {
    return static_cast<std::size_t>(std::floor(duration_s_ * 1e6 / static_cast<double>(spec_.sweep_us())));
  }

  std::int64_t row_time(std::size_t k, std::size_t i) const {
    const std::int64_t sweep = spec_.sweep_us();
    return static_cast<std::int64_t>(k) * sweep +
           static_cast<std::int64_t>(i) * sweep / static_cast<std::int64_t>(spec_.n_azimuths);
  }

  std::int64_t center_time(std::size_t k) const { return row_time(k, spec_.n_azimuths / 2); }

  KinematicState state_at(std::int64_t t_us) const { return evaluate_motion(motion_, static_cast<double>(t_us) * 1e-6); }

  PolarScan scan(std::size_t k) const {
    const std::size_t n_az = spec_.n_azimuths;
    const std::size_t n_bins = spec_.n_range_bins();
    PolarScan s;
    s.scan_id = static_cast<std::int64_t>(k);
    s.range_resolution = spec_.range_resolution;
    s.n_range_bins = n_bins;
    s.azimuth_timestamps.resize(n_az);
    s.azimuth_angles.resize(n_az);
    s.intensities.assign(n_az * n_bins, 0);

    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(k), 0x5ca7u};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> floor_noise(0.0, noise_.noise_floor_max);

    const double two_pi = 2.0 * 3.14159265358979323846;
    const double step = two_pi / static_cast<double>(n_az);
    std::vector<double> power(n_bins);
    for (std::size_t i = 0; i < n_az; ++i) {
      const std::int64_t t = row_time(k, i);
      const auto counter = static_cast<std::uint16_t>(i * kSweepCounterModulus / n_az);
      const double azimuth = azimuth_from_counter(counter);
      s.azimuth_timestamps[i] = t;
      s.azimuth_angles[i] = azimuth;
      std::fill(power.begin(), power.end(), 0.0);

      const Pose pose = state_at(t).pose;
      const Rotation r_inv = pose.rotation().inverse();
      const Vec3 up = r_inv * Vec3::UnitZ();
      const bool in_ravine = world_.ravine && world_.ravine->contains(pose.translation());

      for (const Landmark &l : world_.landmarks) {
        if (in_ravine && !world_.ravine->contains(l.position)) continue;
        if (std::abs(up.z()) < 1e-6) continue;
        const Vec3 a = r_inv * (l.position - pose.translation());
        const double along = -a.z() / up.z();
        if (std::abs(along) > l.half_height) continue;
        const Vec3 hit = a + along * up;
        const double range = std::hypot(hit.x(), hit.y());
        if (range < noise_.min_range || range > spec_.max_range) continue;
        double az = std::atan2(hit.y(), hit.x());
        if (az < 0) az += two_pi;
        const auto row = static_cast<std::size_t>(std::llround(az / step)) % n_az;
        if (row != i) continue;
        deposit(power, range, l.reflectivity);
      }
      if (in_ravine) {
        const Vec3 dir = pose.rotation() * Vec3(std::cos(azimuth), std::sin(azimuth), 0.0);
        if (const auto d = world_.ravine->wall_hit(pose.translation(), dir);
            d && *d >= noise_.min_range && *d <= spec_.max_range)
          deposit(power, *d, world_.ravine->wall_reflectivity);
      }

      auto out = s.row(i);
      for (std::size_t b = 0; b < n_bins; ++b) {
        double v = power[b];
        if (noise_.noise_floor_max > 0.0) v += floor_noise(rng);
        out[b] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
    return s;
  }

  std::vector<ImuSample> imu() const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32), 0x1a0u};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<ImuSample> out;
    const auto count = static_cast<std::size_t>(std::floor(duration_s_ * spec_.imu_rate + 1e-9));
    for (std::size_t j = 0; j <= count; ++j) {
      const auto t = static_cast<std::int64_t>(std::llround(static_cast<double>(j) * 1e6 / spec_.imu_rate));
      const KinematicState k = state_at(t);
      ImuSample s;
      s.timestamp = t;
      s.angular_velocity = k.angular_velocity;
      s.linear_acceleration = k.pose.rotation().inverse() * (k.acceleration - gravity_vector());
      if (noise_.gyro_sigma > 0.0 || noise_.accel_sigma > 0.0) {
        for (int c = 0; c < 3; ++c) s.angular_velocity[c] += noise_.gyro_sigma * gauss(rng);
        for (int c = 0; c < 3; ++c) s.linear_acceleration[c] += noise_.accel_sigma * gauss(rng);
      }
      out.push_back(s);
    }
    return out;
  }

  /// Poses at the sweep centres.
  Trajectory ground_truth() const {
    Trajectory gt;
    for (std::size_t k = 0; k < scan_count(); ++k) gt.push_back({center_time(k), state_at(center_time(k)).pose});
    return gt;
  }

 private:
  void deposit(std::vector<double> &power, double range, double amplitude) const {
    const double sigma = noise_.blob_sigma_bins;
    const double c = range / spec_.range_resolution - 0.5;
    const auto lo = static_cast<long>(std::floor(c - 5.0 * sigma));
    const auto hi = static_cast<long>(std::ceil(c + 5.0 * sigma));
    for (long b = std::max(0L, lo); b <= hi && b < static_cast<long>(power.size()); ++b) {
      const double u = (static_cast<double>(b) - c) / sigma;
      power[static_cast<std::size_t>(b)] += amplitude * std::exp(-0.5 * u * u);
    }
  }

  SyntheticWorld world_;
  MotionModel motion_;
  SensorSpec spec_;
  NoiseConfig noise_;
  std::uint64_t seed_;
  double duration_s_;
};

/// Eager generation of a whole sequence. Intended for short sequences; long
/// ones should be rendered scan by scan through SyntheticSequence.
inline SyntheticData synth_generate(const SyntheticWorld &world, const MotionModel &motion, const SensorSpec &spec,
                                    const NoiseConfig &noise, std::uint64_t seed, double duration_s) {
  const SyntheticSequence seq(world, motion, spec, noise, seed, duration_s);
  SyntheticData d;
  for (std::size_t k = 0; k < seq.scan_count(); ++k) d.scans.push_back(seq.scan(k));
  d.imu = seq.imu();
  d.ground_truth = seq.ground_truth();
  return d;
}

}  // namespace radar_odom
