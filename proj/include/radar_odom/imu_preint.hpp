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
 * \file imu_preint.hpp
 * \brief IMU preintegration between radar frames and the resulting prediction.
 *
 * Samples are held constant (zero-order hold) from their timestamp to the next
 * one, and each held interval is integrated in closed form:
 *
 *   dR <- dR * Exp(w dt)
 *   dv <- dv + dR * J(w dt) * a * dt
 *   dp <- dp + dv * dt + dR * H(w dt) * a * dt^2
 *
 * with J the SO(3) left Jacobian (the integral of Exp over the interval) and
 * H its second integral. For w = 0 this is the familiar
 * dv += a dt, dp += v dt + a dt^2 / 2.
 */
#pragma once

#include "radar_odom/errors.hpp"
#include "radar_odom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace radar_odom {

inline constexpr double kGravity = 9.81;  // m/s^2, world z up

inline Vec3 gravity_vector() { return Vec3(0.0, 0.0, -kGravity); }

struct ImuSample {
  std::int64_t timestamp = 0;  // us
  Vec3 angular_velocity = Vec3::Zero();     // rad/s, body
  Vec3 linear_acceleration = Vec3::Zero();  // m/s^2, body, specific force
};

struct PreintegratedDelta {
  Rotation delta_rotation;
  Vec3 delta_velocity = Vec3::Zero();
  Vec3 delta_position = Vec3::Zero();
  double delta_time = 0.0;  // s
  std::size_t sample_count = 0;
};

struct NavState {
  Pose pose;                        // body in world
  Vec3 velocity = Vec3::Zero();     // world frame, m/s
};

inline constexpr std::int64_t kDefaultMaxImuGap = 50'000;  // us

namespace detail {

/// First and second integrals of Exp(w tau) over a unit interval, theta = w dt.
inline void zoh_integrals(const Vec3 &theta, Mat3 &first, Mat3 &second) {
  const double phi = theta.norm();
  const Mat3 k = skew(theta);
  const Mat3 k2 = k * k;
  double c1, c2, c3, c4;
  if (phi < 1e-3) {
    const double p2 = phi * phi;
    c1 = 0.5 - p2 / 24.0 + p2 * p2 / 720.0;
    c2 = 1.0 / 6.0 - p2 / 120.0 + p2 * p2 / 5040.0;
    c3 = c2;
    c4 = 1.0 / 24.0 - p2 / 720.0 + p2 * p2 / 40320.0;
  } else {
    const double p2 = phi * phi;
    c1 = (1.0 - std::cos(phi)) / p2;
    c2 = (phi - std::sin(phi)) / (p2 * phi);
    c3 = c2;
    c4 = (0.5 * p2 + std::cos(phi) - 1.0) / (p2 * p2);
  }
  first = Mat3::Identity() + c1 * k + c2 * k2;
  second = 0.5 * Mat3::Identity() + c3 * k + c4 * k2;
}

inline void check_ordered(std::span<const ImuSample> samples) {
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].timestamp <= samples[i - 1].timestamp)
      throw InputError("IMU timestamps not strictly increasing at sample " + std::to_string(i) +
                       " (t=" + std::to_string(samples[i].timestamp) + " us)");
}

/// Index of the last sample at or before t, after checking that the samples
/// cover [t_start, t_end] without gaps above max_gap.
inline std::size_t coverage_start(std::span<const ImuSample> samples, std::int64_t t_start,
                                  std::int64_t t_end, std::int64_t max_gap) {
  if (samples.empty()) throw ImuCoverageError("no IMU samples");
  const auto after = std::upper_bound(samples.begin(), samples.end(), t_start,
                                      [](std::int64_t t, const ImuSample &s) { return t < s.timestamp; });
  if (after == samples.begin())
    throw ImuCoverageError("IMU coverage starts at " + std::to_string(samples.front().timestamp) +
                           " us, after the window start " + std::to_string(t_start) + " us");
  if (samples.back().timestamp < t_end)
    throw ImuCoverageError("IMU coverage ends at " + std::to_string(samples.back().timestamp) +
                           " us, before the window end " + std::to_string(t_end) + " us");
  const std::size_t first = static_cast<std::size_t>(after - samples.begin()) - 1;
  for (std::size_t i = first; i + 1 < samples.size() && samples[i].timestamp < t_end; ++i) {
    const std::int64_t gap = samples[i + 1].timestamp - samples[i].timestamp;
    if (gap > max_gap)
      throw ImuCoverageError("IMU gap of " + std::to_string(gap / 1000.0) + " ms between " +
                             std::to_string(samples[i].timestamp) + " and " +
                             std::to_string(samples[i + 1].timestamp) + " us");
  }
  return first;
}

}  // namespace detail

/**
 * Preintegrates the samples over [t_start, t_end] (us). The boundary
 * intervals are clipped to the window. Biases are subtracted from every sample.
 */
inline PreintegratedDelta preintegrate(std::span<const ImuSample> samples, std::int64_t t_start,
                                       std::int64_t t_end, const Vec3 &gyro_bias = Vec3::Zero(),
                                       const Vec3 &accel_bias = Vec3::Zero(),
                                       std::int64_t max_gap = kDefaultMaxImuGap) {
  if (t_end < t_start) throw std::invalid_argument("preintegrate: t_end precedes t_start");
  detail::check_ordered(samples);
  PreintegratedDelta d;
  if (t_end == t_start) return d;

  std::size_t i = detail::coverage_start(samples, t_start, t_end, max_gap);
  std::int64_t elapsed_us = 0;
  Mat3 dr = Mat3::Identity();
  Mat3 j1, j2;
  for (; i < samples.size() && samples[i].timestamp < t_end; ++i) {
    const std::int64_t lo = std::max(samples[i].timestamp, t_start);
    const std::int64_t hi = std::min(samples[i + 1].timestamp, t_end);
    const double dt = static_cast<double>(hi - lo) * 1e-6;
    const Vec3 w = samples[i].angular_velocity - gyro_bias;
    const Vec3 a = samples[i].linear_acceleration - accel_bias;
    const Vec3 theta = w * dt;
    detail::zoh_integrals(theta, j1, j2);
    d.delta_position += d.delta_velocity * dt + dr * (j2 * a) * (dt * dt);
    d.delta_velocity += dr * (j1 * a) * dt;
    d.delta_rotation = d.delta_rotation * so3_exp(theta);
    dr = d.delta_rotation.matrix();
    elapsed_us += hi - lo;
    ++d.sample_count;
  }
  d.delta_time = static_cast<double>(elapsed_us) * 1e-6;
  return d;
}

/// Applies a preintegrated delta to a world-frame navigation state.
inline NavState predict(const NavState &state0, const PreintegratedDelta &delta,
                        const Vec3 &gravity = gravity_vector()) {
  const Rotation &r0 = state0.pose.rotation();
  const double dt = delta.delta_time;
  NavState out;
  out.velocity = state0.velocity + gravity * dt + r0 * delta.delta_velocity;
  out.pose = Pose(r0 * delta.delta_rotation, state0.pose.translation() + state0.velocity * dt +
                                                 0.5 * gravity * dt * dt + r0 * delta.delta_position);
  return out;
}

/**
 * Roll and pitch that map the mean measured specific force onto world +z.
 * Yaw is left at zero.
 */
inline Rotation gravity_align(std::span<const ImuSample> stationary_samples) {
  if (stationary_samples.size() < 10)
    throw InputError("gravity_align: need at least 10 samples, got " +
                     std::to_string(stationary_samples.size()));
  Vec3 mean = Vec3::Zero();
  for (const auto &s : stationary_samples) mean += s.linear_acceleration;
  mean /= static_cast<double>(stationary_samples.size());
  const double magnitude = mean.norm();
  if (std::abs(magnitude - kGravity) > 0.1 * kGravity)
    throw InputError("gravity_align: platform not stationary (mean specific force " +
                     std::to_string(magnitude) + " m/s^2)");
  const Vec3 m = mean / magnitude;
  const double pitch = std::atan2(-m.x(), std::hypot(m.y(), m.z()));
  const double roll = std::atan2(m.y(), m.z());
  return so3_exp(Vec3(0, pitch, 0)) * so3_exp(Vec3(roll, 0, 0));
}

/**
 * Piecewise constant-rate orientation history over [begin_time, end_time].
 * Each knot holds the orientation at its start time and the body rate that
 * applies until the next knot.
 */
class OrientationTrack {
 public:
  struct Knot {
    std::int64_t time;
    Rotation orientation;
    Vec3 rate;  // rad/s, body
  };

  /// Integrates gyro samples from `reference` at t_begin up to t_end.
  static OrientationTrack from_gyro(std::span<const ImuSample> samples, std::int64_t t_begin,
                                    std::int64_t t_end, const Rotation &reference,
                                    const Vec3 &gyro_bias = Vec3::Zero(),
                                    std::int64_t max_gap = kDefaultMaxImuGap) {
    if (t_end < t_begin) throw std::invalid_argument("OrientationTrack: t_end precedes t_begin");
    detail::check_ordered(samples);
    OrientationTrack track;
    track.begin_ = t_begin;
    track.end_ = t_end;
    std::size_t i = detail::coverage_start(samples, t_begin, t_end, max_gap);
    Rotation r = reference;
    std::int64_t t = t_begin;
    for (; i < samples.size() && samples[i].timestamp < t_end; ++i) {
      const std::int64_t hi = std::min(samples[i + 1].timestamp, t_end);
      const Vec3 w = samples[i].angular_velocity - gyro_bias;
      track.knots_.push_back({t, r, w});
      r = r * so3_exp(w * (static_cast<double>(hi - t) * 1e-6));
      t = hi;
    }
    if (track.knots_.empty()) track.knots_.push_back({t_begin, reference, Vec3::Zero()});
    return track;
  }

  /// Constant body rate: R(t) = reference * Exp(rate * (t - t_reference)).
  static OrientationTrack constant_rate(const Rotation &reference, std::int64_t t_reference,
                                        const Vec3 &rate, std::int64_t t_begin, std::int64_t t_end) {
    OrientationTrack track;
    track.begin_ = t_begin;
    track.end_ = t_end;
    track.knots_.push_back(
        {t_begin, reference * so3_exp(rate * (static_cast<double>(t_begin - t_reference) * 1e-6)), rate});
    return track;
  }

  std::int64_t begin_time() const { return begin_; }
  std::int64_t end_time() const { return end_; }

  Rotation operator()(std::int64_t t) const {
    if (t < begin_ || t > end_)
      throw OrientationSpanError("OrientationTrack: t=" + std::to_string(t) + " us outside [" +
                                 std::to_string(begin_) + ", " + std::to_string(end_) + "] us");
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                               [](std::int64_t v, const Knot &k) { return v < k.time; });
    const Knot &k = *std::prev(it);
    if (t == k.time) return k.orientation;
    return k.orientation * so3_exp(k.rate * (static_cast<double>(t - k.time) * 1e-6));
  }

 private:
  std::int64_t begin_ = 0;
  std::int64_t end_ = 0;
  std::vector<Knot> knots_;
};

}  // namespace radar_odom
