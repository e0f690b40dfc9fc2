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
 * \file radar_frontend.hpp
 * \brief Polar radar sweeps to (rotation-compensated) 3D point clouds.
 *
 * A sweep is an azimuth x range-bin intensity grid. Every azimuth row carries
 * its own capture timestamp, so points inherit the time of their row. Range
 * bins use the bin-centre convention: range = (bin + 0.5) * resolution.
 */
#pragma once

#include "radar_odom/errors.hpp"
#include "radar_odom/geometry.hpp"

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace radar_odom {

/// One radar sweep. Intensities are stored row-major, one row per azimuth.
struct PolarScan {
  std::int64_t scan_id = 0;
  double range_resolution = 0.04;  // m per bin
  std::size_t n_range_bins = 0;
  std::vector<std::int64_t> azimuth_timestamps;  // us, strictly increasing
  std::vector<double> azimuth_angles;            // rad in [0, 2 pi)
  std::vector<std::uint8_t> intensities;         // n_azimuths * n_range_bins

  std::size_t n_azimuths() const { return azimuth_timestamps.size(); }
  bool empty() const { return n_azimuths() == 0 || n_range_bins == 0; }

  std::span<const std::uint8_t> row(std::size_t i) const {
    return {intensities.data() + i * n_range_bins, n_range_bins};
  }
  std::span<std::uint8_t> row(std::size_t i) {
    return {intensities.data() + i * n_range_bins, n_range_bins};
  }

  /// Sweep-centre time: the timestamp of row n_azimuths / 2.
  std::int64_t center_time() const { return azimuth_timestamps.at(n_azimuths() / 2); }
  std::int64_t start_time() const { return azimuth_timestamps.front(); }
  std::int64_t end_time() const { return azimuth_timestamps.back(); }

  /// Throws InputError if the shape or the timestamp ordering is inconsistent.
  void validate() const {
    if (azimuth_angles.size() != n_azimuths())
      throw InputError("PolarScan: azimuth angle count does not match timestamp count");
    if (intensities.size() != n_azimuths() * n_range_bins)
      throw InputError("PolarScan: intensity grid size does not match n_azimuths * n_range_bins");
    for (std::size_t i = 1; i < n_azimuths(); ++i)
      if (azimuth_timestamps[i] <= azimuth_timestamps[i - 1])
        throw InputError("PolarScan: azimuth timestamps not strictly increasing at row " +
                         std::to_string(i));
  }
};

/// Detected returns in the sensor frame at sweep-centre time.
struct RadarPointCloud {
  std::vector<Vec3> points;                 // m
  std::vector<float> intensities;           // 0..255
  std::vector<std::int64_t> capture_times;  // us
  std::int64_t center_time = 0;             // us

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void push_back(const Vec3 &p, float intensity, std::int64_t t) {
    points.push_back(p);
    intensities.push_back(intensity);
    capture_times.push_back(t);
  }
};

inline Eigen::Vector2d polar_to_cartesian(double azimuth, std::size_t bin, double range_resolution) {
  const double range = (static_cast<double>(bin) + 0.5) * range_resolution;
  return {range * std::cos(azimuth), range * std::sin(azimuth)};
}

namespace detail {

inline RadarPointCloud empty_cloud_for(const PolarScan &scan) {
  RadarPointCloud cloud;
  if (scan.n_azimuths() > 0) cloud.center_time = scan.center_time();
  return cloud;
}

inline void emit(RadarPointCloud &cloud, const PolarScan &scan, std::size_t row, std::size_t bin) {
  const Eigen::Vector2d xy = polar_to_cartesian(scan.azimuth_angles[row], bin, scan.range_resolution);
  cloud.push_back(Vec3(xy.x(), xy.y(), 0.0), static_cast<float>(scan.row(row)[bin]),
                  scan.azimuth_timestamps[row]);
}

}  // namespace detail

/**
 * Keeps, per azimuth, the k bins of highest intensity among those strictly
 * above min_power. Ties go to the lower bin index; points are emitted in
 * rank order within a row.
 */
inline RadarPointCloud kstrongest_filter(const PolarScan &scan, std::size_t k, double min_power) {
  if (k < 1) throw std::invalid_argument("kstrongest_filter: k must be >= 1");
  if (!(min_power >= 0.0)) throw std::invalid_argument("kstrongest_filter: min_power must be >= 0");
  RadarPointCloud cloud = detail::empty_cloud_for(scan);
  if (scan.empty()) return cloud;

  std::vector<std::uint32_t> candidates;
  for (std::size_t a = 0; a < scan.n_azimuths(); ++a) {
    const auto row = scan.row(a);
    candidates.clear();
    for (std::size_t b = 0; b < row.size(); ++b)
      if (row[b] > min_power) candidates.push_back(static_cast<std::uint32_t>(b));
    const auto stronger = [&](std::uint32_t l, std::uint32_t r) {
      return row[l] != row[r] ? row[l] > row[r] : l < r;
    };
    const std::size_t keep = std::min(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(), stronger);
    for (std::size_t i = 0; i < keep; ++i) detail::emit(cloud, scan, a, candidates[i]);
  }
  return cloud;
}

/**
 * Per-azimuth peak detector in the spirit of Cen et al. (ICRA 2018).
 *
 * For each azimuth row: estimate the noise mean and standard deviation from the
 * row itself, smooth the row with a centred moving average (window truncated
 * at the row ends), mark bins whose smoothed power exceeds mean + z_q * sigma
 * and emit one point per contiguous marked run, at the run's strongest raw bin
 * (lowest index on ties).
 */
inline RadarPointCloud cen2018_detect(const PolarScan &scan, double z_q, std::size_t smoothing_window) {
  if (!(z_q > 0.0)) throw std::invalid_argument("cen2018_detect: z_q must be > 0");
  if (smoothing_window < 1 || smoothing_window % 2 == 0)
    throw std::invalid_argument("cen2018_detect: smoothing_window must be odd and >= 1");
  RadarPointCloud cloud = detail::empty_cloud_for(scan);
  if (scan.empty()) return cloud;

  const std::size_t n = scan.n_range_bins;
  const std::size_t half = smoothing_window / 2;
  std::vector<double> prefix(n + 1);
  for (std::size_t a = 0; a < scan.n_azimuths(); ++a) {
    const auto row = scan.row(a);
    prefix[0] = 0.0;
    double sum_sq = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const double v = row[b];
      prefix[b + 1] = prefix[b] + v;
      sum_sq += v * v;
    }
    const double mean = prefix[n] / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
    const double sigma = std::sqrt(var);
    if (sigma <= 0.0) continue;
    const double threshold = mean + z_q * sigma;

    std::size_t b = 0;
    while (b < n) {
      const auto smoothed = [&](std::size_t i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        return (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
      };
      if (smoothed(b) <= threshold) {
        ++b;
        continue;
      }
      std::size_t best = b;
      for (; b < n && smoothed(b) > threshold; ++b)
        if (row[b] > row[best]) best = b;
      detail::emit(cloud, scan, a, best);
    }
  }
  return cloud;
}

/// Anything that can report the platform orientation at a timestamp (us).
template <typename F>
concept OrientationSource = requires(const F &f, std::int64_t t) {
  { f(t) } -> std::convertible_to<Rotation>;
};

/// An orientation source that also reports the interval it covers.
template <typename F>
concept BoundedOrientationSource = OrientationSource<F> && requires(const F &f) {
  { f.begin_time() } -> std::convertible_to<std::int64_t>;
  { f.end_time() } -> std::convertible_to<std::int64_t>;
};

/**
 * Rotation-only motion compensation: p <- R(center)^-1 * R(t_p) * p.
 * Translation during the sweep is not compensated.
 */
template <OrientationSource Source>
RadarPointCloud deskew_so3(const RadarPointCloud &cloud, const Source &orientation_at) {
  if (cloud.empty()) return cloud;
  if constexpr (BoundedOrientationSource<Source>) {
    const auto [lo, hi] = std::minmax_element(cloud.capture_times.begin(), cloud.capture_times.end());
    const std::int64_t need_lo = std::min(*lo, cloud.center_time);
    const std::int64_t need_hi = std::max(*hi, cloud.center_time);
    if (need_lo < orientation_at.begin_time() || need_hi > orientation_at.end_time())
      throw OrientationSpanError("deskew_so3: orientation needed over [" + std::to_string(need_lo) +
                                 ", " + std::to_string(need_hi) + "] us but the source covers [" +
                                 std::to_string(orientation_at.begin_time()) + ", " +
                                 std::to_string(orientation_at.end_time()) + "] us");
  }
  const Rotation center_inv = Rotation(orientation_at(cloud.center_time)).inverse();
  RadarPointCloud out = cloud;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Rotation r = center_inv * Rotation(orientation_at(cloud.capture_times[i]));
    out.points[i] = r * cloud.points[i];
  }
  return out;
}

}  // namespace radar_odom
