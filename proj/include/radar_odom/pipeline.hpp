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
 * \file pipeline.hpp
 * \brief Frame-by-frame radar odometry drivers.
 *
 * radar_kissicp  ICP seeded by a constant-velocity extrapolation of the last
 *                two poses.
 * radar_imu      ICP seeded by IMU preintegration from the last frame,
 *                velocity re-estimated by differencing registered poses, or
 *                optionally by feeding a share of the registration
 *                correction back into the predicted velocity.
 *
 * Both modes deskew every sweep by rotation only, using gyro integration when
 * IMU data is available and the constant-velocity rotation rate otherwise.
 * A frame whose registration is degenerate emits its prior and does not
 * touch the map.
 */
#pragma once

#include "radar_odom/errors.hpp"
#include "radar_odom/evaluation.hpp"
#include "radar_odom/geometry.hpp"
#include "radar_odom/imu_preint.hpp"
#include "radar_odom/radar_frontend.hpp"
#include "radar_odom/registration.hpp"

#include <optional>
#include <string>
#include <vector>

namespace radar_odom {

enum class OdometryMode { radar_kissicp, radar_imu };
enum class FrontendKind { cen2018, kstrongest };
/// How radar_imu refreshes its velocity after a registered frame.
enum class VelocityUpdate { differencing, complementary };

inline std::string to_string(OdometryMode m) { return m == OdometryMode::radar_imu ? "radar_imu" : "radar_kissicp"; }
inline std::string to_string(FrontendKind f) { return f == FrontendKind::kstrongest ? "kstrongest" : "cen2018"; }
inline std::string to_string(VelocityUpdate v) {
  return v == VelocityUpdate::complementary ? "complementary" : "differencing";
}

struct FrontendParams {
  double z_q = 3.0;
  std::size_t smoothing_window = 17;
  std::size_t k = 12;
  double min_power = 60.0;
};

struct OdometryConfig {
  OdometryMode mode = OdometryMode::radar_kissicp;
  FrontendKind frontend = FrontendKind::cen2018;
  FrontendParams frontend_params;
  IcpParams icp;
  VoxelMapParams map;
  bool deskew = true;
  std::int64_t max_imu_gap = kDefaultMaxImuGap;  // us
  double gravity_window = 0.5;                   // s of leading IMU data used to level the first frame
  VelocityUpdate velocity_update = VelocityUpdate::differencing;
  double velocity_gain = 0.1;  // complementary update: share of the registration correction fed back
};

struct FrameResult {
  std::int64_t timestamp = 0;
  Pose pose;
  Pose prior;
  std::size_t points = 0;
  std::size_t iterations = 0;
  double rmse = 0.0;
  std::size_t correspondences = 0;
  bool converged = false;
  bool degenerate = false;    // registration failed, prior emitted
  bool imu_fallback = false;  // IMU prior unavailable, constant-velocity prior used
  double threshold = 0.0;
  std::size_t map_points = 0;
};

/**
 * Extrapolates the last relative motion to t_new:
 * T_last * Exp(ratio * log(T_prev^-1 T_last)), ratio = (t_new - t_last) / (t_last - t_prev).
 * With fewer than two poses the last pose is returned.
 */
inline Pose constant_velocity_prior(const Trajectory &history, std::int64_t t_new) {
  if (history.empty()) return Pose::identity();
  if (history.size() < 2) return history.back().pose;
  const StampedPose &prev = history[history.size() - 2];
  const StampedPose &last = history.back();
  const double ratio = static_cast<double>(t_new - last.timestamp) / static_cast<double>(last.timestamp - prev.timestamp);
  const Twist xi = se3_log(prev.pose.inverse() * last.pose);
  return last.pose * se3_exp(Twist(xi.linear * ratio, xi.angular * ratio));
}

class RadarOdometry {
 public:
  explicit RadarOdometry(const OdometryConfig &config, std::vector<ImuSample> imu = {})
      : config_(config), imu_(std::move(imu)), map_(config.map),
        threshold_(config.icp.initial_threshold, config.icp.min_motion_threshold, config.map.max_range) {
    if (config_.mode == OdometryMode::radar_imu && imu_.empty())
      throw InputError("radar_imu mode requires IMU samples");
    for (std::size_t i = 1; i < imu_.size(); ++i)
      if (imu_[i].timestamp <= imu_[i - 1].timestamp)
        throw InputError("IMU timestamps not strictly increasing at sample " + std::to_string(i));
  }

  const OdometryConfig &config() const { return config_; }
  const Trajectory &trajectory() const { return trajectory_; }
  const std::vector<FrameResult> &results() const { return results_; }
  const VoxelMap &map() const { return map_; }
  const NavState &state() const { return nav_; }

  RadarPointCloud detect(const PolarScan &scan) const {
    const auto &p = config_.frontend_params;
    return config_.frontend == FrontendKind::kstrongest ? kstrongest_filter(scan, p.k, p.min_power)
                                                        : cen2018_detect(scan, p.z_q, p.smoothing_window);
  }

  const FrameResult &process(const PolarScan &scan) {
    scan.validate();
    if (scan.n_azimuths() == 0) throw InputError("scan " + std::to_string(scan.scan_id) + " has no valid azimuths");
    const std::int64_t t = scan.center_time();
    if (!trajectory_.empty() && t <= trajectory_.back().timestamp)
      throw std::invalid_argument("scan at " + std::to_string(t) + " us is not newer than the previous frame");

    RadarPointCloud cloud = detect(scan);
    FrameResult r;
    r.timestamp = t;
    r.points = cloud.size();
    r.threshold = threshold_.threshold();

    if (trajectory_.empty()) {
      r.pose = r.prior = Pose(initial_orientation(), Vec3::Zero());
      const RadarPointCloud deskewed = deskew(cloud, scan, Vec3::Zero());
      map_insert(map_, deskewed, r.pose);
      r.converged = true;
      nav_ = NavState{r.pose, Vec3::Zero()};
      return finish(r);
    }

    const StampedPose &last = trajectory_.back();
    const double dt = static_cast<double>(t - last.timestamp) * 1e-6;
    const Pose cv_prior = constant_velocity_prior(trajectory_, t);
    std::optional<NavState> predicted;
    if (config_.mode == OdometryMode::radar_imu) {
      try {
        predicted = predict(nav_, preintegrate(imu_, last.timestamp, t, Vec3::Zero(), Vec3::Zero(), config_.max_imu_gap));
      } catch (const ImuCoverageError &) {
        r.imu_fallback = true;
      }
    }
    r.prior = predicted ? predicted->pose : cv_prior;

    Vec3 cv_rate = Vec3::Zero();
    if (trajectory_.size() >= 2) {
      const StampedPose &prev = trajectory_[trajectory_.size() - 2];
      cv_rate = so3_log(prev.pose.rotation().inverse() * last.pose.rotation()) /
                (static_cast<double>(last.timestamp - prev.timestamp) * 1e-6);
    }
    const RadarPointCloud deskewed = deskew(cloud, scan, cv_rate);

    IcpParams params = config_.icp;
    params.robust_kernel_scale = r.threshold;
    bool registered = false;
    if (map_.empty()) {
      // nothing left to register against: accept the prior and re-seed the map
      r.pose = r.prior;
      if (!deskewed.empty()) map_insert(map_, deskewed, r.pose);
    } else {
      try {
        if (deskewed.empty()) throw DegenerateRegistration("degenerate registration: no detections");
        const RegistrationResult reg = icp_register(deskewed, map_, r.prior, params);
        r.pose = reg.pose;
        r.iterations = reg.iterations;
        r.rmse = reg.final_inlier_rmse;
        r.correspondences = reg.correspondence_count;
        r.converged = reg.converged;
        registered = true;
      } catch (const DegenerateRegistration &) {
        r.pose = r.prior;
        r.degenerate = true;
      }
      if (registered) {
        threshold_.update(r.prior.inverse() * r.pose);
        map_insert(map_, deskewed, r.pose);
      }
    }

    // the second frame has no velocity to correct yet, so it differences
    if (config_.velocity_update == VelocityUpdate::complementary && registered && predicted &&
        trajectory_.size() >= 2) {
      const Vec3 correction = (r.pose.translation() - predicted->pose.translation()) / dt;
      nav_.velocity = predicted->velocity + config_.velocity_gain * correction;
    } else if (registered || !predicted) {
      nav_.velocity = (r.pose.translation() - last.pose.translation()) / dt;
    } else {
      nav_.velocity = predicted->velocity;
    }
    nav_.pose = r.pose;
    return finish(r);
  }

 private:
  const FrameResult &finish(FrameResult &r) {
    r.map_points = map_.size();
    trajectory_.push_back({r.timestamp, r.pose});
    results_.push_back(r);
    return results_.back();
  }

  Rotation initial_orientation() const {
    if (imu_.empty()) return Rotation::identity();
    const std::int64_t end = imu_.front().timestamp + std::llround(config_.gravity_window * 1e6);
    std::vector<ImuSample> window;
    for (const auto &s : imu_)
      if (s.timestamp <= end) window.push_back(s);
    Vec3 mean_rate = Vec3::Zero();
    for (const auto &s : window) mean_rate += s.angular_velocity;
    if (window.empty() || (mean_rate / static_cast<double>(window.size())).norm() > 0.02) return Rotation::identity();
    try {
      return gravity_align(window);
    } catch (const InputError &) {
      return Rotation::identity();
    }
  }

  /// Rotation-only deskew from gyro integration, or from the given constant
  /// body rate when the IMU does not cover the sweep.
  RadarPointCloud deskew(const RadarPointCloud &cloud, const PolarScan &scan, const Vec3 &fallback_rate) const {
    if (!config_.deskew || cloud.empty()) return cloud;
    if (!imu_.empty()) {
      try {
        return deskew_so3(cloud, OrientationTrack::from_gyro(imu_, scan.start_time(), scan.end_time(),
                                                             Rotation::identity(), Vec3::Zero(), config_.max_imu_gap));
      } catch (const ImuCoverageError &) {
      }
    }
    return deskew_so3(cloud, OrientationTrack::constant_rate(Rotation::identity(), scan.center_time(), fallback_rate,
                                                             scan.start_time(), scan.end_time()));
  }

  OdometryConfig config_;
  std::vector<ImuSample> imu_;
  VoxelMap map_;
  AdaptiveThreshold threshold_;
  NavState nav_;
  Trajectory trajectory_;
  std::vector<FrameResult> results_;
};

}  // namespace radar_odom
