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
 * \file registration.hpp
 * \brief Voxel-hashed local map and robust point-to-point ICP against it.
 */
#pragma once

#include "radar_odom/errors.hpp"
#include "radar_odom/geometry.hpp"
#include "radar_odom/radar_frontend.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

namespace radar_odom {

using Voxel = Eigen::Vector3i;

struct VoxelHash {
  std::size_t operator()(const Voxel &v) const {
    const auto x = static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.x()));
    const auto y = static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.y()));
    const auto z = static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.z()));
    return static_cast<std::size_t>((x * 73856093u) ^ (y * 19349669u) ^ (z * 83492791u));
  }
};

struct VoxelMapParams {
  double voxel_size = 1.0;               // m
  std::size_t max_points_per_voxel = 20;
  double max_range = 100.0;              // m
};

class VoxelMap {
 public:
  explicit VoxelMap(const VoxelMapParams &params = {}) : params_(params) {
    if (!(params.voxel_size > 0.0) || params.max_points_per_voxel == 0 || !(params.max_range > 0.0))
      throw std::invalid_argument("VoxelMap: voxel_size, max_points_per_voxel and max_range must be positive");
  }

  const VoxelMapParams &params() const { return params_; }

  Voxel voxel_of(const Vec3 &p) const {
    return Voxel(static_cast<int>(std::floor(p.x() / params_.voxel_size)),
                 static_cast<int>(std::floor(p.y() / params_.voxel_size)),
                 static_cast<int>(std::floor(p.z() / params_.voxel_size)));
  }

  /// Adds a world-frame point unless its voxel is full.
  void add_point(const Vec3 &p) {
    auto &bucket = voxels_[voxel_of(p)];
    if (bucket.size() < params_.max_points_per_voxel) bucket.push_back(p);
  }

  /// Drops every point farther than max_range from `center`.
  void prune(const Vec3 &center) {
    const double r2 = params_.max_range * params_.max_range;
    for (auto it = voxels_.begin(); it != voxels_.end();) {
      auto &pts = it->second;
      std::erase_if(pts, [&](const Vec3 &p) { return (p - center).squaredNorm() > r2; });
      it = pts.empty() ? voxels_.erase(it) : std::next(it);
    }
  }

  bool empty() const { return voxels_.empty(); }
  std::size_t voxel_count() const { return voxels_.size(); }
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto &[v, pts] : voxels_) n += pts.size();
    return n;
  }

  const std::vector<Vec3> *bucket(const Voxel &v) const {
    auto it = voxels_.find(v);
    return it == voxels_.end() ? nullptr : &it->second;
  }

  /// All stored points in lexicographic order.
  std::vector<Vec3> points() const {
    std::vector<Vec3> out;
    out.reserve(size());
    for (const auto &[v, pts] : voxels_) out.insert(out.end(), pts.begin(), pts.end());
    std::sort(out.begin(), out.end(), [](const Vec3 &a, const Vec3 &b) {
      return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
    });
    return out;
  }

  void clear() { voxels_.clear(); }

 private:
  VoxelMapParams params_;
  std::unordered_map<Voxel, std::vector<Vec3>, VoxelHash> voxels_;
};

/// Transforms the cloud into the world with `pose`, buckets it, then prunes
/// around the pose translation.
inline void map_insert(VoxelMap &map, const RadarPointCloud &cloud, const Pose &pose) {
  if (cloud.empty()) return;
  for (const Vec3 &p : cloud.points) map.add_point(pose * p);
  map.prune(pose.translation());
}

struct Neighbor {
  Vec3 point;
  double distance;
};

/**
 * Exact nearest stored point within max_dist. Voxel shells are visited in
 * order of Chebyshev distance and the search stops once no unvisited shell
 * can hold a closer point. Equal distances resolve to the lexicographically
 * smallest point.
 */
inline std::optional<Neighbor> map_nearest(const VoxelMap &map, const Vec3 &query, double max_dist) {
  if (!(max_dist > 0.0)) throw std::invalid_argument("map_nearest: max_dist must be positive");
  const double vs = map.params().voxel_size;
  const Voxel c = map.voxel_of(query);
  const int shells = std::max(1, static_cast<int>(std::ceil(max_dist / vs)));
  const double limit2 = max_dist * max_dist;
  double best2 = std::numeric_limits<double>::infinity();
  const Vec3 *best = nullptr;

  auto visit = [&](const Voxel &v) {
    const auto *pts = map.bucket(v);
    if (!pts) return;
    for (const Vec3 &p : *pts) {
      const double d2 = (p - query).squaredNorm();
      if (d2 > limit2) continue;
      if (d2 < best2 || (d2 == best2 && std::lexicographical_compare(p.data(), p.data() + 3,
                                                                     best->data(), best->data() + 3))) {
        best2 = d2;
        best = &p;
      }
    }
  };

  for (int s = 0; s <= shells; ++s) {
    // any point in shell s+1 or beyond is at least s voxels away
    for (int dx = -s; dx <= s; ++dx)
      for (int dy = -s; dy <= s; ++dy)
        for (int dz = -s; dz <= s; ++dz)
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) == s) visit(c + Voxel(dx, dy, dz));
    const double reach = s * vs;
    if (best && best2 < reach * reach) break;
  }
  if (!best) return std::nullopt;
  return Neighbor{*best, std::sqrt(best2)};
}

struct IcpParams {
  std::size_t max_iterations = 50;
  double convergence_epsilon = 1e-4;   // norm of the increment twist
  double initial_threshold = 2.0;      // m
  double min_motion_threshold = 0.1;   // m
  /// Correspondence gate and Geman-McClure scale (kappa = scale^2), in metres.
  /// The odometry driver sets it from the adaptive threshold every frame.
  double robust_kernel_scale = 2.0;
};

struct RegistrationResult {
  Pose pose;
  std::size_t iterations = 0;
  double final_inlier_rmse = 0.0;
  std::size_t correspondence_count = 0;
  bool converged = false;
  /// Robust cost at the start of every iteration and at the final pose.
  std::vector<double> cost_history;
};

namespace detail {

struct Association {
  Eigen::Matrix<double, 6, 6> hessian = Eigen::Matrix<double, 6, 6>::Zero();
  Vec6 gradient = Vec6::Zero();
  double cost = 0.0;
  double sq_sum = 0.0;
  std::size_t count = 0;
};

inline Association associate_and_linearize(const RadarPointCloud &source, const VoxelMap &map,
                                           const Pose &pose, double scale) {
  Association a;
  const double kappa = scale * scale;
  Eigen::Matrix<double, 3, 6> jac;
  jac.leftCols<3>() = Mat3::Identity();
  for (const Vec3 &p : source.points) {
    const Vec3 q = pose * p;
    const auto nn = map_nearest(map, q, scale);
    if (!nn) continue;
    const Vec3 r = q - nn->point;
    const double r2 = r.squaredNorm();
    const double denom = kappa + r2;
    const double w = (kappa / denom) * (kappa / denom);
    jac.rightCols<3>() = -skew(q);
    a.hessian.noalias() += w * jac.transpose() * jac;
    a.gradient.noalias() += w * jac.transpose() * r;
    a.cost += kappa * r2 / denom;
    a.sq_sum += r2;
    ++a.count;
  }
  return a;
}

}  // namespace detail

/**
 * Gauss-Newton point-to-point ICP with left increments, T <- Exp(delta) T.
 * Throws DegenerateRegistration when an iteration has fewer than six
 * correspondences or the normal equations are rank deficient.
 */
inline RegistrationResult icp_register(const RadarPointCloud &source, const VoxelMap &map,
                                       const Pose &initial_guess, const IcpParams &params = {}) {
  if (source.empty()) throw std::invalid_argument("icp_register: empty source cloud");
  if (map.empty()) throw std::invalid_argument("icp_register: empty map");
  RegistrationResult res;
  Pose pose = initial_guess;
  for (std::size_t it = 0; it < params.max_iterations; ++it) {
    const auto a = detail::associate_and_linearize(source, map, pose, params.robust_kernel_scale);
    if (a.count < 6)
      throw DegenerateRegistration("degenerate registration: " + std::to_string(a.count) +
                                   " correspondences at iteration " + std::to_string(it));
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(a.hessian);
    const auto ev = eig.eigenvalues();
    if (!(ev(0) > 1e-10 * ev(5)))
      throw DegenerateRegistration("degenerate registration: pose not constrained by " +
                                   std::to_string(a.count) + " correspondences");
    res.cost_history.push_back(a.cost);
    const Vec6 delta = a.hessian.ldlt().solve(-a.gradient);
    pose = se3_exp(Twist(delta)) * pose;
    res.iterations = it + 1;
    if (delta.norm() < params.convergence_epsilon) {
      res.converged = true;
      break;
    }
  }
  const auto fin = detail::associate_and_linearize(source, map, pose, params.robust_kernel_scale);
  res.cost_history.push_back(fin.cost);
  res.pose = pose;
  res.correspondence_count = fin.count;
  res.final_inlier_rmse = fin.count ? std::sqrt(fin.sq_sum / static_cast<double>(fin.count)) : 0.0;
  return res;
}

/**
 * Running estimate of the correspondence threshold from the deviation
 * between predicted and registered poses.
 */
class AdaptiveThreshold {
 public:
  AdaptiveThreshold(double initial_threshold = 2.0, double min_motion = 0.1, double max_range = 100.0)
      : initial_(initial_threshold), min_motion_(min_motion), max_range_(max_range) {}

  double threshold() const {
    if (count_ == 0) return initial_;
    return 3.0 * std::sqrt(sum_sq_ / static_cast<double>(count_));
  }

  /// deviation = predicted^-1 * registered. Returns the updated threshold.
  double update(const Pose &deviation) {
    const double theta = rotation_angle(deviation.rotation());
    const double delta = deviation.translation().norm() + 2.0 * max_range_ * std::sin(0.5 * theta);
    if (delta > min_motion_) {
      sum_sq_ += delta * delta;
      ++count_;
    }
    return threshold();
  }

  std::size_t accumulated() const { return count_; }

 private:
  double initial_;
  double min_motion_;
  double max_range_;
  double sum_sq_ = 0.0;
  std::size_t count_ = 0;
};

inline double adaptive_threshold_update(AdaptiveThreshold &state, const Pose &model_deviation) {
  return state.update(model_deviation);
}

}  // namespace radar_odom
