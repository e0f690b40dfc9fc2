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

// Shared randomized fixtures for the unit and acceptance suites.
#pragma once

#include "radar_odom/geometry.hpp"
#include "radar_odom/radar_frontend.hpp"
#include "radar_odom/registration.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

namespace radar_odom::testing {

inline constexpr double kDeg = 3.14159265358979323846 / 180.0;

inline Vec3 random_unit(std::mt19937_64 &rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do v = Vec3(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-6);
  return v.normalized();
}

/// Pose with translation norm <= max_t and rotation angle <= max_rot.
inline Pose random_perturbation(std::mt19937_64 &rng, double max_t, double max_rot) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec3 t = random_unit(rng) * (max_t * u(rng));
  const Vec3 w = random_unit(rng) * (max_rot * u(rng));
  return Pose(so3_exp(w), t);
}

inline std::vector<Vec3> random_points(std::mt19937_64 &rng, std::size_t n, double half_extent) {
  std::uniform_real_distribution<double> u(-half_extent, half_extent);
  std::vector<Vec3> pts(n);
  for (auto &p : pts) p = Vec3(u(rng), u(rng), u(rng));
  return pts;
}

inline RadarPointCloud cloud_from(const std::vector<Vec3> &pts) {
  RadarPointCloud c;
  for (const Vec3 &p : pts) c.push_back(p, 100.0f, 0);
  return c;
}

inline VoxelMap map_from(const std::vector<Vec3> &pts, const VoxelMapParams &params = {}) {
  VoxelMap m(params);
  map_insert(m, cloud_from(pts), Pose::identity());
  return m;
}

struct IcpTrial {
  double translation_error;
  double rotation_error;
  bool ok(double tol_t = 1e-4, double tol_r = 1e-4) const {
    return translation_error < tol_t && rotation_error < tol_r;
  }
};

/// One self-consistency trial: source = G * map, guess = identity, the
/// registration should return G^-1.
inline IcpTrial icp_recovery_trial(std::mt19937_64 &rng, std::size_t n_points = 500,
                                   double half_extent = 15.0, double max_t = 0.5,
                                   double max_rot = 5.0 * kDeg) {
  const auto pts = random_points(rng, n_points, half_extent);
  const Pose g = random_perturbation(rng, max_t, max_rot);
  std::vector<Vec3> moved;
  for (const Vec3 &p : pts) moved.push_back(g * p);
  const VoxelMap map = map_from(pts);
  IcpTrial trial{1e9, 1e9};
  try {
    const auto res = icp_register(cloud_from(moved), map, Pose::identity());
    const Pose err = res.pose * g;
    trial.translation_error = err.translation().norm();
    trial.rotation_error = rotation_angle(err.rotation());
  } catch (const DegenerateRegistration &) {
  }
  return trial;
}

/// Linear scan with the same tie rule as map_nearest.
inline std::optional<Neighbor> brute_force_nearest(const std::vector<Vec3> &pts, const Vec3 &q, double max_dist) {
  std::optional<Neighbor> best;
  double best2 = max_dist * max_dist;
  for (const Vec3 &p : pts) {
    const double d2 = (p - q).squaredNorm();
    if (d2 > best2) continue;
    if (!best || d2 < best2 ||
        std::lexicographical_compare(p.data(), p.data() + 3, best->point.data(), best->point.data() + 3)) {
      best = Neighbor{p, std::sqrt(d2)};
      best2 = d2;
    }
  }
  return best;
}

}  // namespace radar_odom::testing
