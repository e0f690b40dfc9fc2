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
 * \file evaluation.hpp
 * \brief Trajectory metrics: association, rigid alignment, ATE, KITTI
 *        segment errors, per-frame RPE and the planarity overlap statistic.
 *
 * Units: translation errors in metres or percent of distance travelled,
 * KITTI rotation errors in deg/m, ATE rotation in rad per 100 m of path.
 */
#pragma once

#include "radar_odom/errors.hpp"
#include "radar_odom/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace radar_odom {

struct StampedPose {
  std::int64_t timestamp = 0;  // us
  Pose pose;
};

using Trajectory = std::vector<StampedPose>;

inline void validate_trajectory(const Trajectory &traj, const std::string &name) {
  for (std::size_t i = 1; i < traj.size(); ++i)
    if (traj[i].timestamp <= traj[i - 1].timestamp)
      throw InputError(name + ": timestamps not strictly increasing at pose " + std::to_string(i));
}

struct PosePair {
  std::int64_t timestamp = 0;
  Pose gt;
  Pose est;
};

struct Association {
  std::vector<PosePair> pairs;
  std::size_t dropped = 0;
};

inline constexpr std::int64_t kDefaultAssociationMaxDt = 20'000;  // us

/**
 * Pairs every estimate with ground truth interpolated at its timestamp.
 * Estimates before the first or after the last ground-truth pose pair with
 * that end pose when within max_dt of it, and are dropped otherwise.
 */
inline Association associate(const Trajectory &gt, const Trajectory &est,
                             std::int64_t max_dt = kDefaultAssociationMaxDt) {
  if (gt.empty() || est.empty()) throw DegenerateEvaluation("associate: empty trajectory");
  validate_trajectory(gt, "ground truth");
  validate_trajectory(est, "estimate");
  Association out;
  for (const StampedPose &e : est) {
    const std::int64_t t = e.timestamp;
    if (t < gt.front().timestamp) {
      if (gt.front().timestamp - t <= max_dt) out.pairs.push_back({t, gt.front().pose, e.pose});
      else ++out.dropped;
      continue;
    }
    if (t > gt.back().timestamp) {
      if (t - gt.back().timestamp <= max_dt) out.pairs.push_back({t, gt.back().pose, e.pose});
      else ++out.dropped;
      continue;
    }
    auto hi = std::lower_bound(gt.begin(), gt.end(), t,
                               [](const StampedPose &g, std::int64_t v) { return g.timestamp < v; });
    if (hi->timestamp == t) {
      out.pairs.push_back({t, hi->pose, e.pose});
      continue;
    }
    const auto lo = std::prev(hi);
    const double alpha = static_cast<double>(t - lo->timestamp) /
                         static_cast<double>(hi->timestamp - lo->timestamp);
    out.pairs.push_back({t, interpolate_pose(lo->pose, hi->pose, alpha), e.pose});
  }
  if (out.pairs.empty())
    throw DegenerateEvaluation("associate: no estimate lies within " + std::to_string(max_dt) +
                               " us of the ground truth (" + std::to_string(out.dropped) + " dropped)");
  return out;
}

namespace detail {

/// Translation norm and rotation angle of a^-1 * b. Equal inputs give exact zeros.
inline std::pair<double, double> relative_error(const Pose &a, const Pose &b) {
  const double trans = (b.translation() - a.translation()).norm();
  const double rot = a.rotation() == b.rotation() ? 0.0 : rotation_angle(a.rotation().inverse() * b.rotation());
  return {trans, rot};
}

inline bool positions_coincide(const std::vector<PosePair> &pairs) {
  return std::all_of(pairs.begin(), pairs.end(),
                     [](const PosePair &p) { return p.gt.translation() == p.est.translation(); });
}

/// Least-squares rigid A with A * est ~ gt on the translations. With
/// `strict` false, collinear input gets the minimal rotation that aligns the
/// two lines and coincident input gets a pure translation.
inline Pose rigid_align(const std::vector<PosePair> &pairs, bool strict) {
  const std::size_t n = pairs.size();
  if (strict && n < 3) throw DegenerateEvaluation("umeyama_align: need at least 3 pairs");
  if (n == 0) throw DegenerateEvaluation("umeyama_align: no pairs");
  if (!strict && positions_coincide(pairs)) return Pose::identity();
  Vec3 mu_g = Vec3::Zero(), mu_e = Vec3::Zero();
  for (const auto &p : pairs) {
    mu_g += p.gt.translation();
    mu_e += p.est.translation();
  }
  mu_g /= static_cast<double>(n);
  mu_e /= static_cast<double>(n);
  Mat3 sigma = Mat3::Zero();
  for (const auto &p : pairs)
    sigma += (p.gt.translation() - mu_g) * (p.est.translation() - mu_e).transpose();
  sigma /= static_cast<double>(n);

  const Eigen::JacobiSVD<Mat3> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  Mat3 r;
  if (s(0) <= 1e-12 || s(1) <= 1e-9 * s(0)) {
    if (strict) throw DegenerateEvaluation("umeyama_align: estimate positions are collinear or coincident");
    if (s(0) <= 1e-12) {
      r = Mat3::Identity();
    } else {
      r = Eigen::Quaterniond::FromTwoVectors(svd.matrixV().col(0), svd.matrixU().col(0)).toRotationMatrix();
    }
  } else {
    Mat3 d = Mat3::Identity();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d(2, 2) = -1.0;
    r = svd.matrixU() * d * svd.matrixV().transpose();
  }
  return Pose(Rotation::from_matrix(r), mu_g - r * mu_e);
}

inline double path_length(const std::vector<PosePair> &pairs) {
  double len = 0.0;
  for (std::size_t i = 1; i < pairs.size(); ++i)
    len += (pairs[i].gt.translation() - pairs[i - 1].gt.translation()).norm();
  return len;
}

}  // namespace detail

/// Rigid transform (no scale) mapping estimate positions onto ground truth.
inline Pose umeyama_align(const std::vector<PosePair> &pairs) { return detail::rigid_align(pairs, true); }

struct AteResult {
  double trans_rmse = 0.0;       // m
  double trans_pct = 0.0;        // % of ground-truth path length
  double rot_rmse = 0.0;         // rad
  double rot_per_100m = 0.0;     // rad / 100 m
  double path_length = 0.0;      // m
  Pose alignment;
};

/// Absolute trajectory error, optionally after rigid alignment.
inline AteResult ate(const std::vector<PosePair> &pairs, bool align = true) {
  if (pairs.empty()) throw DegenerateEvaluation("ate: no pairs");
  AteResult out;
  out.path_length = detail::path_length(pairs);
  if (!(out.path_length > 0.0)) throw DegenerateEvaluation("ate: ground-truth path length is zero");
  out.alignment = align ? detail::rigid_align(pairs, false) : Pose::identity();
  const bool identity = out.alignment.rotation() == Rotation::identity() &&
                        out.alignment.translation() == Vec3::Zero();
  double sq_t = 0.0, sq_r = 0.0;
  for (const auto &p : pairs) {
    const auto [t, a] = detail::relative_error(p.gt, identity ? p.est : out.alignment * p.est);
    sq_t += t * t;
    sq_r += a * a;
  }
  const double n = static_cast<double>(pairs.size());
  out.trans_rmse = std::sqrt(sq_t / n);
  out.rot_rmse = std::sqrt(sq_r / n);
  out.trans_pct = 100.0 * out.trans_rmse / out.path_length;
  out.rot_per_100m = 100.0 * out.rot_rmse / out.path_length;
  return out;
}

inline const std::vector<double> &default_segment_lengths() {
  static const std::vector<double> lengths{100, 200, 300, 400, 500, 600, 700, 800};
  return lengths;
}

struct SegmentError {
  std::size_t start_index = 0;
  double length = 0.0;     // m
  double trans_pct = 0.0;  // %
  double rot_deg_per_m = 0.0;
};

struct LengthSummary {
  double length = 0.0;
  std::size_t count = 0;
  double trans_pct = 0.0;
  double rot_deg_per_m = 0.0;
};

struct KittiResult {
  double avg_trans_pct = 0.0;
  double avg_rot_deg_per_m = 0.0;
  std::vector<LengthSummary> per_length;
  std::vector<SegmentError> segments;
};

/**
 * KITTI-style relative errors. Segments start at every pair and end where
 * the ground-truth arc length first reaches the segment length; that end is
 * interpolated between the neighbouring pairs, with the same fraction used
 * for the estimate.
 */
inline KittiResult kitti_relative_errors(const std::vector<PosePair> &pairs,
                                         const std::vector<double> &segment_lengths = default_segment_lengths()) {
  if (segment_lengths.empty()) throw std::invalid_argument("kitti_relative_errors: no segment lengths");
  constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;
  const std::size_t n = pairs.size();
  std::vector<double> dist(n, 0.0);
  for (std::size_t i = 1; i < n; ++i)
    dist[i] = dist[i - 1] + (pairs[i].gt.translation() - pairs[i - 1].gt.translation()).norm();

  KittiResult out;
  for (double len : segment_lengths) out.per_length.push_back({len, 0, 0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < segment_lengths.size(); ++k) {
      const double len = segment_lengths[k];
      const double target = dist[i] + len;
      const auto it = std::lower_bound(dist.begin() + static_cast<std::ptrdiff_t>(i), dist.end(), target);
      if (it == dist.end()) continue;
      const auto j = static_cast<std::size_t>(it - dist.begin());
      Pose gt_end = pairs[j].gt, est_end = pairs[j].est;
      if (*it > target) {
        const double alpha = (target - dist[j - 1]) / (dist[j] - dist[j - 1]);
        gt_end = interpolate_pose(pairs[j - 1].gt, pairs[j].gt, alpha);
        est_end = interpolate_pose(pairs[j - 1].est, pairs[j].est, alpha);
      }
      const Pose gt_rel = pairs[i].gt.inverse() * gt_end;
      const Pose est_rel = pairs[i].est.inverse() * est_end;
      const auto [t_err, r_err] = detail::relative_error(gt_rel, est_rel);
      SegmentError seg{i, len, 100.0 * t_err / len, r_err * kRadToDeg / len};
      out.segments.push_back(seg);
      auto &summary = out.per_length[k];
      ++summary.count;
      summary.trans_pct += seg.trans_pct;
      summary.rot_deg_per_m += seg.rot_deg_per_m;
    }
  }
  if (out.segments.empty())
    throw DegenerateEvaluation("kitti_relative_errors: path of " + std::to_string(dist.empty() ? 0.0 : dist.back()) +
                               " m has no valid segment; use shorter segment lengths");
  for (auto &summary : out.per_length) {
    if (summary.count == 0) continue;
    summary.trans_pct /= static_cast<double>(summary.count);
    summary.rot_deg_per_m /= static_cast<double>(summary.count);
  }
  for (const auto &seg : out.segments) {
    out.avg_trans_pct += seg.trans_pct;
    out.avg_rot_deg_per_m += seg.rot_deg_per_m;
  }
  out.avg_trans_pct /= static_cast<double>(out.segments.size());
  out.avg_rot_deg_per_m /= static_cast<double>(out.segments.size());
  return out;
}

struct FrameRpe {
  std::int64_t timestamp = 0;
  double trans = 0.0;  // m
  double rot = 0.0;    // rad
};

/// Error between gt and estimated relative motions over `delta` frames,
/// reported at the later frame of each pair.
inline std::vector<FrameRpe> per_frame_rpe(const std::vector<PosePair> &pairs, std::size_t delta = 1) {
  if (delta == 0) throw std::invalid_argument("per_frame_rpe: delta must be positive");
  if (pairs.size() < delta + 1)
    throw DegenerateEvaluation("per_frame_rpe: need at least " + std::to_string(delta + 1) + " pairs");
  std::vector<FrameRpe> out;
  out.reserve(pairs.size() - delta);
  for (std::size_t i = delta; i < pairs.size(); ++i) {
    const Pose gt_rel = pairs[i - delta].gt.inverse() * pairs[i].gt;
    const Pose est_rel = pairs[i - delta].est.inverse() * pairs[i].est;
    const auto [t_err, r_err] = detail::relative_error(gt_rel, est_rel);
    out.push_back({pairs[i].timestamp, t_err, r_err});
  }
  return out;
}

/// Squared-norm fraction of the twist in the planar subspace (vx, vy, wz).
/// angular_weight scales the rotational components before the comparison.
inline double planar_fraction(const Twist &xi, double angular_weight = 1.0) {
  const double w2 = angular_weight * angular_weight;
  const Vec3 &v = xi.linear;
  const Vec3 &w = xi.angular;
  const double planar = v.x() * v.x() + v.y() * v.y() + w2 * w.z() * w.z();
  const double total = v.squaredNorm() + w2 * w.squaredNorm();
  if (total == 0.0) return 1.0;
  return std::clamp(planar / total, 0.0, 1.0);
}

/// One overlap per consecutive pose pair of the trajectory.
inline std::vector<double> planarity_overlap(const Trajectory &gt, double angular_weight = 1.0) {
  if (gt.size() < 2) throw DegenerateEvaluation("planarity_overlap: need at least 2 poses");
  std::vector<double> out;
  out.reserve(gt.size() - 1);
  for (std::size_t i = 1; i < gt.size(); ++i)
    out.push_back(planar_fraction(se3_log(gt[i - 1].pose.inverse() * gt[i].pose), angular_weight));
  return out;
}

/// Equal-width histogram over [0, 1]; 1.0 falls in the top bin.
inline std::vector<std::size_t> overlap_histogram(const std::vector<double> &overlaps, std::size_t bins = 100) {
  if (bins == 0) throw std::invalid_argument("overlap_histogram: bins must be positive");
  std::vector<std::size_t> counts(bins, 0);
  for (double o : overlaps) {
    const auto b = static_cast<std::size_t>(std::clamp(o, 0.0, 1.0) * static_cast<double>(bins));
    ++counts[std::min(b, bins - 1)];
  }
  return counts;
}

/// Fraction of overlaps at or above `lower`.
inline double overlap_mass_above(const std::vector<double> &overlaps, double lower) {
  if (overlaps.empty()) return 0.0;
  const auto n = std::count_if(overlaps.begin(), overlaps.end(), [&](double o) { return o >= lower; });
  return static_cast<double>(n) / static_cast<double>(overlaps.size());
}

/// Root-mean-square distance of the overlaps from 1.
inline double overlap_deviation(const std::vector<double> &overlaps) {
  if (overlaps.empty()) return 0.0;
  double s = 0.0;
  for (double o : overlaps) s += (1.0 - o) * (1.0 - o);
  return std::sqrt(s / static_cast<double>(overlaps.size()));
}

struct MetricsReport {
  std::size_t pairs = 0;
  std::size_t dropped = 0;
  AteResult ate_aligned;
  AteResult ate_unaligned;
  KittiResult kitti;
  std::vector<FrameRpe> rpe;
  std::vector<double> planarity;
};

/// Full report for one estimate against ground truth.
inline MetricsReport evaluate(const Trajectory &gt, const Trajectory &est,
                              const std::vector<double> &segment_lengths = default_segment_lengths(),
                              std::int64_t max_dt = kDefaultAssociationMaxDt, double angular_weight = 1.0) {
  const Association assoc = associate(gt, est, max_dt);
  MetricsReport r;
  r.pairs = assoc.pairs.size();
  r.dropped = assoc.dropped;
  r.ate_aligned = ate(assoc.pairs, true);
  r.ate_unaligned = ate(assoc.pairs, false);
  r.kitti = kitti_relative_errors(assoc.pairs, segment_lengths);
  r.rpe = per_frame_rpe(assoc.pairs, 1);
  r.planarity = planarity_overlap(gt, angular_weight);
  return r;
}

}  // namespace radar_odom
