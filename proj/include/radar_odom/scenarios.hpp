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
 * \file scenarios.hpp
 * \brief Built-in synthetic scenarios.
 *
 *   flat_loop         planar 200 m loop among 300 poles, noise free
 *   pitch_roll_trail  winding trail over rolling terrain with pitch and roll
 *   ravine            flat approach, then a walled channel whose floor drops
 *                     by `ravine_depth`; the sequence ends at the bottom
 *
 * Every scenario starts at rest at the origin, level and facing +x, stays
 * still for one second and then ramps up to cruising speed.
 */
#pragma once

#include "radar_odom/pipeline.hpp"
#include "radar_odom/synthetic.hpp"

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace radar_odom {

struct ScenarioOptions {
  std::uint64_t seed = 1;
  double ravine_depth = 2.0;  // m
  double speed = 0.0;         // m/s, 0 keeps the scenario default
};

struct Scenario {
  std::string name;
  SyntheticWorld world;
  MotionModel motion;
  SensorSpec spec;
  NoiseConfig noise;
  double duration = 0.0;  // s

  SyntheticSequence sequence(std::uint64_t seed) const {
    return SyntheticSequence(world, motion, spec, noise, seed, duration);
  }
};

inline const std::vector<std::string> &scenario_names() {
  static const std::vector<std::string> names{"flat_loop", "pitch_roll_trail", "ravine"};
  return names;
}

namespace detail {

inline constexpr double kStill = 1.0;  // s at rest
inline constexpr double kRamp = 4.0;   // s to reach cruising speed
inline constexpr double kPi = 3.14159265358979323846;

/// Time at which a ramped trajectory has covered `distance`.
inline double time_for_distance(double distance, double speed) {
  return kStill + kRamp + (distance - 0.5 * speed * kRamp) / speed;
}

/// Poles scattered uniformly over a box, rejecting those `clearance` metres
/// or closer to the path.
template <typename PathDistance>
std::vector<Landmark> scatter_poles(std::mt19937_64 &rng, std::size_t count, double x0, double x1, double y0,
                                    double y1, double clearance, PathDistance dist_to_path) {
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1), refl(120.0, 255.0);
  std::vector<Landmark> out;
  while (out.size() < count) {
    const double x = ux(rng), y = uy(rng), r = refl(rng);
    if (dist_to_path(x, y) <= clearance) continue;
    out.push_back({Vec3(x, y, 0.0), r});
  }
  return out;
}

}  // namespace detail

inline Scenario flat_loop(const ScenarioOptions &opt = {}) {
  const double speed = opt.speed > 0 ? opt.speed : 2.0;
  const double circumference = 200.0;
  const double radius = circumference / (2.0 * detail::kPi);
  Scenario s;
  s.name = "flat_loop";
  s.noise = NoiseConfig::zero();
  s.duration = detail::time_for_distance(circumference, speed);
  s.motion = [=](const Jet2 &t) {
    const Jet2 arc = ramp_distance(t, detail::kStill, detail::kRamp, speed);
    const Jet2 phi = arc / radius;
    MotionJets m;
    m.x = radius * sin(phi);
    m.y = radius - radius * cos(phi);
    m.yaw = phi;
    return m;
  };
  std::mt19937_64 rng(opt.seed);
  s.world.landmarks = detail::scatter_poles(rng, 300, -75.0, 75.0, radius - 75.0, radius + 75.0, 4.0,
                                            [=](double x, double y) {
                                              return std::abs(std::hypot(x, y - radius) - radius);
                                            });
  return s;
}

inline Scenario pitch_roll_trail(const ScenarioOptions &opt = {}) {
  const double speed = opt.speed > 0 ? opt.speed : 2.0;
  const double length = 120.0;
  const double amp = 4.0, wave = 30.0;  // lateral winding, peak heading about 40 deg
  const double k = 2.0 * detail::kPi / wave;
  Scenario s;
  s.name = "pitch_roll_trail";
  s.noise = NoiseConfig::zero();
  s.duration = detail::time_for_distance(length, speed);
  s.motion = [=](const Jet2 &t) {
    const Jet2 x = ramp_distance(t, detail::kStill, detail::kRamp, speed);
    // attitude excitation fades in with the speed ramp
    const Jet2 gain = smootherstep((t - detail::kStill) / detail::kRamp);
    const Jet2 tt = t - detail::kStill;
    MotionJets m;
    m.x = x;
    m.y = amp * (1.0 - cos(k * x));
    m.z = 0.8 * gain * sin(2.0 * detail::kPi * x / 35.0);
    m.yaw = atan(amp * k * sin(k * x));
    m.pitch = gain * (4.0 * detail::kPi / 180.0) * sin(2.0 * detail::kPi * 0.4 * tt);
    m.roll = gain * (3.0 * detail::kPi / 180.0) * sin(2.0 * detail::kPi * 0.55 * tt + 1.0);
    return m;
  };
  std::mt19937_64 rng(opt.seed);
  s.world.landmarks = detail::scatter_poles(rng, 300, -50.0, length + 50.0, -60.0, 60.0, 4.0,
                                            [=](double x, double y) { return std::abs(y - amp * (1.0 - std::cos(k * x))); });
  return s;
}

inline Scenario ravine(const ScenarioOptions &opt = {}) {
  const double speed = opt.speed > 0 ? opt.speed : 3.0;
  const double depth = opt.ravine_depth;
  if (!(depth > 0.0)) throw std::invalid_argument("ravine: depth must be positive");
  const double entry = 45.0, descent_begin = 65.0, descent_end = 105.0, stop = 150.0;
  Scenario s;
  s.name = "ravine";
  s.duration = detail::time_for_distance(stop, speed);
  s.motion = [=](const Jet2 &t) {
    const Jet2 x = ramp_distance(t, detail::kStill, detail::kRamp, speed);
    const Jet2 u = (x - descent_begin) / (descent_end - descent_begin);
    const Jet2 step = smootherstep(u);
    // slope dz/dx of the floor as a function of x
    Jet2 slope = Jet2::constant(0.0);
    if (u.v > 0.0 && u.v < 1.0) slope = (-depth / (descent_end - descent_begin)) * 30.0 * u * u * (u - 1.0) * (u - 1.0);
    MotionJets m;
    m.x = x;
    m.z = -depth * step;
    m.pitch = atan(-1.0 * slope);
    return m;
  };
  Ravine r;
  r.center = Eigen::Vector2d(0.5 * (entry + 170.0), 0.0);
  r.length = 170.0 - entry;
  r.width = 8.0;
  r.depth = depth;
  r.wall_reflectivity = 100.0;
  s.world.ravine = r;
  std::mt19937_64 rng(opt.seed);
  s.world.landmarks = detail::scatter_poles(rng, 250, -80.0, entry - 5.0, -60.0, 60.0, 4.0,
                                            [](double, double y) { return std::abs(y); });
  return s;
}

struct ScenarioRun {
  Trajectory estimate;
  Trajectory ground_truth;
  std::vector<FrameResult> frames;
};

/// Renders the scenario scan by scan and feeds it to the odometry. The IMU
/// stream is handed to the pipeline only when `provide_imu` is set.
inline ScenarioRun run_scenario(const Scenario &scenario, std::uint64_t seed, const OdometryConfig &config,
                                bool provide_imu) {
  const SyntheticSequence seq = scenario.sequence(seed);
  RadarOdometry odom(config, provide_imu ? seq.imu() : std::vector<ImuSample>{});
  for (std::size_t k = 0; k < seq.scan_count(); ++k) odom.process(seq.scan(k));
  return {odom.trajectory(), seq.ground_truth(), odom.results()};
}

inline Scenario make_scenario(const std::string &name, const ScenarioOptions &opt = {}) {
  if (name == "flat_loop") return flat_loop(opt);
  if (name == "pitch_roll_trail") return pitch_roll_trail(opt);
  if (name == "ravine") return ravine(opt);
  throw InputError("unknown scenario '" + name + "' (expected flat_loop, pitch_roll_trail or ravine)");
}

}  // namespace radar_odom
