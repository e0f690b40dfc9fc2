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
 * \file errors.hpp
 * \brief Exception types shared by the library and the command-line tool.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace radar_odom {

/// Malformed or unreadable input data (files, samples, scans).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Registration could not constrain all six pose degrees of freedom.
class DegenerateRegistration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// IMU samples do not cover the requested integration window.
class ImuCoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An orientation was requested outside the span of an orientation source.
class OrientationSpanError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A metric has no valid input (no pairs, zero path length, no segments).
class DegenerateEvaluation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace radar_odom
