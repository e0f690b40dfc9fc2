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
 * \file dataset_io.hpp
 * \brief File formats: polar radar PNG, IMU CSV and pose trajectories.
 *
 * Polar PNG (8-bit grayscale, one image row per azimuth):
 *   bytes 0-7   little-endian uint64 timestamp, microseconds
 *   bytes 8-9   little-endian uint16 sweep counter, azimuth = counter * 2 pi / 5600
 *   byte  10    valid flag, rows with 0 are skipped
 *   bytes 11..  range-bin intensities
 *
 * IMU CSV: header "timestamp,wx,wy,wz,ax,ay,az" (us, rad/s, m/s^2).
 *
 * Trajectory text: "timestamp_s tx ty tz qx qy qz qw" per line.
 */
#pragma once

#include "radar_odom/errors.hpp"
#include "radar_odom/evaluation.hpp"
#include "radar_odom/imu_preint.hpp"
#include "radar_odom/radar_frontend.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace radar_odom {

inline constexpr std::uint16_t kSweepCounterModulus = 5600;
inline constexpr std::size_t kPolarHeaderBytes = 11;
inline constexpr const char *kFormatHint =
    " (expected the Oxford-style polar PNG layout; see 'Radar data format' in the README)";

inline double azimuth_from_counter(std::uint16_t counter) {
  return static_cast<double>(counter) * (2.0 * 3.14159265358979323846) / kSweepCounterModulus;
}

inline std::uint16_t counter_from_azimuth(double azimuth) {
  const double c = std::round(azimuth * kSweepCounterModulus / (2.0 * 3.14159265358979323846));
  const long v = static_cast<long>(c) % kSweepCounterModulus;
  return static_cast<std::uint16_t>(v < 0 ? v + kSweepCounterModulus : v);
}

namespace detail {

struct PngRows {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int interlace = 0;
  std::vector<std::uint8_t> pixels;
  long row = -1;
  std::string error;
};

inline void png_error_handler(png_structp png, png_const_charp msg) {
  static_cast<PngRows *>(png_get_error_ptr(png))->error = msg;
  png_longjmp(png, 1);
}

inline void png_warning_handler(png_structp, png_const_charp) {}

// All C++ state lives behind `out` so nothing in this frame changes between
// setjmp and a possible longjmp.
inline bool read_png_rows(std::FILE *fp, PngRows *out) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, out, png_error_handler, png_warning_handler);
  if (!png) {
    out->error = "cannot allocate libpng reader";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    if (out->error.empty()) out->error = "cannot allocate libpng info";
    return false;
  }
  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_get_IHDR(png, info, &out->width, &out->height, &out->bit_depth, &out->color_type, &out->interlace,
               nullptr, nullptr);
  if (out->bit_depth != 8 || out->color_type != PNG_COLOR_TYPE_GRAY || out->interlace != PNG_INTERLACE_NONE) {
    png_destroy_read_struct(&png, &info, nullptr);
    out->error = "expected a non-interlaced 8-bit grayscale image, got bit depth " +
                 std::to_string(out->bit_depth) + ", color type " + std::to_string(out->color_type);
    return false;
  }
  out->pixels.resize(static_cast<std::size_t>(out->width) * out->height);
  for (png_uint_32 r = 0; r < out->height; ++r) {
    out->row = static_cast<long>(r);
    png_read_row(png, out->pixels.data() + static_cast<std::size_t>(r) * out->width, nullptr);
  }
  out->row = -1;
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

template <typename T>
T read_le(const std::uint8_t *p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

template <typename T>
void write_le(std::uint8_t *p, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double &out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

/// Integer microseconds; also accepts an integral value in scientific notation.
inline bool parse_microseconds(std::string_view s, std::int64_t &out) {
  s = trim(s);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return true;
  double d;
  if (!parse_double(s, d) || !std::isfinite(d) || d != std::floor(d) || std::abs(d) > 9.0e15) return false;
  out = static_cast<std::int64_t>(d);
  return true;
}

/// Decimal seconds to microseconds without going through binary floating point
/// when the text is a plain decimal.
inline bool parse_seconds_as_us(std::string_view s, std::int64_t &out) {
  s = trim(s);
  if (s.empty()) return false;
  bool neg = false;
  std::string_view body = s;
  if (body.front() == '-' || body.front() == '+') {
    neg = body.front() == '-';
    body.remove_prefix(1);
  }
  const auto dot = body.find('.');
  const std::string_view ip = body.substr(0, dot);
  const std::string_view fp = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);
  const auto digits = [](std::string_view v) {
    return std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (!ip.empty() && digits(ip) && digits(fp) && ip.size() <= 12) {
    std::int64_t sec = 0;
    for (char c : ip) sec = sec * 10 + (c - '0');
    std::int64_t frac = 0;
    std::size_t k = 0;
    for (; k < fp.size() && k < 6; ++k) frac = frac * 10 + (fp[k] - '0');
    for (; k < 6; ++k) frac *= 10;
    if (fp.size() > 6 && fp[6] >= '5') ++frac;
    out = (sec * 1'000'000 + frac) * (neg ? -1 : 1);
    return true;
  }
  double d;
  if (!parse_double(s, d) || !std::isfinite(d)) return false;
  out = std::llround(d * 1e6);
  return true;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_seconds(std::int64_t us) {
  const bool neg = us < 0;
  const std::uint64_t a = neg ? static_cast<std::uint64_t>(-(us + 1)) + 1 : static_cast<std::uint64_t>(us);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%llu.%06llu", neg ? "-" : "", static_cast<unsigned long long>(a / 1'000'000),
                static_cast<unsigned long long>(a % 1'000'000));
  return buf;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::ifstream open_input(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const std::filesystem::path &path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace detail

/// Reads one polar sweep. The range resolution is not stored in the file.
inline PolarScan read_polar_png(const std::filesystem::path &path, double range_resolution = 0.04) {
  std::unique_ptr<std::FILE, int (*)(std::FILE *)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw InputError("cannot open radar scan " + path.string());
  png_byte sig[8] = {};
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw InputError(path.string() + ": not a PNG file" + kFormatHint);
  detail::PngRows rows;
  if (!detail::read_png_rows(fp.get(), &rows)) {
    const std::string where = rows.row >= 0 ? "row " + std::to_string(rows.row) + ": " : "";
    throw InputError(path.string() + ": " + where + rows.error + kFormatHint);
  }
  if (rows.width < kPolarHeaderBytes + 1)
    throw InputError(path.string() + ": row 0 has " + std::to_string(rows.width) + " bytes, need at least " +
                     std::to_string(kPolarHeaderBytes + 1) + " (11 header bytes and one range bin)" + kFormatHint);

  PolarScan scan;
  scan.range_resolution = range_resolution;
  scan.n_range_bins = rows.width - kPolarHeaderBytes;
  for (png_uint_32 r = 0; r < rows.height; ++r) {
    const std::uint8_t *row = rows.pixels.data() + static_cast<std::size_t>(r) * rows.width;
    if (row[10] == 0) continue;
    const auto ts = detail::read_le<std::uint64_t>(row);
    const auto counter = detail::read_le<std::uint16_t>(row + 8);
    if (counter >= kSweepCounterModulus)
      throw InputError(path.string() + ": row " + std::to_string(r) + ": sweep counter " + std::to_string(counter) +
                       " outside [0, 5600)" + kFormatHint);
    if (ts > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
      throw InputError(path.string() + ": row " + std::to_string(r) + ": timestamp out of range" + kFormatHint);
    const auto t = static_cast<std::int64_t>(ts);
    if (!scan.azimuth_timestamps.empty() && t <= scan.azimuth_timestamps.back())
      throw InputError(path.string() + ": row " + std::to_string(r) + ": timestamp " + std::to_string(t) +
                       " us does not increase");
    scan.azimuth_timestamps.push_back(t);
    scan.azimuth_angles.push_back(azimuth_from_counter(counter));
    scan.intensities.insert(scan.intensities.end(), row + kPolarHeaderBytes, row + rows.width);
  }
  return scan;
}

/// Writes a sweep in the polar PNG layout. Every row is marked valid.
inline void write_polar_png(const std::filesystem::path &path, const PolarScan &scan) {
  scan.validate();
  if (scan.n_azimuths() == 0 || scan.n_range_bins == 0) throw InputError("write_polar_png: empty scan");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::size_t width = kPolarHeaderBytes + scan.n_range_bins;
  std::vector<std::uint8_t> pixels(width * scan.n_azimuths());
  for (std::size_t r = 0; r < scan.n_azimuths(); ++r) {
    std::uint8_t *row = pixels.data() + r * width;
    detail::write_le<std::uint64_t>(row, static_cast<std::uint64_t>(scan.azimuth_timestamps[r]));
    detail::write_le<std::uint16_t>(row + 8, counter_from_azimuth(scan.azimuth_angles[r]));
    row[10] = 255;
    std::copy_n(scan.row(r).data(), scan.n_range_bins, row + kPolarHeaderBytes);
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(scan.n_azimuths());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw InputError("cannot write " + path.string() + ": " + msg);
  }
}

/// PNG files of a scan directory, ordered by their numeric file stem
/// (falling back to name order).
inline std::vector<std::filesystem::path> list_scan_files(const std::filesystem::path &dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("scan directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto &e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  auto key = [](const std::filesystem::path &p) {
    std::int64_t v = 0;
    const std::string stem = p.stem().string();
    const auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), v);
    const bool numeric = ec == std::errc() && ptr == stem.data() + stem.size();
    return std::make_tuple(!numeric, numeric ? v : 0, stem);
  };
  std::sort(files.begin(), files.end(), [&](const auto &a, const auto &b) { return key(a) < key(b); });
  return files;
}

inline constexpr const char *kImuCsvHeader = "timestamp,wx,wy,wz,ax,ay,az";

inline std::vector<ImuSample> read_imu_csv(const std::filesystem::path &path) {
  auto in = detail::open_input(path);
  std::vector<ImuSample> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  auto fail = [&](const std::string &msg) {
    throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view l = detail::trim(line);
    if (l.empty() || l.front() == '#') continue;
    if (!header) {
      if (l != kImuCsvHeader) fail("expected header '" + std::string(kImuCsvHeader) + "'");
      header = true;
      continue;
    }
    const auto f = detail::split(l, ',');
    if (f.size() != 7) fail("expected 7 fields, got " + std::to_string(f.size()));
    ImuSample s;
    if (!detail::parse_microseconds(f[0], s.timestamp)) fail("bad timestamp '" + std::string(f[0]) + "'");
    double v[6];
    for (int k = 0; k < 6; ++k)
      if (!detail::parse_double(f[k + 1], v[k]) || !std::isfinite(v[k]))
        fail("non-finite or malformed value '" + std::string(f[k + 1]) + "'");
    s.angular_velocity = Vec3(v[0], v[1], v[2]);
    s.linear_acceleration = Vec3(v[3], v[4], v[5]);
    if (!out.empty() && s.timestamp <= out.back().timestamp)
      fail(s.timestamp == out.back().timestamp ? "duplicate timestamp " + std::to_string(s.timestamp)
                                               : "timestamp " + std::to_string(s.timestamp) + " out of order");
    out.push_back(s);
  }
  if (!header) throw InputError(path.string() + ": missing header '" + std::string(kImuCsvHeader) + "'");
  return out;
}

inline void write_imu_csv(const std::filesystem::path &path, const std::vector<ImuSample> &samples,
                          const std::string &comment = {}) {
  auto out = detail::open_output(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << kImuCsvHeader << '\n';
  for (const auto &s : samples) {
    out << s.timestamp;
    for (int k = 0; k < 3; ++k) out << ',' << detail::format_double(s.angular_velocity[k]);
    for (int k = 0; k < 3; ++k) out << ',' << detail::format_double(s.linear_acceleration[k]);
    out << '\n';
  }
}

inline Trajectory read_trajectory(const std::filesystem::path &path) {
  auto in = detail::open_input(path);
  Trajectory out;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string &msg) {
    throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view l = detail::trim(line);
    if (l.empty() || l.front() == '#') continue;
    const auto f = detail::split_ws(l);
    if (f.size() != 8)
      fail("expected 8 fields 'timestamp_s tx ty tz qx qy qz qw', got " + std::to_string(f.size()));
    std::int64_t t;
    if (!detail::parse_seconds_as_us(f[0], t)) fail("bad timestamp '" + std::string(f[0]) + "'");
    double v[7];
    for (int k = 0; k < 7; ++k)
      if (!detail::parse_double(f[k + 1], v[k]) || !std::isfinite(v[k]))
        fail("non-finite or malformed value '" + std::string(f[k + 1]) + "'");
    const Eigen::Quaterniond q(v[6], v[3], v[4], v[5]);
    if (std::abs(q.norm() - 1.0) > 1e-3) fail("quaternion norm " + std::to_string(q.norm()) + " is not unit");
    if (!out.empty() && t <= out.back().timestamp) fail("timestamp does not increase");
    out.push_back({t, Pose(Rotation(q), Vec3(v[0], v[1], v[2]))});
  }
  return out;
}

inline void write_trajectory(const std::filesystem::path &path, const Trajectory &traj) {
  auto out = detail::open_output(path);
  for (const auto &s : traj) {
    const Vec3 &t = s.pose.translation();
    const auto &q = s.pose.rotation().quaternion();
    out << detail::format_seconds(s.timestamp);
    for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) out << ' ' << detail::format_double(v);
    out << '\n';
  }
}

}  // namespace radar_odom
