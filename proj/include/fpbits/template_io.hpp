// Copyright 2026 The fpbits Authors
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

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fpbits/error.hpp"

namespace fpbits {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class MinutiaKind : std::uint8_t { Termination, Bifurcation, Other };

struct Minutia {
  double x = 0.0;      // pixels
  double y = 0.0;      // pixels
  double theta = 0.0;  // ridge direction, radians in [0, 2pi)
  MinutiaKind kind = MinutiaKind::Other;
  int quality = 0;     // 0..100, carried through but not used by the pipeline

  friend bool operator==(const Minutia&, const Minutia&) = default;
};

struct MinutiaTemplate {
  int width = 0;
  int height = 0;
  std::optional<double> resolution;  // pixels per cm
  std::vector<Minutia> minutiae;
  std::string subject_id;
  std::string impression_id;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Maps any finite angle into [0, 2pi).
inline double normalize_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;  // fmod rounding can land exactly on 2pi
  return t;
}

inline char kind_code(MinutiaKind k) {
  switch (k) {
    case MinutiaKind::Termination: return 'T';
    case MinutiaKind::Bifurcation: return 'B';
    case MinutiaKind::Other: return 'O';
  }
  return 'O';
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) return std::nullopt;
  }
  return value;
}

inline bool in_bounds(double v, int extent) {
  return v >= 0.0 && (extent <= 0 || v < static_cast<double>(extent));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Native text format
//
//   FPT <version> <width> <height> [<pixels-per-cm>]
//   <x> <y> <theta> <T|B|O> <quality>
//   ...
//
// '#' starts a comment that runs to end of line; blank lines are skipped.
// ---------------------------------------------------------------------------

inline constexpr int kTextFormatVersion = 1;

inline MinutiaTemplate parse_text_template(std::string_view text) {
  MinutiaTemplate t;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = detail::split_ws(line);
    if (tok.empty()) {
      if (eol == text.size()) break;
      continue;
    }

    if (!have_header) {
      if (tok[0] != "FPT" || (tok.size() != 4 && tok.size() != 5)) {
        throw Error(ErrorCode::MalformedHeader, "expected 'FPT <version> <width> <height>'", line_no);
      }
      auto version = detail::parse_number<int>(tok[1]);
      auto w = detail::parse_number<int>(tok[2]);
      auto h = detail::parse_number<int>(tok[3]);
      if (!version || !w || !h || *w < 0 || *h < 0) {
        throw Error(ErrorCode::MalformedHeader, "unparseable header fields", line_no);
      }
      if (*version != kTextFormatVersion) {
        throw Error(ErrorCode::MalformedHeader, "unsupported version " + std::string(tok[1]), line_no);
      }
      t.width = *w;
      t.height = *h;
      if (tok.size() == 5) {
        auto res = detail::parse_number<double>(tok[4]);
        if (!res || *res <= 0.0) throw Error(ErrorCode::MalformedHeader, "bad resolution", line_no);
        t.resolution = *res;
      }
      have_header = true;
      continue;
    }

    if (tok.size() != 5) {
      throw Error(ErrorCode::FieldOutOfRange, "expected 'x y theta kind quality'", line_no);
    }
    Minutia m;
    auto x = detail::parse_number<double>(tok[0]);
    auto y = detail::parse_number<double>(tok[1]);
    if (!x || !y || !detail::in_bounds(*x, t.width) || !detail::in_bounds(*y, t.height)) {
      throw Error(ErrorCode::FieldOutOfRange, "position outside image", line_no);
    }
    auto theta = detail::parse_number<double>(tok[2]);
    if (!theta) throw Error(ErrorCode::AngleUnparseable, "bad angle '" + std::string(tok[2]) + "'", line_no);
    if (tok[3] == "T") {
      m.kind = MinutiaKind::Termination;
    } else if (tok[3] == "B") {
      m.kind = MinutiaKind::Bifurcation;
    } else if (tok[3] == "O") {
      m.kind = MinutiaKind::Other;
    } else {
      throw Error(ErrorCode::FieldOutOfRange, "kind must be T, B or O", line_no);
    }
    auto q = detail::parse_number<int>(tok[4]);
    if (!q || *q < 0 || *q > 100) throw Error(ErrorCode::FieldOutOfRange, "quality must be 0..100", line_no);
    m.x = *x;
    m.y = *y;
    m.theta = normalize_angle(*theta);
    m.quality = *q;
    t.minutiae.push_back(m);
    if (eol == text.size()) break;
  }
  if (!have_header) throw Error(ErrorCode::MalformedHeader, "missing FPT header", line_no);
  return t;
}

inline std::string serialize_text_template(const MinutiaTemplate& t) {
  std::string out;
  char buf[160];
  if (t.resolution) {
    std::snprintf(buf, sizeof buf, "FPT %d %d %d %.17g\n", kTextFormatVersion, t.width, t.height, *t.resolution);
  } else {
    std::snprintf(buf, sizeof buf, "FPT %d %d %d\n", kTextFormatVersion, t.width, t.height);
  }
  out += buf;
  for (const Minutia& m : t.minutiae) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %c %d\n", m.x, m.y, m.theta, kind_code(m.kind), m.quality);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// ISO/IEC 19794-2:2005 finger minutiae record (subset).
//
// General header (24 bytes): "FMR\0", " 20\0", u32 record length,
// u16 device info, u16 width, u16 height, u16 x-res, u16 y-res (px/cm),
// u8 view count, u8 reserved. Per view: u8 finger position,
// u8 view|impression, u8 quality, u8 minutia count, then 6 bytes per
// minutia and a u16 extended-data length. All multi-byte fields big-endian.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kIsoHeaderSize = 24;

namespace detail {

class BigEndianCursor {
 public:
  BigEndianCursor(std::span<const std::uint8_t> data, std::size_t limit) : data_(data), limit_(limit) {}

  std::uint32_t read(int nbytes) {
    if (pos_ + static_cast<std::size_t>(nbytes) > limit_) {
      throw Error(ErrorCode::TruncatedRecord, "record ends inside a field", pos_);
    }
    std::uint32_t v = 0;
    for (int i = 0; i < nbytes; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }
  void skip(std::size_t n) {
    if (pos_ + n > limit_) throw Error(ErrorCode::TruncatedRecord, "extended data overruns record", pos_);
    pos_ += n;
  }
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

inline void put_be(std::vector<std::uint8_t>& out, std::uint32_t v, int nbytes) {
  for (int i = nbytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace detail

inline std::vector<MinutiaTemplate> parse_iso19794_2(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || bytes[0] != 'F' || bytes[1] != 'M' || bytes[2] != 'R' || bytes[3] != 0) {
    throw Error(ErrorCode::BadMagic, "not an ISO 19794-2 finger minutiae record", 0);
  }
  if (bytes.size() < 8) throw Error(ErrorCode::TruncatedRecord, "missing version", bytes.size());
  if (bytes[4] != ' ' || bytes[5] != '2' || bytes[6] != '0' || bytes[7] != 0) {
    throw Error(ErrorCode::UnsupportedVersion, "only version ' 20' is supported", 4);
  }
  if (bytes.size() < kIsoHeaderSize) throw Error(ErrorCode::TruncatedRecord, "short general header", bytes.size());

  detail::BigEndianCursor header(bytes, kIsoHeaderSize);
  header.skip(8);
  const std::uint32_t record_length = header.read(4);
  if (record_length < kIsoHeaderSize || record_length > bytes.size()) {
    throw Error(ErrorCode::TruncatedRecord, "declared length " + std::to_string(record_length) +
                                                " exceeds " + std::to_string(bytes.size()) + " bytes",
                8);
  }
  detail::BigEndianCursor cur(bytes, record_length);
  cur.skip(12);
  cur.read(2);  // capture equipment
  const int width = static_cast<int>(cur.read(2));
  const int height = static_cast<int>(cur.read(2));
  const std::uint32_t xres = cur.read(2);
  cur.read(2);  // y resolution; square pixels assumed
  const std::uint32_t views = cur.read(1);
  cur.read(1);

  std::vector<MinutiaTemplate> out;
  out.reserve(views);
  for (std::uint32_t v = 0; v < views; ++v) {
    MinutiaTemplate t;
    t.width = width;
    t.height = height;
    if (xres > 0) t.resolution = static_cast<double>(xres);
    cur.read(1);  // finger position
    cur.read(1);  // view number / impression type
    cur.read(1);  // finger quality
    const std::uint32_t count = cur.read(1);
    t.minutiae.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::size_t at = cur.position();
      const std::uint32_t xw = cur.read(2);
      const std::uint32_t yw = cur.read(2);
      const std::uint32_t angle = cur.read(1);
      const std::uint32_t quality = cur.read(1);
      Minutia m;
      switch (xw >> 14) {
        case 1: m.kind = MinutiaKind::Termination; break;
        case 2: m.kind = MinutiaKind::Bifurcation; break;
        default: m.kind = MinutiaKind::Other; break;
      }
      m.x = static_cast<double>(xw & 0x3fff);
      m.y = static_cast<double>(yw & 0x3fff);
      m.theta = normalize_angle(static_cast<double>(angle) * (kTwoPi / 256.0));
      if (!detail::in_bounds(m.x, width) || !detail::in_bounds(m.y, height)) {
        throw Error(ErrorCode::FieldOutOfRange, "minutia outside image", at);
      }
      if (quality > 100) throw Error(ErrorCode::FieldOutOfRange, "minutia quality above 100", at + 5);
      m.quality = static_cast<int>(quality);
      t.minutiae.push_back(m);
    }
    const std::uint32_t extended = cur.read(2);
    cur.skip(extended);
    out.push_back(std::move(t));
  }
  return out;
}

/// Writes a single-view record with no extended data. Positions are rounded
/// to integers and angles quantized to 2pi/256 steps, as the format requires.
inline std::vector<std::uint8_t> serialize_iso19794_2(const MinutiaTemplate& t) {
  if (t.minutiae.size() > 255) throw Error(ErrorCode::FieldOutOfRange, "at most 255 minutiae per view");
  if (t.width < 0 || t.width > 0xffff || t.height < 0 || t.height > 0xffff) {
    throw Error(ErrorCode::FieldOutOfRange, "image size does not fit 16 bits");
  }
  std::vector<std::uint8_t> out;
  const std::uint32_t length = static_cast<std::uint32_t>(kIsoHeaderSize + 4 + 6 * t.minutiae.size() + 2);
  out.reserve(length);
  for (char c : std::string_view("FMR\0 20\0", 8)) out.push_back(static_cast<std::uint8_t>(c));
  detail::put_be(out, length, 4);
  detail::put_be(out, 0, 2);
  detail::put_be(out, static_cast<std::uint32_t>(t.width), 2);
  detail::put_be(out, static_cast<std::uint32_t>(t.height), 2);
  const std::uint32_t res = t.resolution ? static_cast<std::uint32_t>(std::lround(*t.resolution)) & 0xffff : 0;
  detail::put_be(out, res, 2);
  detail::put_be(out, res, 2);
  out.push_back(1);  // one view
  out.push_back(0);
  out.push_back(0);  // finger position: unknown
  out.push_back(0);  // view 0, live-scan plain
  out.push_back(0);  // finger quality
  out.push_back(static_cast<std::uint8_t>(t.minutiae.size()));
  for (const Minutia& m : t.minutiae) {
    const std::uint32_t type = m.kind == MinutiaKind::Termination ? 1 : m.kind == MinutiaKind::Bifurcation ? 2 : 0;
    const auto x = static_cast<std::uint32_t>(std::clamp<long>(std::lround(m.x), 0, 0x3fff));
    const auto y = static_cast<std::uint32_t>(std::clamp<long>(std::lround(m.y), 0, 0x3fff));
    const auto angle = static_cast<std::uint32_t>(std::lround(normalize_angle(m.theta) * 256.0 / kTwoPi)) & 0xff;
    detail::put_be(out, (type << 14) | x, 2);
    detail::put_be(out, y, 2);
    out.push_back(static_cast<std::uint8_t>(angle));
    out.push_back(static_cast<std::uint8_t>(std::clamp(m.quality, 0, 100)));
  }
  detail::put_be(out, 0, 2);
  return out;
}

// ---------------------------------------------------------------------------
// Binary PGM (P5, maxval <= 255)
// ---------------------------------------------------------------------------

inline GrayImage read_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw Error(ErrorCode::BadMagic, "only binary PGM (P5) is supported", 0);
  }
  std::size_t pos = 2;
  auto next_token = [&]() -> std::string_view {
    while (pos < bytes.size()) {
      const char c = static_cast<char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    return {reinterpret_cast<const char*>(bytes.data()) + start, pos - start};
  };
  auto w = detail::parse_number<int>(next_token());
  auto h = detail::parse_number<int>(next_token());
  auto maxval = detail::parse_number<int>(next_token());
  if (!w || !h || !maxval || *w <= 0 || *h <= 0 || *maxval <= 0 || *maxval > 255) {
    throw Error(ErrorCode::MalformedHeader, "bad PGM header", pos);
  }
  if (pos >= bytes.size()) throw Error(ErrorCode::DimensionMismatch, "missing pixel data", pos);
  ++pos;  // single whitespace byte before the raster
  const std::size_t n = static_cast<std::size_t>(*w) * static_cast<std::size_t>(*h);
  if (bytes.size() - pos < n) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(n) + " pixels, got " + std::to_string(bytes.size() - pos), pos);
  }
  GrayImage img{*w, *h, {}};
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

inline std::vector<std::uint8_t> write_pgm(const GrayImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

}  // namespace fpbits
