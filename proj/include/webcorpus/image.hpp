#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "webcorpus/util.hpp"

namespace webcorpus {

// Decoded 8-bit RGB raster, row-major, top-down.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;  // 3 bytes per pixel

  uint8_t r(int row, int col) const { return rgb[3 * (size_t(row) * width + col)]; }
  uint8_t g(int row, int col) const { return rgb[3 * (size_t(row) * width + col) + 1]; }
  uint8_t b(int row, int col) const { return rgb[3 * (size_t(row) * width + col) + 2]; }

  void set(int row, int col, uint8_t rr, uint8_t gg, uint8_t bb) {
    size_t i = 3 * (size_t(row) * width + col);
    rgb[i] = rr;
    rgb[i + 1] = gg;
    rgb[i + 2] = bb;
  }

  static Raster make(int w, int h, uint8_t fill = 0) {
    Raster img;
    img.width = w;
    img.height = h;
    img.rgb.assign(size_t(w) * h * 3, fill);
    return img;
  }
};

namespace detail {

constexpr int kMaxDimension = 65535;

struct PnmReader {
  std::span<const uint8_t> d;
  size_t pos = 0;

  bool eof() const { return pos >= d.size(); }

  void skip_ws_and_comments() {
    while (!eof()) {
      char c = char(d[pos]);
      if (c == '#') {
        while (!eof() && d[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  }

  std::optional<long> read_int() {
    skip_ws_and_comments();
    if (eof() || d[pos] < '0' || d[pos] > '9') return std::nullopt;
    long v = 0;
    while (!eof() && d[pos] >= '0' && d[pos] <= '9') {
      v = v * 10 + (d[pos] - '0');
      if (v > 1'000'000'000) return std::nullopt;
      ++pos;
    }
    return v;
  }
};

inline std::optional<Raster> decode_pnm(std::span<const uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') return std::nullopt;
  char kind = char(bytes[1]);
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') return std::nullopt;
  bool ascii = kind == '2' || kind == '3';
  bool gray = kind == '2' || kind == '5';

  PnmReader r{bytes, 2};
  auto w = r.read_int();
  auto h = r.read_int();
  auto maxval = r.read_int();
  if (!w || !h || !maxval) return std::nullopt;
  if (*w < 1 || *h < 1 || *w > kMaxDimension || *h > kMaxDimension) return std::nullopt;
  if (*maxval < 1 || *maxval > 255) return std::nullopt;

  Raster img = Raster::make(int(*w), int(*h));
  size_t samples = size_t(*w) * size_t(*h) * (gray ? 1 : 3);
  std::vector<uint8_t> buf(samples);
  if (ascii) {
    for (size_t i = 0; i < samples; ++i) {
      auto v = r.read_int();
      if (!v || *v > *maxval) return std::nullopt;
      buf[i] = uint8_t(*v);
    }
  } else {
    // Binary data starts after exactly one whitespace byte.
    if (r.eof()) return std::nullopt;
    ++r.pos;
    if (bytes.size() - r.pos < samples) return std::nullopt;
    std::memcpy(buf.data(), bytes.data() + r.pos, samples);
  }
  for (size_t i = 0, n = size_t(*w) * size_t(*h); i < n; ++i) {
    if (gray)
      img.rgb[3 * i] = img.rgb[3 * i + 1] = img.rgb[3 * i + 2] = buf[i];
    else
      std::memcpy(&img.rgb[3 * i], &buf[3 * i], 3);
  }
  return img;
}

inline uint32_t le32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}
inline uint16_t le16(const uint8_t* p) { return uint16_t(p[0]) | uint16_t(p[1]) << 8; }

// Uncompressed 24-bit BI_RGB bitmaps, bottom-up or top-down.
inline std::optional<Raster> decode_bmp(std::span<const uint8_t> bytes) {
  if (bytes.size() < 54 || bytes[0] != 'B' || bytes[1] != 'M') return std::nullopt;
  uint32_t data_offset = le32(&bytes[10]);
  uint32_t header_size = le32(&bytes[14]);
  if (header_size < 40) return std::nullopt;
  int32_t w = int32_t(le32(&bytes[18]));
  int32_t h = int32_t(le32(&bytes[22]));
  uint16_t planes = le16(&bytes[26]);
  uint16_t bpp = le16(&bytes[28]);
  uint32_t compression = le32(&bytes[30]);
  bool top_down = h < 0;
  if (top_down) h = -h;
  if (planes != 1 || bpp != 24 || compression != 0) return std::nullopt;
  if (w < 1 || h < 1 || w > kMaxDimension || h > kMaxDimension) return std::nullopt;

  size_t row_bytes = (size_t(w) * 3 + 3) & ~size_t(3);
  if (data_offset > bytes.size() || bytes.size() - data_offset < row_bytes * size_t(h))
    return std::nullopt;

  Raster img = Raster::make(w, h);
  for (int row = 0; row < h; ++row) {
    int src_row = top_down ? row : h - 1 - row;
    const uint8_t* src = bytes.data() + data_offset + row_bytes * size_t(src_row);
    for (int col = 0; col < w; ++col)
      img.set(row, col, src[3 * col + 2], src[3 * col + 1], src[3 * col]);  // BGR order
  }
  return img;
}

}  // namespace detail

// Sniffs the format from the payload. Supported: PNM (P2/P3/P5/P6) and
// uncompressed 24-bit BMP.
inline std::optional<Raster> decode_image(std::span<const uint8_t> bytes) {
  if (auto img = detail::decode_pnm(bytes)) return img;
  if (auto img = detail::decode_bmp(bytes)) return img;
  return std::nullopt;
}

inline std::optional<Raster> decode_image(const std::string& bytes) {
  return decode_image(
      std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()));
}

inline std::vector<uint8_t> encode_ppm(const Raster& img) {
  std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.rgb.begin(), img.rgb.end());
  return out;
}

// Nearest-block upscale by an integer factor; used by fixtures and tests.
inline Raster upscale_blocks(const Raster& img, int factor) {
  Raster out = Raster::make(img.width * factor, img.height * factor);
  for (int row = 0; row < out.height; ++row)
    for (int col = 0; col < out.width; ++col)
      out.set(row, col, img.r(row / factor, col / factor), img.g(row / factor, col / factor),
              img.b(row / factor, col / factor));
  return out;
}

}  // namespace webcorpus
