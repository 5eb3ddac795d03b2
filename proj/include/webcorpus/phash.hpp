#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "webcorpus/image.hpp"
#include "webcorpus/util.hpp"

namespace webcorpus {

// 64-bit average perceptual hash. Canonical text form: 16 lowercase hex digits.
struct PHash64 {
  uint64_t bits = 0;

  std::string hex() const { return to_hex16(bits); }

  static std::optional<PHash64> from_hex(std::string_view s) {
    if (s.size() != 16) return std::nullopt;
    uint64_t v = 0;
    for (char c : s) {
      v <<= 4;
      if (c >= '0' && c <= '9')
        v |= uint64_t(c - '0');
      else if (c >= 'a' && c <= 'f')
        v |= uint64_t(c - 'a' + 10);
      else
        return std::nullopt;
    }
    return PHash64{v};
  }

  auto operator<=>(const PHash64&) const = default;
};

inline int hamming(PHash64 a, PHash64 b) { return std::popcount(a.bits ^ b.bits); }

// Average hash: box-filter the image to 8x8 ignoring aspect ratio, convert to
// Rec.601 luma, threshold each cell strictly above the mean, pack bits
// row-major with the row-0/col-0 bit most significant.
//
// All arithmetic is integer-exact. Per-cell channel sums are taken over the
// fractional pixel coverage scaled by 8 on each axis, so a cell's true mean
// is acc / (W*H) and the threshold comparison can be cross-multiplied instead
// of divided. Integer block upscaling therefore cannot change the hash.
inline PHash64 ahash(const Raster& img) {
  if (img.width < 1 || img.height < 1 || img.rgb.size() < size_t(img.width) * img.height * 3)
    throw Error("ahash requires a decoded image of at least 1x1 pixels");

  const int64_t w = img.width, h = img.height;
  int64_t luma[64];  // luma numerator per cell, denominator 1000*w*h

  for (int cy = 0; cy < 8; ++cy) {
    // Cell rows cover [cy*h, (cy+1)*h) on the axis scaled by 8; pixel row i
    // covers [8i, 8i+8).
    int64_t y0 = cy * h, y1 = (cy + 1) * h;
    int row_begin = int(y0 / 8), row_end = int((y1 + 7) / 8);
    for (int cx = 0; cx < 8; ++cx) {
      int64_t x0 = cx * w, x1 = (cx + 1) * w;
      int col_begin = int(x0 / 8), col_end = int((x1 + 7) / 8);
      int64_t acc_r = 0, acc_g = 0, acc_b = 0;
      for (int row = row_begin; row < row_end; ++row) {
        int64_t wy = std::min<int64_t>(8 * (row + 1), y1) - std::max<int64_t>(8 * row, y0);
        if (wy <= 0) continue;
        for (int col = col_begin; col < col_end; ++col) {
          int64_t wx = std::min<int64_t>(8 * (col + 1), x1) - std::max<int64_t>(8 * col, x0);
          if (wx <= 0) continue;
          int64_t wgt = wx * wy;
          acc_r += wgt * img.r(row, col);
          acc_g += wgt * img.g(row, col);
          acc_b += wgt * img.b(row, col);
        }
      }
      luma[cy * 8 + cx] = 299 * acc_r + 587 * acc_g + 114 * acc_b;
    }
  }

  int64_t total = 0;
  for (int i = 0; i < 64; ++i) total += luma[i];

  // bit = 1 iff cell luma strictly exceeds the mean of the 64 cells.
  uint64_t bits = 0;
  for (int i = 0; i < 64; ++i)
    if (64 * luma[i] > total) bits |= 1ull << (63 - i);
  return PHash64{bits};
}

}  // namespace webcorpus
