#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

#include "wes/error.hpp"

namespace wes {

// Interleaved RGB, 8 bits per channel, row-major.
struct Image {
  uint32_t rows = 0;
  uint32_t cols = 0;
  std::vector<uint8_t> pixels;

  size_t byte_size() const { return static_cast<size_t>(rows) * cols * 3; }

  uint8_t* row_ptr(uint32_t r) { return pixels.data() + static_cast<size_t>(r) * cols * 3; }
  const uint8_t* row_ptr(uint32_t r) const {
    return pixels.data() + static_cast<size_t>(r) * cols * 3;
  }

  static Image blank(uint32_t rows, uint32_t cols, uint8_t fill = 0) {
    Image img;
    img.rows = rows;
    img.cols = cols;
    img.pixels.assign(static_cast<size_t>(rows) * cols * 3, fill);
    return img;
  }
};

// Requested region, (x = column, y = row), origin at the top-left corner.
struct PatchSpec {
  uint32_t x = 0;
  uint32_t y = 0;
  uint32_t width = 0;
  uint32_t height = 0;

  bool operator==(const PatchSpec&) const = default;
};

struct Patch {
  PatchSpec spec;
  std::vector<uint8_t> pixels;  // width*height*3, row-major RGB
};

inline void require_in_bounds(const PatchSpec& spec, uint32_t total_rows, uint32_t total_cols) {
  if (spec.width == 0 || spec.height == 0 ||
      static_cast<uint64_t>(spec.x) + spec.width > total_cols ||
      static_cast<uint64_t>(spec.y) + spec.height > total_rows) {
    throw Error(ErrorCode::PatchOutOfBounds,
                "patch (" + std::to_string(spec.x) + "," + std::to_string(spec.y) + "," +
                    std::to_string(spec.width) + "," + std::to_string(spec.height) +
                    ") exceeds image " + std::to_string(total_cols) + "x" +
                    std::to_string(total_rows));
  }
}

inline Patch crop(const Image& img, const PatchSpec& spec) {
  require_in_bounds(spec, img.rows, img.cols);
  Patch patch;
  patch.spec = spec;
  patch.pixels.resize(static_cast<size_t>(spec.width) * spec.height * 3);
  for (uint32_t r = 0; r < spec.height; ++r) {
    const uint8_t* src = img.row_ptr(spec.y + r) + static_cast<size_t>(spec.x) * 3;
    std::memcpy(patch.pixels.data() + static_cast<size_t>(r) * spec.width * 3, src,
                static_cast<size_t>(spec.width) * 3);
  }
  return patch;
}

}  // namespace wes
