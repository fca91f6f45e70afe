#include "wes/fixtures.hpp"

#include <cmath>
#include <cstring>

#include "wes/pcg.hpp"

namespace wes {

Image synth_uniform(uint32_t rows, uint32_t cols, uint8_t fill) {
  return Image::blank(rows, cols, fill);
}

Image synth_gradient(uint32_t rows, uint32_t cols) {
  Image img = Image::blank(rows, cols);
  for (uint32_t r = 0; r < rows; ++r) {
    uint8_t* row = img.row_ptr(r);
    for (uint32_t c = 0; c < cols; ++c) {
      row[c * 3 + 0] = static_cast<uint8_t>((r * 7 + c * 13) & 0xFF);
      row[c * 3 + 1] = static_cast<uint8_t>((r * 3 + c * 5 + 91) & 0xFF);
      row[c * 3 + 2] = static_cast<uint8_t>((r + 2 * c + 17) & 0xFF);
    }
  }
  return img;
}

Image synth_smooth(uint32_t rows, uint32_t cols) {
  Image img = Image::blank(rows, cols);
  for (uint32_t r = 0; r < rows; ++r) {
    uint8_t* row = img.row_ptr(r);
    double fr = rows > 1 ? static_cast<double>(r) / (rows - 1) : 0.0;
    for (uint32_t c = 0; c < cols; ++c) {
      double fc = cols > 1 ? static_cast<double>(c) / (cols - 1) : 0.0;
      row[c * 3 + 0] = static_cast<uint8_t>(std::lround(40.0 + 170.0 * fr));
      row[c * 3 + 1] = static_cast<uint8_t>(std::lround(40.0 + 170.0 * fc));
      row[c * 3 + 2] = static_cast<uint8_t>(std::lround(60.0 + 80.0 * fr + 80.0 * fc));
    }
  }
  return img;
}

Image synth_two_region(uint32_t rows, uint32_t cols, uint8_t left, uint8_t right) {
  Image img = Image::blank(rows, cols);
  uint32_t split = cols / 2;
  for (uint32_t r = 0; r < rows; ++r) {
    uint8_t* row = img.row_ptr(r);
    for (uint32_t c = 0; c < cols; ++c) {
      uint8_t v = c < split ? left : right;
      row[c * 3 + 0] = v;
      row[c * 3 + 1] = v;
      row[c * 3 + 2] = v;
    }
  }
  return img;
}

Image synth_noise(uint32_t rows, uint32_t cols, uint64_t seed) {
  Image img = Image::blank(rows, cols);
  Pcg32 rng(seed);
  for (auto& b : img.pixels) b = static_cast<uint8_t>(rng.next() & 0xFF);
  return img;
}

std::vector<std::vector<uint8_t>> tile_frames(const Image& bitmap, uint32_t frame_rows,
                                              uint32_t frame_cols) {
  uint32_t grid_cols = (bitmap.cols + frame_cols - 1) / frame_cols;
  uint32_t grid_rows = (bitmap.rows + frame_rows - 1) / frame_rows;
  std::vector<std::vector<uint8_t>> frames;
  frames.reserve(static_cast<size_t>(grid_rows) * grid_cols);
  for (uint32_t gr = 0; gr < grid_rows; ++gr) {
    for (uint32_t gc = 0; gc < grid_cols; ++gc) {
      std::vector<uint8_t> frame(static_cast<size_t>(frame_rows) * frame_cols * 3, 0);
      uint32_t y0 = gr * frame_rows;
      uint32_t x0 = gc * frame_cols;
      uint32_t copy_rows = std::min(frame_rows, bitmap.rows - y0);
      uint32_t copy_cols = std::min(frame_cols, bitmap.cols - x0);
      for (uint32_t r = 0; r < copy_rows; ++r) {
        std::memcpy(frame.data() + static_cast<size_t>(r) * frame_cols * 3,
                    bitmap.row_ptr(y0 + r) + static_cast<size_t>(x0) * 3,
                    static_cast<size_t>(copy_cols) * 3);
      }
      frames.push_back(std::move(frame));
    }
  }
  return frames;
}

}  // namespace wes
