#pragma once

#include <cstdint>
#include <vector>

#include "wes/image.hpp"

namespace wes {

// Synthetic bitmaps for fixtures and tests.

Image synth_uniform(uint32_t rows, uint32_t cols, uint8_t fill);

// High-frequency deterministic pattern; any stitching misalignment shows up
// as a byte difference.
Image synth_gradient(uint32_t rows, uint32_t cols);

// Low-frequency pattern that survives baseline JPEG within a small error.
Image synth_smooth(uint32_t rows, uint32_t cols);

// Left half `left`, right half `right`.
Image synth_two_region(uint32_t rows, uint32_t cols, uint8_t left, uint8_t right);

Image synth_noise(uint32_t rows, uint32_t cols, uint64_t seed);

// Cuts a bitmap into full-size row-major frames; edge frames are zero padded
// beyond the image bounds.
std::vector<std::vector<uint8_t>> tile_frames(const Image& bitmap, uint32_t frame_rows,
                                              uint32_t frame_cols);

}  // namespace wes
