#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wes/image.hpp"

namespace wes {

enum class ImageFormat { Png, Jpeg, Unknown };

ImageFormat sniff_image_format(std::span<const uint8_t> bytes);

Image decode_png(std::span<const uint8_t> bytes);
std::vector<uint8_t> encode_png(const Image& img);

// Baseline JPEG. Encoding uses 4:4:4 sampling so smooth fixtures stay within
// a small per-channel error of the source bitmap.
Image decode_jpeg(std::span<const uint8_t> bytes);
std::vector<uint8_t> encode_jpeg(const Image& img, int quality = 95);

// Dispatch on magic bytes; throws BadImage for anything unrecognized.
Image decode_image(std::span<const uint8_t> bytes);

}  // namespace wes
