#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wes/image.hpp"
#include "wes/wsi.hpp"

namespace wes {

// Explicit little-endian DICOM part-10 subset for tiled whole-slide images:
// TILED_FULL organization, 8-bit RGB, pixel data either native (uncompressed)
// or encapsulated baseline JPEG with one fragment per frame.

bool looks_like_dicom(std::span<const uint8_t> bytes);

ParsedWsi parse_dicom(std::span<const uint8_t> bytes);

struct DicomWriteOptions {
  std::string organization = "TILED_FULL";
  int jpeg_quality = 95;
  bool with_basic_offset_table = true;
};

std::vector<uint8_t> write_dicom(const Image& bitmap, uint32_t frame_rows, uint32_t frame_cols,
                                 TransferSyntax ts, const DicomWriteOptions& opts = {});

}  // namespace wes
