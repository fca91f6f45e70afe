#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wes/image.hpp"
#include "wes/wsi.hpp"

namespace wes {

// SWSI: the in-house tiled container used for fixtures.
// Layout: magic "SWSI1", six little-endian u32 fields (total_rows, total_cols,
// frame_rows, frame_cols, codec 0=raw 1=jpeg, frame_count), frame_count
// little-endian u64 frame lengths, then the frame payloads in row-major order.

bool looks_like_swsi(std::span<const uint8_t> bytes);

ParsedWsi parse_swsi(std::span<const uint8_t> bytes);

std::vector<uint8_t> write_swsi(const Image& bitmap, uint32_t frame_rows, uint32_t frame_cols,
                                TransferSyntax ts, int jpeg_quality = 95);

}  // namespace wes
