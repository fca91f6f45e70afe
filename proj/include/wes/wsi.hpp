#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "wes/image.hpp"

namespace wes {

enum class TransferSyntax { UncompressedRgb8, BaselineJpeg };
enum class Organization { TiledFull };

const char* transfer_syntax_name(TransferSyntax ts);

// Geometry and encoding of a tiled whole-slide image. Immutable once parsed;
// safe to share across threads.
struct WsiMetadata {
  uint32_t total_rows = 0;
  uint32_t total_cols = 0;
  uint32_t frame_rows = 0;
  uint32_t frame_cols = 0;
  uint32_t frame_count = 0;
  uint32_t frames_per_row = 0;  // frames per grid row, i.e. ceil(total_cols / frame_cols)
  TransferSyntax transfer_syntax = TransferSyntax::UncompressedRgb8;
  Organization organization = Organization::TiledFull;

  uint32_t frame_grid_rows() const { return frame_count / frames_per_row; }
  size_t frame_byte_size() const { return static_cast<size_t>(frame_rows) * frame_cols * 3; }
};

struct FrameExtent {
  uint64_t offset = 0;
  uint64_t length = 0;
};

// Row-major frame extents within the container byte stream.
using FrameIndex = std::vector<FrameExtent>;

struct ParsedWsi {
  WsiMetadata meta;
  FrameIndex index;
};

// Fills derived fields and checks the tiling arithmetic; throws
// MalformedContainer on inconsistency.
WsiMetadata make_metadata(uint32_t total_rows, uint32_t total_cols, uint32_t frame_rows,
                          uint32_t frame_cols, TransferSyntax ts);

// Sniffs the container format (SWSI fixture or DICOM part-10) and parses it.
ParsedWsi parse_wsi(std::span<const uint8_t> container);

// Frame extents must stay inside the container, in order and non-overlapping.
void validate_index(const ParsedWsi& parsed, uint64_t container_size);

// Full-size decoded frame; edge frames carry zero padding beyond image bounds.
std::vector<uint8_t> read_frame(const WsiMetadata& meta, const FrameIndex& index,
                                uint32_t frame_no, std::span<const uint8_t> container);

// Produces a frame's pixels from any backing store; shared by the local
// container path and the DICOMweb lazy path.
using FrameFetchFn =
    std::function<std::shared_ptr<const std::vector<uint8_t>>(uint32_t frame_no)>;

Patch assemble_patch(const WsiMetadata& meta, const PatchSpec& spec, const FrameFetchFn& fetch);

Patch extract_patch(const WsiMetadata& meta, const FrameIndex& index,
                    std::span<const uint8_t> container, const PatchSpec& spec);

// Frame-grid coordinates covered by a patch; row-major frame numbers.
std::vector<uint32_t> covered_frames(const WsiMetadata& meta, const PatchSpec& spec);

// Stitches every frame back into the full bitmap (exact for uncompressed).
Image reassemble(const WsiMetadata& meta, const FrameIndex& index,
                 std::span<const uint8_t> container);

}  // namespace wes
