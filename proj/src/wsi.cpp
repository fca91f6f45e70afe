#include "wes/wsi.hpp"

#include <cstring>

#include "wes/codec.hpp"
#include "wes/dicom.hpp"
#include "wes/error.hpp"
#include "wes/swsi.hpp"

namespace wes {

const char* transfer_syntax_name(TransferSyntax ts) {
  switch (ts) {
    case TransferSyntax::UncompressedRgb8: return "uncompressed-rgb8";
    case TransferSyntax::BaselineJpeg: return "baseline-jpeg";
  }
  return "unknown";
}

WsiMetadata make_metadata(uint32_t total_rows, uint32_t total_cols, uint32_t frame_rows,
                          uint32_t frame_cols, TransferSyntax ts) {
  if (total_rows == 0 || total_cols == 0 || frame_rows == 0 || frame_cols == 0) {
    throw Error(ErrorCode::MalformedContainer, "image and frame dimensions must be positive");
  }
  WsiMetadata meta;
  meta.total_rows = total_rows;
  meta.total_cols = total_cols;
  meta.frame_rows = frame_rows;
  meta.frame_cols = frame_cols;
  meta.frames_per_row = (total_cols + frame_cols - 1) / frame_cols;
  uint64_t grid_rows = (total_rows + frame_rows - 1) / frame_rows;
  uint64_t count = static_cast<uint64_t>(meta.frames_per_row) * grid_rows;
  if (count > 0xFFFFFFFFull) {
    throw Error(ErrorCode::MalformedContainer, "frame count overflows 32 bits");
  }
  meta.frame_count = static_cast<uint32_t>(count);
  meta.transfer_syntax = ts;
  return meta;
}

ParsedWsi parse_wsi(std::span<const uint8_t> container) {
  if (looks_like_swsi(container)) {
    ParsedWsi parsed = parse_swsi(container);
    validate_index(parsed, container.size());
    return parsed;
  }
  if (looks_like_dicom(container)) {
    ParsedWsi parsed = parse_dicom(container);
    validate_index(parsed, container.size());
    return parsed;
  }
  throw Error(ErrorCode::MalformedContainer, "unrecognized container (expected SWSI or DICOM)");
}

void validate_index(const ParsedWsi& parsed, uint64_t container_size) {
  if (parsed.index.size() != parsed.meta.frame_count) {
    throw Error(ErrorCode::MalformedContainer,
                "frame index has " + std::to_string(parsed.index.size()) + " entries for " +
                    std::to_string(parsed.meta.frame_count) + " frames");
  }
  uint64_t prev_end = 0;
  bool first = true;
  for (const auto& extent : parsed.index) {
    if (extent.offset + extent.length > container_size) {
      throw Error(ErrorCode::MalformedContainer, "frame extent exceeds container size");
    }
    if (!first && extent.offset < prev_end) {
      throw Error(ErrorCode::MalformedContainer, "frame extents overlap or are out of order");
    }
    prev_end = extent.offset + extent.length;
    first = false;
  }
}

std::vector<uint8_t> read_frame(const WsiMetadata& meta, const FrameIndex& index,
                                uint32_t frame_no, std::span<const uint8_t> container) {
  if (frame_no >= meta.frame_count) {
    throw Error(ErrorCode::FrameOutOfRange, "frame " + std::to_string(frame_no) + " of " +
                                                std::to_string(meta.frame_count));
  }
  const FrameExtent& extent = index[frame_no];
  if (extent.offset + extent.length > container.size()) {
    throw Error(ErrorCode::MalformedContainer, "frame extent exceeds container size");
  }
  auto payload = container.subspan(extent.offset, extent.length);

  if (meta.transfer_syntax == TransferSyntax::UncompressedRgb8) {
    if (payload.size() != meta.frame_byte_size()) {
      throw Error(ErrorCode::DecodeFailure,
                  "frame " + std::to_string(frame_no) + " payload is " +
                      std::to_string(payload.size()) + " bytes, expected " +
                      std::to_string(meta.frame_byte_size()));
    }
    return std::vector<uint8_t>(payload.begin(), payload.end());
  }

  Image decoded = decode_jpeg(payload);
  if (decoded.rows != meta.frame_rows || decoded.cols != meta.frame_cols) {
    throw Error(ErrorCode::DecodeFailure,
                "frame " + std::to_string(frame_no) + " decoded to " +
                    std::to_string(decoded.cols) + "x" + std::to_string(decoded.rows) +
                    ", expected " + std::to_string(meta.frame_cols) + "x" +
                    std::to_string(meta.frame_rows));
  }
  return std::move(decoded.pixels);
}

std::vector<uint32_t> covered_frames(const WsiMetadata& meta, const PatchSpec& spec) {
  require_in_bounds(spec, meta.total_rows, meta.total_cols);
  uint32_t gr0 = spec.y / meta.frame_rows;
  uint32_t gr1 = (spec.y + spec.height - 1) / meta.frame_rows;
  uint32_t gc0 = spec.x / meta.frame_cols;
  uint32_t gc1 = (spec.x + spec.width - 1) / meta.frame_cols;
  std::vector<uint32_t> frames;
  frames.reserve(static_cast<size_t>(gr1 - gr0 + 1) * (gc1 - gc0 + 1));
  for (uint32_t gr = gr0; gr <= gr1; ++gr) {
    for (uint32_t gc = gc0; gc <= gc1; ++gc) {
      frames.push_back(gr * meta.frames_per_row + gc);
    }
  }
  return frames;
}

Patch assemble_patch(const WsiMetadata& meta, const PatchSpec& spec, const FrameFetchFn& fetch) {
  require_in_bounds(spec, meta.total_rows, meta.total_cols);
  Patch patch;
  patch.spec = spec;
  patch.pixels.resize(static_cast<size_t>(spec.width) * spec.height * 3);

  uint32_t gr0 = spec.y / meta.frame_rows;
  uint32_t gr1 = (spec.y + spec.height - 1) / meta.frame_rows;
  uint32_t gc0 = spec.x / meta.frame_cols;
  uint32_t gc1 = (spec.x + spec.width - 1) / meta.frame_cols;

  for (uint32_t gr = gr0; gr <= gr1; ++gr) {
    for (uint32_t gc = gc0; gc <= gc1; ++gc) {
      uint32_t frame_no = gr * meta.frames_per_row + gc;
      auto frame = fetch(frame_no);
      if (!frame || frame->size() != meta.frame_byte_size()) {
        throw Error(ErrorCode::DecodeFailure,
                    "frame " + std::to_string(frame_no) + " has unexpected size");
      }
      // intersection of the patch with this frame, in image coordinates
      uint32_t fy = gr * meta.frame_rows;
      uint32_t fx = gc * meta.frame_cols;
      uint32_t y_begin = std::max(spec.y, fy);
      uint32_t y_end = std::min(spec.y + spec.height, fy + meta.frame_rows);
      uint32_t x_begin = std::max(spec.x, fx);
      uint32_t x_end = std::min(spec.x + spec.width, fx + meta.frame_cols);
      size_t run = static_cast<size_t>(x_end - x_begin) * 3;
      for (uint32_t y = y_begin; y < y_end; ++y) {
        const uint8_t* src =
            frame->data() +
            (static_cast<size_t>(y - fy) * meta.frame_cols + (x_begin - fx)) * 3;
        uint8_t* dst = patch.pixels.data() +
                       (static_cast<size_t>(y - spec.y) * spec.width + (x_begin - spec.x)) * 3;
        std::memcpy(dst, src, run);
      }
    }
  }
  return patch;
}

Patch extract_patch(const WsiMetadata& meta, const FrameIndex& index,
                    std::span<const uint8_t> container, const PatchSpec& spec) {
  return assemble_patch(meta, spec, [&](uint32_t frame_no) {
    return std::make_shared<const std::vector<uint8_t>>(
        read_frame(meta, index, frame_no, container));
  });
}

Image reassemble(const WsiMetadata& meta, const FrameIndex& index,
                 std::span<const uint8_t> container) {
  Image img = Image::blank(meta.total_rows, meta.total_cols);
  for (uint32_t frame_no = 0; frame_no < meta.frame_count; ++frame_no) {
    std::vector<uint8_t> frame = read_frame(meta, index, frame_no, container);
    uint32_t gr = frame_no / meta.frames_per_row;
    uint32_t gc = frame_no % meta.frames_per_row;
    uint32_t y0 = gr * meta.frame_rows;
    uint32_t x0 = gc * meta.frame_cols;
    uint32_t copy_rows = std::min(meta.frame_rows, meta.total_rows - y0);
    uint32_t copy_cols = std::min(meta.frame_cols, meta.total_cols - x0);
    for (uint32_t r = 0; r < copy_rows; ++r) {
      std::memcpy(img.row_ptr(y0 + r) + static_cast<size_t>(x0) * 3,
                  frame.data() + static_cast<size_t>(r) * meta.frame_cols * 3,
                  static_cast<size_t>(copy_cols) * 3);
    }
  }
  return img;
}

}  // namespace wes
