#include "wes/swsi.hpp"

#include <cstring>

#include "wes/codec.hpp"
#include "wes/error.hpp"
#include "wes/fixtures.hpp"

namespace wes {

namespace {

constexpr char kMagic[5] = {'S', 'W', 'S', 'I', '1'};

uint32_t read_u32(std::span<const uint8_t> bytes, size_t pos) {
  return static_cast<uint32_t>(bytes[pos]) | (static_cast<uint32_t>(bytes[pos + 1]) << 8) |
         (static_cast<uint32_t>(bytes[pos + 2]) << 16) |
         (static_cast<uint32_t>(bytes[pos + 3]) << 24);
}

uint64_t read_u64(std::span<const uint8_t> bytes, size_t pos) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[pos + i];
  return v;
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

}  // namespace

bool looks_like_swsi(std::span<const uint8_t> bytes) {
  return bytes.size() >= sizeof(kMagic) && std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0;
}

ParsedWsi parse_swsi(std::span<const uint8_t> bytes) {
  constexpr size_t kHeaderSize = sizeof(kMagic) + 6 * 4;
  if (bytes.size() < kHeaderSize) {
    throw Error(ErrorCode::MalformedContainer, "swsi: truncated header");
  }
  if (!looks_like_swsi(bytes)) {
    throw Error(ErrorCode::MalformedContainer, "swsi: bad magic");
  }
  size_t pos = sizeof(kMagic);
  uint32_t total_rows = read_u32(bytes, pos);
  uint32_t total_cols = read_u32(bytes, pos + 4);
  uint32_t frame_rows = read_u32(bytes, pos + 8);
  uint32_t frame_cols = read_u32(bytes, pos + 12);
  uint32_t codec = read_u32(bytes, pos + 16);
  uint32_t frame_count = read_u32(bytes, pos + 20);
  pos += 24;

  if (codec > 1) {
    throw Error(ErrorCode::UnsupportedTransferSyntax,
                "swsi: unknown codec " + std::to_string(codec));
  }
  TransferSyntax ts = codec == 0 ? TransferSyntax::UncompressedRgb8 : TransferSyntax::BaselineJpeg;
  WsiMetadata meta = make_metadata(total_rows, total_cols, frame_rows, frame_cols, ts);
  if (meta.frame_count != frame_count) {
    throw Error(ErrorCode::MalformedContainer,
                "swsi: declared frame_count " + std::to_string(frame_count) +
                    " does not match tiling arithmetic " + std::to_string(meta.frame_count));
  }

  if (bytes.size() < pos + static_cast<size_t>(frame_count) * 8) {
    throw Error(ErrorCode::MalformedContainer, "swsi: truncated length table");
  }
  FrameIndex index;
  index.reserve(frame_count);
  uint64_t offset = pos + static_cast<uint64_t>(frame_count) * 8;
  for (uint32_t i = 0; i < frame_count; ++i) {
    uint64_t len = read_u64(bytes, pos + static_cast<size_t>(i) * 8);
    index.push_back({offset, len});
    offset += len;
  }
  if (offset > bytes.size()) {
    throw Error(ErrorCode::MalformedContainer, "swsi: frame payloads exceed container size");
  }
  return {meta, std::move(index)};
}

std::vector<uint8_t> write_swsi(const Image& bitmap, uint32_t frame_rows, uint32_t frame_cols,
                                TransferSyntax ts, int jpeg_quality) {
  WsiMetadata meta =
      make_metadata(bitmap.rows, bitmap.cols, frame_rows, frame_cols, ts);
  std::vector<std::vector<uint8_t>> frames = tile_frames(bitmap, frame_rows, frame_cols);
  if (ts == TransferSyntax::BaselineJpeg) {
    for (auto& frame : frames) {
      Image f;
      f.rows = frame_rows;
      f.cols = frame_cols;
      f.pixels = std::move(frame);
      frame = encode_jpeg(f, jpeg_quality);
    }
  }

  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + sizeof(kMagic));
  put_u32(out, meta.total_rows);
  put_u32(out, meta.total_cols);
  put_u32(out, meta.frame_rows);
  put_u32(out, meta.frame_cols);
  put_u32(out, ts == TransferSyntax::UncompressedRgb8 ? 0u : 1u);
  put_u32(out, meta.frame_count);
  for (const auto& frame : frames) put_u64(out, frame.size());
  for (const auto& frame : frames) out.insert(out.end(), frame.begin(), frame.end());
  return out;
}

}  // namespace wes
