#include "wes/dicom.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <optional>

#include "wes/codec.hpp"
#include "wes/error.hpp"
#include "wes/fixtures.hpp"

namespace wes {

namespace {

constexpr uint32_t kUndefinedLength = 0xFFFFFFFFu;

constexpr const char* kUidExplicitLittleEndian = "1.2.840.10008.1.2.1";
constexpr const char* kUidJpegBaseline = "1.2.840.10008.1.2.4.50";
constexpr const char* kUidImplicitLittleEndian = "1.2.840.10008.1.2";
constexpr const char* kUidVlWsiStorage = "1.2.840.10008.5.1.4.1.1.77.1.6";

struct Tag {
  uint16_t group;
  uint16_t element;
  bool operator<(const Tag& o) const {
    return group != o.group ? group < o.group : element < o.element;
  }
  bool operator==(const Tag& o) const = default;
};

constexpr Tag kTagTransferSyntax{0x0002, 0x0010};
constexpr Tag kTagOrganizationType{0x0020, 0x9311};
constexpr Tag kTagSamplesPerPixel{0x0028, 0x0002};
constexpr Tag kTagPhotometric{0x0028, 0x0004};
constexpr Tag kTagNumberOfFrames{0x0028, 0x0008};
constexpr Tag kTagRows{0x0028, 0x0010};
constexpr Tag kTagColumns{0x0028, 0x0011};
constexpr Tag kTagBitsAllocated{0x0028, 0x0100};
constexpr Tag kTagTotalMatrixCols{0x0048, 0x0006};
constexpr Tag kTagTotalMatrixRows{0x0048, 0x0007};
constexpr Tag kTagPixelData{0x7FE0, 0x0010};
constexpr Tag kTagItem{0xFFFE, 0xE000};
constexpr Tag kTagSequenceDelimiter{0xFFFE, 0xE0DD};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  size_t pos() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }
  bool at_end() const { return pos_ >= bytes_.size(); }

  void need(size_t n) const {
    if (remaining() < n) {
      throw Error(ErrorCode::MalformedContainer, "dicom: truncated at offset " +
                                                     std::to_string(pos_) + " (need " +
                                                     std::to_string(n) + " bytes)");
    }
  }

  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }

  uint32_t u32() {
    need(4);
    uint32_t v = static_cast<uint32_t>(bytes_[pos_]) |
                 (static_cast<uint32_t>(bytes_[pos_ + 1]) << 8) |
                 (static_cast<uint32_t>(bytes_[pos_ + 2]) << 16) |
                 (static_cast<uint32_t>(bytes_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }

  std::span<const uint8_t> take(size_t n) {
    need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  void skip(size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

bool is_long_vr(const char vr[2]) {
  auto eq = [&](const char* s) { return vr[0] == s[0] && vr[1] == s[1]; };
  return eq("OB") || eq("OW") || eq("OF") || eq("OL") || eq("OD") || eq("SQ") || eq("UC") ||
         eq("UR") || eq("UT") || eq("UN");
}

std::string trim_value(std::span<const uint8_t> raw) {
  std::string s(reinterpret_cast<const char*>(raw.data()), raw.size());
  while (!s.empty() && (s.back() == '\0' || s.back() == ' ')) s.pop_back();
  while (!s.empty() && s.front() == ' ') s.erase(s.begin());
  return s;
}

uint32_t numeric_value(const std::string& vr, std::span<const uint8_t> raw, Tag tag) {
  auto bad = [&](const char* why) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "dicom: tag (%04X,%04X) %s", tag.group, tag.element, why);
    throw Error(ErrorCode::MalformedContainer, buf);
  };
  if (vr == "US") {
    if (raw.size() < 2) bad("US value too short");
    return static_cast<uint32_t>(raw[0] | (raw[1] << 8));
  }
  if (vr == "UL") {
    if (raw.size() < 4) bad("UL value too short");
    return static_cast<uint32_t>(raw[0]) | (static_cast<uint32_t>(raw[1]) << 8) |
           (static_cast<uint32_t>(raw[2]) << 16) | (static_cast<uint32_t>(raw[3]) << 24);
  }
  if (vr == "IS") {
    std::string s = trim_value(raw);
    if (s.empty()) bad("empty IS value");
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (end == nullptr || *end != '\0' || v < 0) bad("bad IS value");
    return static_cast<uint32_t>(v);
  }
  bad(("unexpected VR " + vr).c_str());
  return 0;  // unreachable
}

struct PixelDataInfo {
  bool encapsulated = false;
  uint64_t native_offset = 0;
  uint64_t native_length = 0;
  std::vector<FrameExtent> fragments;  // encapsulated only, in frame order
};

// Encapsulated pixel data: basic offset table item, one fragment item per
// frame, sequence delimiter. Offsets in the table are measured from the first
// byte after the table item and are honored when present.
PixelDataInfo parse_encapsulated(Reader& reader) {
  PixelDataInfo info;
  info.encapsulated = true;

  Tag tag{reader.u16(), reader.u16()};
  if (!(tag == kTagItem)) {
    throw Error(ErrorCode::MalformedContainer, "dicom: encapsulated pixel data missing offset table item");
  }
  uint32_t bot_length = reader.u32();
  if (bot_length == kUndefinedLength || bot_length % 4 != 0) {
    throw Error(ErrorCode::MalformedContainer, "dicom: bad basic offset table length");
  }
  std::vector<uint32_t> table(bot_length / 4);
  {
    auto raw = reader.take(bot_length);
    for (size_t i = 0; i < table.size(); ++i) {
      table[i] = static_cast<uint32_t>(raw[i * 4]) | (static_cast<uint32_t>(raw[i * 4 + 1]) << 8) |
                 (static_cast<uint32_t>(raw[i * 4 + 2]) << 16) |
                 (static_cast<uint32_t>(raw[i * 4 + 3]) << 24);
    }
  }

  const uint64_t fragment_base = reader.pos();
  std::vector<std::pair<uint64_t, FrameExtent>> fragments;  // (item offset, extent)
  for (;;) {
    Tag t{reader.u16(), reader.u16()};
    uint32_t length = reader.u32();
    if (t == kTagSequenceDelimiter) break;
    if (!(t == kTagItem) || length == kUndefinedLength) {
      throw Error(ErrorCode::MalformedContainer, "dicom: bad pixel data fragment item");
    }
    uint64_t item_offset = reader.pos() - 8 - fragment_base;
    fragments.push_back({item_offset, {reader.pos(), length}});
    reader.skip(length);
  }

  if (table.empty()) {
    for (auto& [off, extent] : fragments) info.fragments.push_back(extent);
    return info;
  }
  // map each table offset to its fragment
  for (uint32_t wanted : table) {
    auto it = std::find_if(fragments.begin(), fragments.end(),
                           [&](const auto& f) { return f.first == wanted; });
    if (it == fragments.end()) {
      throw Error(ErrorCode::MalformedContainer,
                  "dicom: offset table entry " + std::to_string(wanted) +
                      " matches no fragment");
    }
    info.fragments.push_back(it->second);
  }
  return info;
}

}  // namespace

bool looks_like_dicom(std::span<const uint8_t> bytes) {
  return bytes.size() >= 132 && std::memcmp(bytes.data() + 128, "DICM", 4) == 0;
}

ParsedWsi parse_dicom(std::span<const uint8_t> bytes) {
  if (!looks_like_dicom(bytes)) {
    throw Error(ErrorCode::MalformedContainer, "dicom: missing part-10 preamble");
  }
  Reader reader(bytes);
  reader.skip(132);

  std::map<Tag, std::pair<std::string, std::vector<uint8_t>>> values;  // tag -> (vr, value)
  std::optional<PixelDataInfo> pixel_data;

  // File meta and dataset are both explicit little-endian, so one element
  // loop covers the whole stream.
  while (!reader.at_end()) {
    Tag tag{reader.u16(), reader.u16()};
    auto vr_raw = reader.take(2);
    char vr[3] = {static_cast<char>(vr_raw[0]), static_cast<char>(vr_raw[1]), 0};
    if (vr[0] < 'A' || vr[0] > 'Z' || vr[1] < 'A' || vr[1] > 'Z') {
      throw Error(ErrorCode::MalformedContainer,
                  "dicom: invalid VR at offset " + std::to_string(reader.pos() - 2) +
                      " (implicit VR containers are not supported)");
    }
    uint32_t length;
    if (is_long_vr(vr)) {
      reader.skip(2);
      length = reader.u32();
    } else {
      length = reader.u16();
    }

    if (tag == kTagPixelData) {
      PixelDataInfo info;
      if (length == kUndefinedLength) {
        info = parse_encapsulated(reader);
      } else {
        info.encapsulated = false;
        info.native_offset = reader.pos();
        info.native_length = length;
        reader.skip(length);
      }
      pixel_data = std::move(info);
      continue;
    }

    if (length == kUndefinedLength) {
      // Only defined-length sequences are part of the supported subset.
      throw Error(ErrorCode::MalformedContainer,
                  "dicom: undefined-length element outside pixel data");
    }
    auto value = reader.take(length);
    values[tag] = {std::string(vr), std::vector<uint8_t>(value.begin(), value.end())};

    if (tag == kTagTransferSyntax) {
      std::string uid = trim_value(value);
      if (uid == kUidImplicitLittleEndian) {
        throw Error(ErrorCode::UnsupportedTransferSyntax,
                    "dicom: implicit VR little endian is not supported");
      }
    }
  }

  auto require = [&](Tag tag, const char* name) -> std::pair<std::string, std::vector<uint8_t>>& {
    auto it = values.find(tag);
    if (it == values.end()) {
      throw Error(ErrorCode::MalformedContainer, std::string("dicom: missing ") + name);
    }
    return it->second;
  };

  auto& ts_value = require(kTagTransferSyntax, "TransferSyntaxUID");
  std::string ts_uid = trim_value(ts_value.second);
  TransferSyntax ts;
  if (ts_uid == kUidExplicitLittleEndian) {
    ts = TransferSyntax::UncompressedRgb8;
  } else if (ts_uid == kUidJpegBaseline) {
    ts = TransferSyntax::BaselineJpeg;
  } else {
    throw Error(ErrorCode::UnsupportedTransferSyntax, "dicom: transfer syntax " + ts_uid);
  }

  auto& org_value = require(kTagOrganizationType, "DimensionOrganizationType");
  std::string organization = trim_value(org_value.second);
  if (organization != "TILED_FULL") {
    throw Error(ErrorCode::UnsupportedOrganization,
                "dicom: dimension organization " + organization + " (only TILED_FULL)");
  }

  auto numeric = [&](Tag tag, const char* name) {
    auto& v = require(tag, name);
    return numeric_value(v.first, v.second, tag);
  };

  uint32_t samples = numeric(kTagSamplesPerPixel, "SamplesPerPixel");
  uint32_t bits = numeric(kTagBitsAllocated, "BitsAllocated");
  if (samples != 3 || bits != 8) {
    throw Error(ErrorCode::UnsupportedTransferSyntax,
                "dicom: only 8-bit RGB pixel encoding is supported (samples=" +
                    std::to_string(samples) + ", bits=" + std::to_string(bits) + ")");
  }
  if (auto it = values.find(kTagPhotometric); it != values.end()) {
    std::string photometric = trim_value(it->second.second);
    if (photometric != "RGB" && photometric != "YBR_FULL_422" && photometric != "YBR_FULL") {
      throw Error(ErrorCode::UnsupportedTransferSyntax,
                  "dicom: photometric interpretation " + photometric);
    }
  }

  uint32_t frame_rows = numeric(kTagRows, "Rows");
  uint32_t frame_cols = numeric(kTagColumns, "Columns");
  uint32_t total_rows = numeric(kTagTotalMatrixRows, "TotalPixelMatrixRows");
  uint32_t total_cols = numeric(kTagTotalMatrixCols, "TotalPixelMatrixColumns");
  uint32_t frame_count = numeric(kTagNumberOfFrames, "NumberOfFrames");

  WsiMetadata meta = make_metadata(total_rows, total_cols, frame_rows, frame_cols, ts);
  if (meta.frame_count != frame_count) {
    throw Error(ErrorCode::MalformedContainer,
                "dicom: NumberOfFrames " + std::to_string(frame_count) +
                    " does not match tiling arithmetic " + std::to_string(meta.frame_count));
  }

  if (!pixel_data.has_value()) {
    throw Error(ErrorCode::MalformedContainer, "dicom: missing PixelData");
  }

  FrameIndex index;
  if (pixel_data->encapsulated) {
    if (ts != TransferSyntax::BaselineJpeg) {
      throw Error(ErrorCode::MalformedContainer,
                  "dicom: encapsulated pixel data with uncompressed transfer syntax");
    }
    if (pixel_data->fragments.size() != meta.frame_count) {
      throw Error(ErrorCode::MalformedContainer,
                  "dicom: " + std::to_string(pixel_data->fragments.size()) + " fragments for " +
                      std::to_string(meta.frame_count) + " frames");
    }
    index = pixel_data->fragments;
  } else {
    if (ts != TransferSyntax::UncompressedRgb8) {
      throw Error(ErrorCode::MalformedContainer,
                  "dicom: native pixel data with compressed transfer syntax");
    }
    size_t frame_bytes = meta.frame_byte_size();
    uint64_t expected = static_cast<uint64_t>(frame_bytes) * meta.frame_count;
    uint64_t declared = pixel_data->native_length;
    if (declared != expected && declared != expected + (expected & 1)) {
      throw Error(ErrorCode::MalformedContainer,
                  "dicom: pixel data length " + std::to_string(declared) + ", expected " +
                      std::to_string(expected));
    }
    index.reserve(meta.frame_count);
    for (uint32_t i = 0; i < meta.frame_count; ++i) {
      index.push_back({pixel_data->native_offset + static_cast<uint64_t>(i) * frame_bytes,
                       frame_bytes});
    }
  }
  return {meta, std::move(index)};
}

// ---------------------------------------------------------------------------
// Fixture writer.

namespace {

class Writer {
 public:
  std::vector<uint8_t>& bytes() { return out_; }

  void raw(std::span<const uint8_t> data) { out_.insert(out_.end(), data.begin(), data.end()); }
  void u16(uint16_t v) {
    out_.push_back(static_cast<uint8_t>(v & 0xFF));
    out_.push_back(static_cast<uint8_t>(v >> 8));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
  }

  // Even-padded element with explicit VR.
  void element(Tag tag, const char* vr, std::vector<uint8_t> value) {
    if (value.size() % 2 != 0) {
      uint8_t pad = (std::strcmp(vr, "UI") == 0 || std::strcmp(vr, "OB") == 0) ? 0 : ' ';
      value.push_back(pad);
    }
    u16(tag.group);
    u16(tag.element);
    out_.push_back(vr[0]);
    out_.push_back(vr[1]);
    if (is_long_vr(vr)) {
      u16(0);
      u32(static_cast<uint32_t>(value.size()));
    } else {
      u16(static_cast<uint16_t>(value.size()));
    }
    raw(value);
  }

  void element_str(Tag tag, const char* vr, const std::string& s) {
    element(tag, vr, std::vector<uint8_t>(s.begin(), s.end()));
  }
  void element_us(Tag tag, uint16_t v) {
    element(tag, "US", {static_cast<uint8_t>(v & 0xFF), static_cast<uint8_t>(v >> 8)});
  }
  void element_ul(Tag tag, uint32_t v) {
    element(tag, "UL",
            {static_cast<uint8_t>(v & 0xFF), static_cast<uint8_t>((v >> 8) & 0xFF),
             static_cast<uint8_t>((v >> 16) & 0xFF), static_cast<uint8_t>((v >> 24) & 0xFF)});
  }

 private:
  std::vector<uint8_t> out_;
};

}  // namespace

std::vector<uint8_t> write_dicom(const Image& bitmap, uint32_t frame_rows, uint32_t frame_cols,
                                 TransferSyntax ts, const DicomWriteOptions& opts) {
  WsiMetadata meta = make_metadata(bitmap.rows, bitmap.cols, frame_rows, frame_cols, ts);
  std::vector<std::vector<uint8_t>> frames = tile_frames(bitmap, frame_rows, frame_cols);
  if (ts == TransferSyntax::BaselineJpeg) {
    for (auto& frame : frames) {
      Image f;
      f.rows = frame_rows;
      f.cols = frame_cols;
      f.pixels = std::move(frame);
      frame = encode_jpeg(f, opts.jpeg_quality);
    }
  }

  const char* ts_uid =
      ts == TransferSyntax::UncompressedRgb8 ? kUidExplicitLittleEndian : kUidJpegBaseline;

  // file meta group (always explicit little endian)
  Writer meta_group;
  meta_group.element(Tag{0x0002, 0x0001}, "OB", {0x00, 0x01});
  meta_group.element_str(Tag{0x0002, 0x0002}, "UI", kUidVlWsiStorage);
  meta_group.element_str(Tag{0x0002, 0x0003}, "UI", "1.2.826.0.1.3680043.9.7433.1.1");
  meta_group.element_str(Tag{0x0002, 0x0010}, "UI", ts_uid);

  Writer out;
  out.bytes().assign(128, 0);
  out.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>("DICM"), 4));
  out.element_ul(Tag{0x0002, 0x0000}, static_cast<uint32_t>(meta_group.bytes().size()));
  out.raw(meta_group.bytes());

  out.element_str(Tag{0x0008, 0x0016}, "UI", kUidVlWsiStorage);
  out.element_str(Tag{0x0008, 0x0018}, "UI", "1.2.826.0.1.3680043.9.7433.1.1");
  out.element_str(Tag{0x0020, 0x9311}, "CS", opts.organization);
  out.element_us(kTagSamplesPerPixel, 3);
  out.element_str(kTagPhotometric, "CS", "RGB");
  out.element_us(Tag{0x0028, 0x0006}, 0);  // PlanarConfiguration: interleaved
  out.element_str(kTagNumberOfFrames, "IS", std::to_string(meta.frame_count));
  out.element_us(kTagRows, static_cast<uint16_t>(frame_rows));
  out.element_us(kTagColumns, static_cast<uint16_t>(frame_cols));
  out.element_us(kTagBitsAllocated, 8);
  out.element_us(Tag{0x0028, 0x0101}, 8);  // BitsStored
  out.element_us(Tag{0x0028, 0x0102}, 7);  // HighBit
  out.element_us(Tag{0x0028, 0x0103}, 0);  // PixelRepresentation: unsigned
  out.element_ul(kTagTotalMatrixCols, meta.total_cols);
  out.element_ul(kTagTotalMatrixRows, meta.total_rows);

  if (ts == TransferSyntax::UncompressedRgb8) {
    std::vector<uint8_t> pixel_data;
    pixel_data.reserve(meta.frame_byte_size() * frames.size());
    for (const auto& frame : frames) {
      pixel_data.insert(pixel_data.end(), frame.begin(), frame.end());
    }
    out.element(kTagPixelData, "OB", std::move(pixel_data));
  } else {
    // encapsulated: undefined length, offset table + one fragment per frame
    out.u16(kTagPixelData.group);
    out.u16(kTagPixelData.element);
    out.bytes().push_back('O');
    out.bytes().push_back('B');
    out.u16(0);
    out.u32(kUndefinedLength);

    std::vector<uint32_t> offsets;
    uint32_t running = 0;
    std::vector<std::vector<uint8_t>> padded;
    padded.reserve(frames.size());
    for (auto& frame : frames) {
      if (frame.size() % 2 != 0) frame.push_back(0);
      offsets.push_back(running);
      running += 8 + static_cast<uint32_t>(frame.size());
      padded.push_back(std::move(frame));
    }

    out.u16(kTagItem.group);
    out.u16(kTagItem.element);
    if (opts.with_basic_offset_table) {
      out.u32(static_cast<uint32_t>(offsets.size()) * 4);
      for (uint32_t off : offsets) out.u32(off);
    } else {
      out.u32(0);
    }
    for (const auto& frame : padded) {
      out.u16(kTagItem.group);
      out.u16(kTagItem.element);
      out.u32(static_cast<uint32_t>(frame.size()));
      out.raw(frame);
    }
    out.u16(kTagSequenceDelimiter.group);
    out.u16(kTagSequenceDelimiter.element);
    out.u32(0);
  }
  return std::move(out.bytes());
}

}  // namespace wes
