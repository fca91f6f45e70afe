#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wes/codec.hpp"
#include "wes/image.hpp"
#include "wes/wsi.hpp"

namespace wes {

enum class SourceKind { Inline, Object, DicomWeb };

const char* source_kind_name(SourceKind kind);
SourceKind parse_source_kind(const std::string& name);

struct InlinePayload {
  std::string data;  // base64
  ImageFormat format = ImageFormat::Png;
};

struct DicomWebRef {
  std::string base_url;
  std::string study_uid;
  std::string series_uid;
  std::string instance_uid;
};

// Exactly one of the optional members is meaningful, selected by `kind`.
struct DataSourceRef {
  SourceKind kind = SourceKind::Inline;
  InlinePayload inline_payload;
  std::string object_uri;
  DicomWebRef dicomweb;
};

struct FetchOptions {
  int timeout_ms = 30000;
  int max_retries = 2;        // on 5xx and transport errors; 4xx fail immediately
  int backoff_base_ms = 100;  // doubles per retry
  std::string bearer_token;   // added as Authorization: Bearer ... when set
};

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;
};

// GET with the retry policy above; throws FetchFailed (carrying the HTTP
// status when one was received).
HttpResponse http_get(const std::string& url, const FetchOptions& opts);

// Uniform pixel access for the three source paths. Implementations are safe
// for concurrent extract_patch calls.
class PixelSource {
 public:
  virtual ~PixelSource() = default;
  virtual uint32_t total_rows() const = 0;
  virtual uint32_t total_cols() const = 0;
  virtual Patch extract_patch(const PatchSpec& spec) const = 0;
};

// Whole decoded image held in memory (inline and object-store paths).
class FullImageSource final : public PixelSource {
 public:
  explicit FullImageSource(Image image) : image_(std::move(image)) {}
  uint32_t total_rows() const override { return image_.rows; }
  uint32_t total_cols() const override { return image_.cols; }
  Patch extract_patch(const PatchSpec& spec) const override { return crop(image_, spec); }
  const Image& image() const { return image_; }

 private:
  Image image_;
};

// LRU over decoded frames with single-flight fetches: a frame wanted by two
// concurrent patches is fetched exactly once.
class FrameCache {
 public:
  explicit FrameCache(size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  using FramePtr = std::shared_ptr<const std::vector<uint8_t>>;
  FramePtr get(uint32_t frame_no, const std::function<FramePtr(uint32_t)>& fetch);

  size_t size() const;

 private:
  struct Slot;
  size_t capacity_;
  mutable std::mutex mutex_;
  std::unordered_map<uint32_t, std::shared_ptr<Slot>> slots_;
  std::list<uint32_t> lru_;  // most recent at front; completed slots only
};

// Lazy tiled reader over WADO-RS style routes:
//   GET {base}/studies/{s}/series/{se}/instances/{i}/metadata   (DICOM JSON)
//   GET {base}/.../frames/{n}                                   (raw payload, 1-based)
// Only frames overlapping requested patches are fetched.
class DicomWebSource final : public PixelSource {
 public:
  DicomWebSource(DicomWebRef ref, FetchOptions fetch_opts, size_t cache_frames);

  uint32_t total_rows() const override { return meta_.total_rows; }
  uint32_t total_cols() const override { return meta_.total_cols; }
  Patch extract_patch(const PatchSpec& spec) const override;

  const WsiMetadata& metadata() const { return meta_; }

  // Decoded full-size frame buffers, in the order requested (0-based numbers).
  std::vector<FrameCache::FramePtr> fetch_frames(std::span<const uint32_t> frame_numbers) const;

 private:
  FrameCache::FramePtr fetch_frame(uint32_t frame_no) const;

  DicomWebRef ref_;
  FetchOptions fetch_opts_;
  std::string instance_path_;
  WsiMetadata meta_;
  mutable FrameCache cache_;
};

std::shared_ptr<PixelSource> open_inline(const std::string& base64_payload, ImageFormat format);
std::shared_ptr<PixelSource> fetch_object(const std::string& uri, const FetchOptions& opts);
std::shared_ptr<DicomWebSource> open_dicomweb(const DicomWebRef& ref, const FetchOptions& opts,
                                              size_t cache_frames);

std::shared_ptr<PixelSource> open_source(const DataSourceRef& ref, const FetchOptions& opts,
                                         size_t cache_frames);

// Parses a DICOM JSON metadata document (array or single object) into frame
// geometry. Exposed for the stub server tests.
WsiMetadata metadata_from_dicom_json(const std::string& json_text);

}  // namespace wes
