#include "wes/ingestion.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <thread>

#include "json.hpp"

#include "wes/httplib_wrap.hpp"

#include "wes/base64.hpp"
#include "wes/error.hpp"

namespace wes {

using nlohmann::json;

const char* source_kind_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::Inline: return "inline";
    case SourceKind::Object: return "object";
    case SourceKind::DicomWeb: return "dicomweb";
  }
  return "unknown";
}

SourceKind parse_source_kind(const std::string& name) {
  if (name == "inline") return SourceKind::Inline;
  if (name == "object") return SourceKind::Object;
  if (name == "dicomweb") return SourceKind::DicomWeb;
  throw Error(ErrorCode::MalformedRequest, "unknown source kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // /path?query
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::FetchFailed, "bad url (missing scheme): " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse http_get(const std::string& url, const FetchOptions& opts) {
  SplitUrl split = split_url(url);
  httplib::Client client(split.base);
  client.set_connection_timeout(0, opts.timeout_ms * 1000LL);
  client.set_read_timeout(opts.timeout_ms / 1000, (opts.timeout_ms % 1000) * 1000);
  client.set_write_timeout(opts.timeout_ms / 1000, (opts.timeout_ms % 1000) * 1000);
  httplib::Headers headers;
  if (!opts.bearer_token.empty()) {
    headers.emplace("Authorization", "Bearer " + opts.bearer_token);
  }

  std::string last_transport_error;
  int backoff_ms = opts.backoff_base_ms;
  for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
    auto res = client.Get(split.path, headers);
    if (!res) {
      last_transport_error = httplib::to_string(res.error());
      continue;  // transport error or timeout: retry
    }
    if (res->status >= 500 && attempt < opts.max_retries) continue;
    HttpResponse out;
    out.status = res->status;
    out.body = std::move(res->body);
    out.content_type = res->get_header_value("Content-Type");
    return out;
  }
  throw Error(ErrorCode::FetchFailed, "GET " + url + " failed: " + last_transport_error, 0);
}

// ---------------------------------------------------------------------------
// FrameCache

struct FrameCache::Slot {
  std::mutex mutex;
  std::condition_variable cv;
  bool ready = false;
  bool failed = false;
  FramePtr frame;
  std::exception_ptr error;
};

FrameCache::FramePtr FrameCache::get(uint32_t frame_no,
                                     const std::function<FramePtr(uint32_t)>& fetch) {
  std::shared_ptr<Slot> slot;
  bool owner = false;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = slots_.find(frame_no);
    if (it != slots_.end()) {
      slot = it->second;
    } else {
      slot = std::make_shared<Slot>();
      slots_[frame_no] = slot;
      owner = true;
    }
  }

  if (!owner) {
    std::unique_lock<std::mutex> lock(slot->mutex);
    slot->cv.wait(lock, [&] { return slot->ready || slot->failed; });
    if (slot->failed) std::rethrow_exception(slot->error);
    std::lock_guard<std::mutex> cache_lock(mutex_);
    auto pos = std::find(lru_.begin(), lru_.end(), frame_no);
    if (pos != lru_.end()) lru_.splice(lru_.begin(), lru_, pos);
    return slot->frame;
  }

  FramePtr frame;
  try {
    frame = fetch(frame_no);
  } catch (...) {
    {
      std::lock_guard<std::mutex> lock(slot->mutex);
      slot->failed = true;
      slot->error = std::current_exception();
    }
    slot->cv.notify_all();
    // drop the failed slot so a later request retries the fetch
    std::lock_guard<std::mutex> cache_lock(mutex_);
    slots_.erase(frame_no);
    throw;
  }

  {
    std::lock_guard<std::mutex> lock(slot->mutex);
    slot->frame = frame;
    slot->ready = true;
  }
  slot->cv.notify_all();

  std::lock_guard<std::mutex> cache_lock(mutex_);
  lru_.push_front(frame_no);
  while (lru_.size() > capacity_) {
    slots_.erase(lru_.back());
    lru_.pop_back();
  }
  return frame;
}

size_t FrameCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return lru_.size();
}

// ---------------------------------------------------------------------------
// DICOM JSON metadata

namespace {

const json* find_tag(const json& dataset, const char* tag) {
  auto it = dataset.find(tag);
  if (it == dataset.end()) return nullptr;
  return &*it;
}

uint32_t tag_number(const json& dataset, const char* tag, const char* name) {
  const json* element = find_tag(dataset, tag);
  if (element == nullptr || !element->contains("Value") || (*element)["Value"].empty()) {
    throw Error(ErrorCode::MalformedContainer, std::string("dicomweb metadata: missing ") + name);
  }
  const json& value = (*element)["Value"][0];
  if (value.is_string()) {
    return static_cast<uint32_t>(std::stoul(value.get<std::string>()));
  }
  return value.get<uint32_t>();
}

std::string tag_string(const json& dataset, const char* tag, const char* name) {
  const json* element = find_tag(dataset, tag);
  if (element == nullptr || !element->contains("Value") || (*element)["Value"].empty()) {
    throw Error(ErrorCode::MalformedContainer, std::string("dicomweb metadata: missing ") + name);
  }
  return (*element)["Value"][0].get<std::string>();
}

}  // namespace

WsiMetadata metadata_from_dicom_json(const std::string& json_text) {
  json parsed = json::parse(json_text, nullptr, false);
  if (parsed.is_discarded()) {
    throw Error(ErrorCode::MalformedContainer, "dicomweb metadata: invalid JSON");
  }
  const json& dataset = parsed.is_array() ? parsed.at(0) : parsed;

  std::string ts_uid = tag_string(dataset, "00020010", "TransferSyntaxUID");
  TransferSyntax ts;
  if (ts_uid == "1.2.840.10008.1.2.1") {
    ts = TransferSyntax::UncompressedRgb8;
  } else if (ts_uid == "1.2.840.10008.1.2.4.50") {
    ts = TransferSyntax::BaselineJpeg;
  } else {
    throw Error(ErrorCode::UnsupportedTransferSyntax, "dicomweb: transfer syntax " + ts_uid);
  }

  std::string organization = tag_string(dataset, "00209311", "DimensionOrganizationType");
  if (organization != "TILED_FULL") {
    throw Error(ErrorCode::UnsupportedOrganization, "dicomweb: organization " + organization);
  }

  uint32_t samples = tag_number(dataset, "00280002", "SamplesPerPixel");
  uint32_t bits = tag_number(dataset, "00280100", "BitsAllocated");
  if (samples != 3 || bits != 8) {
    throw Error(ErrorCode::UnsupportedTransferSyntax, "dicomweb: only 8-bit RGB is supported");
  }

  uint32_t frame_rows = tag_number(dataset, "00280010", "Rows");
  uint32_t frame_cols = tag_number(dataset, "00280011", "Columns");
  uint32_t total_rows = tag_number(dataset, "00480007", "TotalPixelMatrixRows");
  uint32_t total_cols = tag_number(dataset, "00480006", "TotalPixelMatrixColumns");
  uint32_t frame_count = tag_number(dataset, "00280008", "NumberOfFrames");

  WsiMetadata meta = make_metadata(total_rows, total_cols, frame_rows, frame_cols, ts);
  if (meta.frame_count != frame_count) {
    throw Error(ErrorCode::MalformedContainer,
                "dicomweb: NumberOfFrames " + std::to_string(frame_count) +
                    " does not match tiling arithmetic " + std::to_string(meta.frame_count));
  }
  return meta;
}

// ---------------------------------------------------------------------------
// Sources

std::shared_ptr<PixelSource> open_inline(const std::string& base64_payload, ImageFormat format) {
  std::vector<uint8_t> bytes = base64_decode(base64_payload);
  Image image;
  switch (format) {
    case ImageFormat::Png: image = decode_png(bytes); break;
    case ImageFormat::Jpeg: image = decode_jpeg(bytes); break;
    case ImageFormat::Unknown:
      throw Error(ErrorCode::UnsupportedFormat, "inline format must be png or jpeg");
  }
  return std::make_shared<FullImageSource>(std::move(image));
}

std::shared_ptr<PixelSource> fetch_object(const std::string& uri, const FetchOptions& opts) {
  HttpResponse res = http_get(uri, opts);
  if (res.status != 200) {
    throw Error(ErrorCode::FetchFailed, "GET " + uri + " returned " + std::to_string(res.status),
                res.status);
  }
  auto bytes = std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(res.body.data()),
                                        res.body.size());
  return std::make_shared<FullImageSource>(decode_image(bytes));
}

DicomWebSource::DicomWebSource(DicomWebRef ref, FetchOptions fetch_opts, size_t cache_frames)
    : ref_(std::move(ref)), fetch_opts_(std::move(fetch_opts)), cache_(cache_frames) {
  instance_path_ = ref_.base_url + "/studies/" + ref_.study_uid + "/series/" + ref_.series_uid +
                   "/instances/" + ref_.instance_uid;
  HttpResponse res = http_get(instance_path_ + "/metadata", fetch_opts_);
  if (res.status != 200) {
    throw Error(ErrorCode::FetchFailed,
                "GET " + instance_path_ + "/metadata returned " + std::to_string(res.status),
                res.status);
  }
  meta_ = metadata_from_dicom_json(res.body);
}

FrameCache::FramePtr DicomWebSource::fetch_frame(uint32_t frame_no) const {
  // WADO-RS frame numbers are 1-based
  std::string url = instance_path_ + "/frames/" + std::to_string(frame_no + 1);
  HttpResponse res = http_get(url, fetch_opts_);
  if (res.status != 200) {
    throw Error(ErrorCode::FetchFailed, "GET " + url + " returned " + std::to_string(res.status),
                res.status);
  }
  auto bytes = std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(res.body.data()),
                                        res.body.size());
  std::vector<uint8_t> pixels;
  if (meta_.transfer_syntax == TransferSyntax::BaselineJpeg) {
    Image decoded = decode_jpeg(bytes);
    if (decoded.rows != meta_.frame_rows || decoded.cols != meta_.frame_cols) {
      throw Error(ErrorCode::DecodeFailure, "dicomweb frame decoded to unexpected size");
    }
    pixels = std::move(decoded.pixels);
  } else {
    if (bytes.size() != meta_.frame_byte_size()) {
      throw Error(ErrorCode::DecodeFailure,
                  "dicomweb frame payload is " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(meta_.frame_byte_size()));
    }
    pixels.assign(bytes.begin(), bytes.end());
  }
  return std::make_shared<const std::vector<uint8_t>>(std::move(pixels));
}

Patch DicomWebSource::extract_patch(const PatchSpec& spec) const {
  return assemble_patch(meta_, spec, [this](uint32_t frame_no) {
    return cache_.get(frame_no, [this](uint32_t n) { return fetch_frame(n); });
  });
}

std::vector<FrameCache::FramePtr> DicomWebSource::fetch_frames(
    std::span<const uint32_t> frame_numbers) const {
  std::vector<FrameCache::FramePtr> out;
  out.reserve(frame_numbers.size());
  for (uint32_t n : frame_numbers) {
    if (n >= meta_.frame_count) {
      throw Error(ErrorCode::FrameOutOfRange,
                  "frame " + std::to_string(n) + " of " + std::to_string(meta_.frame_count));
    }
    out.push_back(cache_.get(n, [this](uint32_t k) { return fetch_frame(k); }));
  }
  return out;
}

std::shared_ptr<DicomWebSource> open_dicomweb(const DicomWebRef& ref, const FetchOptions& opts,
                                              size_t cache_frames) {
  return std::make_shared<DicomWebSource>(ref, opts, cache_frames);
}

std::shared_ptr<PixelSource> open_source(const DataSourceRef& ref, const FetchOptions& opts,
                                         size_t cache_frames) {
  switch (ref.kind) {
    case SourceKind::Inline: return open_inline(ref.inline_payload.data, ref.inline_payload.format);
    case SourceKind::Object: return fetch_object(ref.object_uri, opts);
    case SourceKind::DicomWeb: return open_dicomweb(ref.dicomweb, opts, cache_frames);
  }
  throw Error(ErrorCode::MalformedRequest, "bad source kind");
}

}  // namespace wes
