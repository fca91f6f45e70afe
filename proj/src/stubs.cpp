#include "wes/stubs.hpp"

#include <algorithm>

#include "json.hpp"

#include "wes/error.hpp"
#include "wes/httplib_wrap.hpp"

namespace wes {

using nlohmann::json;

namespace {

struct WsiEntry {
  std::vector<uint8_t> container;
  ParsedWsi parsed;
  std::string metadata_json;
};

std::string dicom_json_for(const WsiMetadata& meta) {
  const char* ts_uid = meta.transfer_syntax == TransferSyntax::UncompressedRgb8
                           ? "1.2.840.10008.1.2.1"
                           : "1.2.840.10008.1.2.4.50";
  json dataset = {
      {"00020010", {{"vr", "UI"}, {"Value", {ts_uid}}}},
      {"00209311", {{"vr", "CS"}, {"Value", {"TILED_FULL"}}}},
      {"00280002", {{"vr", "US"}, {"Value", {3}}}},
      {"00280008", {{"vr", "IS"}, {"Value", {meta.frame_count}}}},
      {"00280010", {{"vr", "US"}, {"Value", {meta.frame_rows}}}},
      {"00280011", {{"vr", "US"}, {"Value", {meta.frame_cols}}}},
      {"00280100", {{"vr", "US"}, {"Value", {8}}}},
      {"00480006", {{"vr", "UL"}, {"Value", {meta.total_cols}}}},
      {"00480007", {{"vr", "UL"}, {"Value", {meta.total_rows}}}},
  };
  return json::array({dataset}).dump();
}

}  // namespace

struct StubServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  mutable std::mutex mutex;
  std::map<std::string, std::pair<std::vector<uint8_t>, std::string>> blobs;
  std::map<std::string, WsiEntry> instances;  // keyed by instance path
  std::map<std::string, std::pair<int, int>> failures;  // path -> (status, remaining)
  std::vector<std::string> log;

  bool take_failure(const std::string& path, int& status) {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = failures.find(path);
    if (it == failures.end() || it->second.second <= 0) return false;
    --it->second.second;
    status = it->second.first;
    return true;
  }
};

StubServer::StubServer() : impl_(std::make_unique<Impl>()) {
  impl_->server.Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard<std::mutex> lock(impl_->mutex);
      impl_->log.push_back(req.path);
    }
    int fail_status = 0;
    if (impl_->take_failure(req.path, fail_status)) {
      res.status = fail_status;
      res.set_content("injected failure", "text/plain");
      return;
    }

    std::lock_guard<std::mutex> lock(impl_->mutex);
    if (auto it = impl_->blobs.find(req.path); it != impl_->blobs.end()) {
      res.set_content(reinterpret_cast<const char*>(it->second.first.data()),
                      it->second.first.size(), it->second.second);
      return;
    }

    // /dicomweb/.../instances/{uid}/metadata or .../frames/{n}
    for (auto& [prefix, entry] : impl_->instances) {
      if (req.path == prefix + "/metadata") {
        res.set_content(entry.metadata_json, "application/dicom+json");
        return;
      }
      std::string frames_prefix = prefix + "/frames/";
      if (req.path.rfind(frames_prefix, 0) == 0) {
        std::string number = req.path.substr(frames_prefix.size());
        char* end = nullptr;
        long n = std::strtol(number.c_str(), &end, 10);
        if (end == nullptr || *end != '\0' || n < 1 ||
            n > static_cast<long>(entry.parsed.meta.frame_count)) {
          res.status = 404;
          return;
        }
        const FrameExtent& extent = entry.parsed.index[static_cast<size_t>(n - 1)];
        res.set_content(
            reinterpret_cast<const char*>(entry.container.data() + extent.offset),
            static_cast<size_t>(extent.length),
            entry.parsed.meta.transfer_syntax == TransferSyntax::BaselineJpeg
                ? "image/jpeg"
                : "application/octet-stream");
        return;
      }
    }
    res.status = 404;
  });
}

StubServer::~StubServer() { stop(); }

void StubServer::add_blob(const std::string& path, std::vector<uint8_t> bytes,
                          const std::string& content_type) {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  impl_->blobs[path] = {std::move(bytes), content_type};
}

void StubServer::add_wsi(const std::string& study_uid, const std::string& series_uid,
                         const std::string& instance_uid, std::vector<uint8_t> container) {
  WsiEntry entry;
  entry.parsed = parse_wsi(container);
  entry.metadata_json = dicom_json_for(entry.parsed.meta);
  entry.container = std::move(container);
  std::string prefix = "/dicomweb/studies/" + study_uid + "/series/" + series_uid +
                       "/instances/" + instance_uid;
  std::lock_guard<std::mutex> lock(impl_->mutex);
  impl_->instances[prefix] = std::move(entry);
}

void StubServer::fail_next(const std::string& path, int status, int count) {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  impl_->failures[path] = {status, count};
}

int StubServer::start() {
  int port = impl_->server.bind_to_any_port("127.0.0.1");
  if (port <= 0) {
    throw Error(ErrorCode::IoFailure, "stub server failed to bind");
  }
  impl_->port = port;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void StubServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string StubServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

DicomWebRef StubServer::dicomweb_ref(const std::string& study_uid, const std::string& series_uid,
                                     const std::string& instance_uid) const {
  DicomWebRef ref;
  ref.base_url = base_url() + "/dicomweb";
  ref.study_uid = study_uid;
  ref.series_uid = series_uid;
  ref.instance_uid = instance_uid;
  return ref;
}

std::vector<std::string> StubServer::request_log() const {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  return impl_->log;
}

size_t StubServer::request_count(const std::string& path_prefix) const {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  if (path_prefix.empty()) return impl_->log.size();
  return static_cast<size_t>(
      std::count_if(impl_->log.begin(), impl_->log.end(), [&](const std::string& path) {
        return path.rfind(path_prefix, 0) == 0;
      }));
}

void StubServer::clear_log() {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  impl_->log.clear();
}

}  // namespace wes
