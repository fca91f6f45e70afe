#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "wes/ingestion.hpp"
#include "wes/wsi.hpp"

namespace wes {

// Localhost stub used by tests and by offline benchmark runs. Serves:
//   - static byte blobs at exact paths (object-store stand-in)
//   - WADO-RS metadata and frame routes over a parsed tiled container
// Every request path is recorded for fetch-count assertions.
class StubServer {
 public:
  StubServer();
  ~StubServer();

  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  void add_blob(const std::string& path, std::vector<uint8_t> bytes,
                const std::string& content_type);

  // Serve a tiled container under /dicomweb/studies/{study}/series/{series}/
  // instances/{instance}/{metadata,frames/N}; returns the DicomWebRef to use
  // once the server is started.
  void add_wsi(const std::string& study_uid, const std::string& series_uid,
               const std::string& instance_uid, std::vector<uint8_t> container);

  // Next `count` GETs of `path` return `status` before normal handling
  // resumes; for retry-policy tests.
  void fail_next(const std::string& path, int status, int count);

  int start();  // binds 127.0.0.1, returns port
  void stop();

  std::string base_url() const;  // http://127.0.0.1:PORT
  DicomWebRef dicomweb_ref(const std::string& study_uid, const std::string& series_uid,
                           const std::string& instance_uid) const;

  std::vector<std::string> request_log() const;
  size_t request_count(const std::string& path_prefix = "") const;
  void clear_log();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wes
