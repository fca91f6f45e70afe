#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "json.hpp"

#include "wes/encoder.hpp"
#include "wes/ingestion.hpp"

namespace wes {

struct ServiceConfig {
  int port = 8383;
  uint32_t max_patches_per_request = 5000;
  unsigned workers = 0;  // 0 = hardware concurrency
  EncoderSpec encoder;
  FetchOptions fetch;
  uint32_t cache_frames = 64;
  double request_deadline_s = 300.0;
};

// Stateless embedding endpoint:
//   POST /v1/embeddings   multi-source multi-patch embedding generation
//   GET  /v1/health       readiness
//   GET  /v1/info         encoder name/dim, limits, version
// Handlers share only the immutable config and encoder, so any number of
// requests may run concurrently.
class EmbedService {
 public:
  explicit EmbedService(ServiceConfig config);
  ~EmbedService();

  EmbedService(const EmbedService&) = delete;
  EmbedService& operator=(const EmbedService&) = delete;

  struct RawResponse {
    int status = 200;
    std::string body;  // serialized JSON
  };

  // Pure request handler. Result entries are serialized inside the patch
  // workers (std::to_chars, shortest round-trip), so the route returns the
  // body without building a document tree.
  RawResponse handle_embed_raw(const nlohmann::json& request) const;

  // Parsed-document convenience wrapper around handle_embed_raw.
  nlohmann::json handle_embed(const nlohmann::json& request, int& status) const;

  nlohmann::json info() const;

  // Binds 127.0.0.1 on an ephemeral port and serves from a background
  // thread; returns the bound port.
  int start();
  // Blocking serve on the configured port.
  bool run(const std::string& host = "0.0.0.0");
  void stop();

  const ServiceConfig& config() const { return config_; }

 private:
  struct Routes;
  class PatchPool;
  void install_routes();

  ServiceConfig config_;
  std::shared_ptr<const Encoder> encoder_;
  // one pool, shared by every request; keeps total patch workers bounded no
  // matter how many requests run at once (destroyed after routes_)
  std::unique_ptr<PatchPool> pool_;
  std::unique_ptr<Routes> routes_;
  std::thread server_thread_;
};

}  // namespace wes
