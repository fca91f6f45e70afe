#include "wes/service.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>

#include "wes/error.hpp"
#include "wes/httplib_wrap.hpp"
#include "wes/parallel.hpp"

namespace wes {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct SourceRequest {
  DataSourceRef ref;
  std::vector<PatchSpec> patches;
};

struct EmbedRequest {
  std::vector<SourceRequest> sources;
  EncoderSpec encoder;
  bool has_encoder_override = false;
};

uint32_t require_patch_coord(const json& patch, const char* key, uint32_t min_value) {
  if (!patch.contains(key) || !patch[key].is_number_integer()) {
    throw Error(ErrorCode::MalformedRequest,
                std::string("patch field '") + key + "' must be an integer");
  }
  int64_t v = patch[key].get<int64_t>();
  if (v < static_cast<int64_t>(min_value) || v > 0x7FFFFFFFLL) {
    throw Error(ErrorCode::MalformedRequest,
                std::string("patch field '") + key + "' out of range");
  }
  return static_cast<uint32_t>(v);
}

std::string require_string(const json& obj, const char* key, const char* what) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    throw Error(ErrorCode::MalformedRequest,
                std::string(what) + " requires string field '" + key + "'");
  }
  return obj[key].get<std::string>();
}

DataSourceRef parse_source_ref(const json& src) {
  DataSourceRef ref;
  ref.kind = parse_source_kind(require_string(src, "kind", "source"));
  switch (ref.kind) {
    case SourceKind::Inline: {
      ref.inline_payload.data = require_string(src, "data", "inline source");
      std::string format = require_string(src, "format", "inline source");
      if (format == "png") {
        ref.inline_payload.format = ImageFormat::Png;
      } else if (format == "jpeg") {
        ref.inline_payload.format = ImageFormat::Jpeg;
      } else {
        throw Error(ErrorCode::MalformedRequest,
                    "inline source format must be 'png' or 'jpeg', got '" + format + "'");
      }
      break;
    }
    case SourceKind::Object:
      ref.object_uri = require_string(src, "uri", "object source");
      break;
    case SourceKind::DicomWeb:
      ref.dicomweb.base_url = require_string(src, "base_url", "dicomweb source");
      ref.dicomweb.study_uid = require_string(src, "study_uid", "dicomweb source");
      ref.dicomweb.series_uid = require_string(src, "series_uid", "dicomweb source");
      ref.dicomweb.instance_uid = require_string(src, "instance_uid", "dicomweb source");
      break;
  }
  return ref;
}

EmbedRequest parse_embed_request(const json& body, const EncoderSpec& default_encoder) {
  if (!body.is_object() || !body.contains("sources") || !body["sources"].is_array() ||
      body["sources"].empty()) {
    throw Error(ErrorCode::MalformedRequest, "request requires a non-empty 'sources' array");
  }
  EmbedRequest req;
  req.encoder = default_encoder;
  for (const json& entry : body["sources"]) {
    if (!entry.is_object() || !entry.contains("source") || !entry["source"].is_object()) {
      throw Error(ErrorCode::MalformedRequest, "each sources entry requires a 'source' object");
    }
    SourceRequest source;
    source.ref = parse_source_ref(entry["source"]);
    if (!entry.contains("patches") || !entry["patches"].is_array() || entry["patches"].empty()) {
      throw Error(ErrorCode::MalformedRequest,
                  "each sources entry requires a non-empty 'patches' array");
    }
    for (const json& patch : entry["patches"]) {
      PatchSpec spec;
      spec.x = require_patch_coord(patch, "x", 0);
      spec.y = require_patch_coord(patch, "y", 0);
      spec.width = require_patch_coord(patch, "w", 1);
      spec.height = require_patch_coord(patch, "h", 1);
      source.patches.push_back(spec);
    }
    req.sources.push_back(std::move(source));
  }
  if (body.contains("encoder")) {
    const json& enc = body["encoder"];
    if (!enc.is_object()) {
      throw Error(ErrorCode::MalformedRequest, "'encoder' must be an object");
    }
    req.has_encoder_override = true;
    if (enc.contains("name")) req.encoder.name = require_string(enc, "name", "encoder");
    if (enc.contains("dim")) {
      if (!enc["dim"].is_number_integer() || enc["dim"].get<int64_t>() < 1) {
        throw Error(ErrorCode::MalformedRequest, "encoder dim must be a positive integer");
      }
      req.encoder.dim = enc["dim"].get<uint32_t>();
    }
    if (enc.contains("seed")) {
      if (!enc["seed"].is_number_integer()) {
        throw Error(ErrorCode::MalformedRequest, "encoder seed must be an integer");
      }
      req.encoder.seed = enc["seed"].get<uint64_t>();
    }
  }
  return req;
}

std::string error_body(ErrorCode code, const std::string& message) {
  return json{{"error", {{"code", error_code_name(code)}, {"message", message}}}}.dump();
}

std::string error_entry(size_t source_idx, size_t patch_idx, const json& error) {
  return json{{"source", source_idx}, {"patch", patch_idx}, {"error", error}}.dump();
}

std::string error_entry(size_t source_idx, size_t patch_idx, ErrorCode code,
                        const std::string& message) {
  return error_entry(source_idx, patch_idx,
                     json{{"code", error_code_name(code)}, {"message", message}});
}

std::string embedding_entry(size_t source_idx, size_t patch_idx, const EmbeddingVector& vec) {
  std::string out;
  out.reserve(vec.size() * 20 + 64);
  out += "{\"source\":";
  out += std::to_string(source_idx);
  out += ",\"patch\":";
  out += std::to_string(patch_idx);
  out += ",\"embedding\":[";
  char buf[32];
  for (size_t d = 0; d < vec.size(); ++d) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), vec[d]);
    (void)ec;
    if (d != 0) out += ',';
    out.append(buf, end);
  }
  out += "]}";
  return out;
}

}  // namespace

struct EmbedService::Routes {
  httplib::Server server;
  int port = 0;
};

// Fixed set of worker threads draining request batches in FIFO order. A
// request blocks in run() until its batch completes.
class EmbedService::PatchPool {
 public:
  explicit PatchPool(unsigned workers) {
    unsigned count = workers == 0 ? default_workers() : workers;
    threads_.reserve(count);
    for (unsigned t = 0; t < count; ++t) threads_.emplace_back([this] { loop(); });
  }

  ~PatchPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void run(size_t n, const std::function<void(size_t)>& fn) const {
    if (n == 0) return;
    auto batch = std::make_shared<Batch>();
    batch->n = n;
    batch->fn = &fn;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      queue_.push_back(batch);
    }
    cv_.notify_all();
    std::unique_lock<std::mutex> lock(batch->mutex);
    batch->cv.wait(lock, [&] { return batch->done == batch->n; });
  }

 private:
  struct Batch {
    size_t n = 0;
    const std::function<void(size_t)>* fn = nullptr;
    std::atomic<size_t> next{0};
    size_t done = 0;  // guarded by mutex
    std::mutex mutex;
    std::condition_variable cv;
  };

  void loop() {
    for (;;) {
      std::shared_ptr<Batch> batch;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
        if (stop_) return;
        batch = queue_.front();
        if (batch->next.load(std::memory_order_relaxed) >= batch->n) {
          if (!queue_.empty() && queue_.front() == batch) queue_.pop_front();
          continue;
        }
      }
      for (;;) {
        size_t i = batch->next.fetch_add(1, std::memory_order_relaxed);
        if (i >= batch->n) break;
        (*batch->fn)(i);
        bool finished;
        {
          std::lock_guard<std::mutex> lock(batch->mutex);
          finished = ++batch->done == batch->n;
        }
        if (finished) batch->cv.notify_all();
      }
    }
  }

  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  mutable std::deque<std::shared_ptr<Batch>> queue_;
  bool stop_ = false;
  std::vector<std::thread> threads_;
};

EmbedService::EmbedService(ServiceConfig config) : config_(std::move(config)) {
  encoder_ = make_encoder(config_.encoder);
  pool_ = std::make_unique<PatchPool>(config_.workers);
  routes_ = std::make_unique<Routes>();
  install_routes();
}

EmbedService::~EmbedService() { stop(); }

json EmbedService::info() const {
  return json{{"encoder", config_.encoder.name},
              {"dim", config_.encoder.dim},
              {"limits",
               {{"max_patches_per_request", config_.max_patches_per_request},
                {"fetch_timeout_ms", config_.fetch.timeout_ms},
                {"request_deadline_s", config_.request_deadline_s}}},
              {"version", "0.1.0"}};
}

EmbedService::RawResponse EmbedService::handle_embed_raw(const json& body) const {
  auto t_start = Clock::now();
  EmbedRequest req;
  try {
    req = parse_embed_request(body, config_.encoder);
  } catch (const Error& e) {
    return {400, error_body(e.code(), e.what())};
  }

  size_t total_patches = 0;
  for (const auto& source : req.sources) total_patches += source.patches.size();
  if (total_patches > config_.max_patches_per_request) {
    return {413, error_body(ErrorCode::RequestTooLarge,
                            std::to_string(total_patches) + " patches exceed limit " +
                                std::to_string(config_.max_patches_per_request))};
  }

  std::shared_ptr<const Encoder> encoder = encoder_;
  if (req.has_encoder_override) {
    try {
      encoder = make_encoder(req.encoder);
    } catch (const Error& e) {
      return {400, error_body(ErrorCode::MalformedRequest,
                              std::string("encoder override rejected: ") + e.what())};
    }
  }

  // flatten to (source, patch) tasks so patch-level parallelism spans sources
  struct Task {
    size_t source_idx;
    size_t patch_idx;
    size_t result_slot;
  };
  std::vector<Task> tasks;
  tasks.reserve(total_patches);
  {
    size_t slot = 0;
    for (size_t si = 0; si < req.sources.size(); ++si) {
      for (size_t pi = 0; pi < req.sources[si].patches.size(); ++pi) {
        tasks.push_back({si, pi, slot++});
      }
    }
  }

  // sources open lazily on first use and are released after their last
  // patch, so the pixels held in flight stay bounded by the worker count; a
  // failing source yields error entries for its patches and leaves every
  // other source untouched
  struct SourceState {
    std::once_flag once;
    std::shared_ptr<PixelSource> source;
    json open_error;
    std::atomic<size_t> remaining{0};
  };
  std::vector<std::unique_ptr<SourceState>> sources(req.sources.size());
  for (size_t si = 0; si < req.sources.size(); ++si) {
    sources[si] = std::make_unique<SourceState>();
    sources[si]->remaining.store(req.sources[si].patches.size(), std::memory_order_relaxed);
  }

  std::atomic<int64_t> retrieval_ns{0};
  std::atomic<int64_t> inference_ns{0};
  std::vector<json> results(total_patches);
  const auto deadline =
      t_start + std::chrono::duration_cast<Clock::duration>(
                    std::chrono::duration<double>(config_.request_deadline_s));

  pool_->run(tasks.size(), [&](size_t ti) {
    const Task& task = tasks[ti];
    const PatchSpec& spec = req.sources[task.source_idx].patches[task.patch_idx];
    SourceState& state = *sources[task.source_idx];

    if (Clock::now() > deadline) {
      results[task.result_slot] = error_entry(task.source_idx, task.patch_idx,
                                              ErrorCode::DeadlineExceeded,
                                              "request deadline exceeded");
    } else {
      std::call_once(state.once, [&] {
        auto t0 = Clock::now();
        try {
          state.source = open_source(req.sources[task.source_idx].ref, config_.fetch,
                                     config_.cache_frames);
        } catch (const Error& e) {
          state.open_error = json{{"code", error_code_name(e.code())}, {"message", e.what()}};
        } catch (const std::exception& e) {
          state.open_error =
              json{{"code", error_code_name(ErrorCode::FetchFailed)}, {"message", e.what()}};
        }
        retrieval_ns.fetch_add(
            std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count(),
            std::memory_order_relaxed);
      });

      if (!state.open_error.is_null()) {
        results[task.result_slot] = json{{"source", task.source_idx},
                                         {"patch", task.patch_idx},
                                         {"error", state.open_error}};
      } else {
        try {
          auto t0 = Clock::now();
          Patch patch = state.source->extract_patch(spec);
          auto t1 = Clock::now();
          EmbeddingVector vec = encoder->embed(patch);
          auto t2 = Clock::now();
          retrieval_ns.fetch_add(
              std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count(),
              std::memory_order_relaxed);
          inference_ns.fetch_add(
              std::chrono::duration_cast<std::chrono::nanoseconds>(t2 - t1).count(),
              std::memory_order_relaxed);
          results[task.result_slot] = json{{"source", task.source_idx},
                                           {"patch", task.patch_idx},
                                           {"embedding", std::move(vec)}};
        } catch (const Error& e) {
          results[task.result_slot] =
              error_entry(task.source_idx, task.patch_idx, e.code(), e.what());
        } catch (const std::exception& e) {
          results[task.result_slot] =
              error_entry(task.source_idx, task.patch_idx, ErrorCode::DecodeFailure, e.what());
        }
      }
    }

    if (state.remaining.fetch_sub(1, std::memory_order_acq_rel) == 1) {
      state.source.reset();
    }
  });

  status = 200;
  json response;
  response["results"] = std::move(results);
  response["timing"] = json{{"retrieval_ms", retrieval_ns.load() / 1e6},
                            {"inference_ms", inference_ns.load() / 1e6},
                            {"total_ms", ms_since(t_start)}};
  return response;
}

void EmbedService::install_routes() {
  auto& server = routes_->server;

  server.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      res.status = 400;
      res.set_content(json{{"error",
                            {{"code", error_code_name(ErrorCode::MalformedRequest)},
                             {"message", "request body is not valid JSON"}}}}
                          .dump(),
                      "application/json");
      return;
    }
    int status = 200;
    json response = handle_embed(body, status);
    res.status = status;
    res.set_content(response.dump(), "application/json");
  });

  server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ready"}}.dump(), "application/json");
  });

  server.Get("/v1/info", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(info().dump(), "application/json");
  });
}

int EmbedService::start() {
  int port = routes_->server.bind_to_any_port("127.0.0.1");
  if (port <= 0) {
    throw Error(ErrorCode::IoFailure, "failed to bind an ephemeral port");
  }
  routes_->port = port;
  server_thread_ = std::thread([this] { routes_->server.listen_after_bind(); });
  routes_->server.wait_until_ready();
  return port;
}

bool EmbedService::run(const std::string& host) {
  return routes_->server.listen(host, config_.port);
}

void EmbedService::stop() {
  if (routes_) routes_->server.stop();
  if (server_thread_.joinable()) server_thread_.join();
}

}  // namespace wes
