#include "wes/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <thread>

#include "json.hpp"

#include "wes/base64.hpp"
#include "wes/error.hpp"
#include "wes/httplib_wrap.hpp"
#include "wes/pcg.hpp"

namespace wes {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

CostFigures cost_report(double embeddings_per_hour, double hourly_price) {
  if (!(embeddings_per_hour > 0.0) || !(hourly_price > 0.0)) {
    throw Error(ErrorCode::NonPositiveInput, "rate and price must be positive");
  }
  CostFigures figures;
  figures.price_per_embedding = hourly_price / embeddings_per_hour;
  figures.embeddings_per_dollar = embeddings_per_hour / hourly_price;
  return figures;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(values.size())));
  if (rank == 0) rank = 1;
  if (rank > values.size()) rank = values.size();
  return values[rank - 1];
}

namespace {

json source_json(const BenchmarkConfig& cfg) {
  switch (cfg.source_kind) {
    case SourceKind::Inline:
      return json{{"kind", "inline"}, {"data", cfg.inline_base64}, {"format", "png"}};
    case SourceKind::Object:
      return json{{"kind", "object"}, {"uri", cfg.object_uri}};
    case SourceKind::DicomWeb:
      return json{{"kind", "dicomweb"},
                  {"base_url", cfg.dicomweb.base_url},
                  {"study_uid", cfg.dicomweb.study_uid},
                  {"series_uid", cfg.dicomweb.series_uid},
                  {"instance_uid", cfg.dicomweb.instance_uid}};
  }
  throw Error(ErrorCode::MalformedRequest, "bad source kind");
}

json patch_json(uint32_t x, uint32_t y) {
  return json{{"x", x}, {"y", y}, {"w", 224}, {"h", 224}};
}

// image dimensions of the configured source, needed to draw random in-bounds
// patch coordinates for the per-request layout
std::pair<uint32_t, uint32_t> source_dims(const BenchmarkConfig& cfg) {
  switch (cfg.source_kind) {
    case SourceKind::Inline: {
      auto src = open_inline(cfg.inline_base64, ImageFormat::Png);
      return {src->total_rows(), src->total_cols()};
    }
    case SourceKind::Object: {
      auto src = fetch_object(cfg.object_uri, cfg.fetch);
      return {src->total_rows(), src->total_cols()};
    }
    case SourceKind::DicomWeb: {
      auto src = open_dicomweb(cfg.dicomweb, cfg.fetch, 1);
      return {src->total_rows(), src->total_cols()};
    }
  }
  throw Error(ErrorCode::MalformedRequest, "bad source kind");
}

std::vector<std::string> build_request_bodies(const BenchmarkConfig& cfg, uint64_t request_count) {
  std::vector<std::string> bodies;
  bodies.reserve(request_count);

  if (cfg.effective_layout() == RequestLayout::PerPatch) {
    json source = source_json(cfg);
    json sources = json::array();
    for (uint32_t i = 0; i < cfg.embeddings_per_request; ++i) {
      sources.push_back(json{{"source", source}, {"patches", json::array({patch_json(0, 0)})}});
    }
    std::string body = json{{"sources", sources}}.dump();
    for (uint64_t r = 0; r < request_count; ++r) bodies.push_back(body);
    return bodies;
  }

  auto [rows, cols] = source_dims(cfg);
  if (rows < 224 || cols < 224) {
    throw Error(ErrorCode::BadData, "source image smaller than a 224x224 patch");
  }
  json source = source_json(cfg);
  for (uint64_t r = 0; r < request_count; ++r) {
    Pcg32 rng(mix_seed(cfg.seed, r));
    json patches = json::array();
    for (uint32_t i = 0; i < cfg.embeddings_per_request; ++i) {
      uint32_t x = rng.next_below(cols - 224 + 1);
      uint32_t y = rng.next_below(rows - 224 + 1);
      patches.push_back(patch_json(x, y));
    }
    bodies.push_back(json{{"sources", json::array({json{{"source", source}, {"patches", patches}}})}}
                         .dump());
  }
  return bodies;
}

std::string warmup_body(const BenchmarkConfig& cfg) {
  json sources =
      json::array({json{{"source", source_json(cfg)}, {"patches", json::array({patch_json(0, 0)})}}});
  return json{{"sources", sources}}.dump();
}

struct RequestOutcome {
  double latency_ms = 0.0;
  uint64_t embeddings = 0;
  uint64_t errors = 0;
};

size_t count_occurrences(const std::string& haystack, const char* needle) {
  size_t count = 0;
  size_t pos = 0;
  size_t len = std::strlen(needle);
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += len;
  }
  return count;
}

RequestOutcome post_embeddings(httplib::Client& client, const std::string& body,
                               uint32_t per_request) {
  RequestOutcome outcome;
  auto t0 = Clock::now();
  auto res = client.Post("/v1/embeddings", body, "application/json");
  outcome.latency_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  if (!res || res->status != 200) {
    outcome.errors = per_request;
    return outcome;
  }
  // count result entries with a plain scan; parsing multi-megabyte JSON on
  // every load-generator thread would distort the measurement
  outcome.embeddings = count_occurrences(res->body, "\"embedding\":");
  outcome.errors = count_occurrences(res->body, "\"error\":");
  if (outcome.embeddings + outcome.errors != per_request) {
    outcome.errors = per_request;
    outcome.embeddings = 0;
  }
  return outcome;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.concurrency < 1) {
    throw Error(ErrorCode::NonPositiveInput, "concurrency must be >= 1");
  }
  if (cfg.embeddings_per_request == 0 || cfg.total_embeddings == 0 ||
      cfg.total_embeddings % cfg.embeddings_per_request != 0) {
    throw Error(ErrorCode::NonPositiveInput,
                "total embeddings must be a positive multiple of embeddings per request");
  }

  if (cfg.target.empty()) {
    throw Error(ErrorCode::TargetUnreachable, "no target URL configured");
  }

  {
    httplib::Client probe(cfg.target);
    probe.set_connection_timeout(5, 0);
    auto res = probe.Get("/v1/health");
    if (!res || res->status != 200) {
      throw Error(ErrorCode::TargetUnreachable, "target " + cfg.target + " is not serving");
    }
  }

  const uint64_t request_count = cfg.total_embeddings / cfg.embeddings_per_request;
  std::vector<std::string> bodies = build_request_bodies(cfg, request_count);
  std::string warmup = warmup_body(cfg);

  std::vector<RequestOutcome> outcomes(request_count);
  std::atomic<uint64_t> next_request{0};
  std::atomic<unsigned> ready{0};
  std::atomic<bool> go{false};

  auto worker = [&]() {
    httplib::Client client(cfg.target);
    client.set_connection_timeout(30, 0);
    client.set_read_timeout(600, 0);
    client.set_keep_alive(true);
    post_embeddings(client, warmup, 1);  // excluded from timing and accounting

    ready.fetch_add(1);
    while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
    for (;;) {
      uint64_t i = next_request.fetch_add(1, std::memory_order_relaxed);
      if (i >= request_count) return;
      outcomes[i] = post_embeddings(client, bodies[i], cfg.embeddings_per_request);
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(cfg.concurrency);
  for (unsigned t = 0; t < cfg.concurrency; ++t) threads.emplace_back(worker);
  while (ready.load() < cfg.concurrency) std::this_thread::yield();

  auto t0 = Clock::now();
  go.store(true, std::memory_order_release);
  for (auto& t : threads) t.join();
  double elapsed_s = std::chrono::duration<double>(Clock::now() - t0).count();

  BenchmarkReport report;
  report.source = source_kind_name(cfg.source_kind);
  report.elapsed_s = elapsed_s;
  report.requests_issued = request_count;
  std::vector<double> latencies;
  latencies.reserve(request_count);
  for (const auto& outcome : outcomes) {
    report.error_count += outcome.errors;
    report.embeddings_received += outcome.embeddings;
    latencies.push_back(outcome.latency_ms);
  }
  report.embeddings_per_hour =
      static_cast<double>(cfg.total_embeddings) * 3600.0 / report.elapsed_s;
  CostFigures figures = cost_report(report.embeddings_per_hour, cfg.hourly_price);
  report.price_per_embedding = figures.price_per_embedding;
  report.embeddings_per_dollar = figures.embeddings_per_dollar;
  report.p50_ms = percentile(latencies, 0.50);
  report.p90_ms = percentile(latencies, 0.90);
  report.p99_ms = percentile(latencies, 0.99);
  report.utilization_note = "host CPU/GPU utilization not measured";
  return report;
}

std::string report_csv_header() {
  return "source,elapsed_s,emb_per_hour,price_per_embedding,emb_per_dollar,p50_ms,p90_ms,p99_ms,errors";
}

std::string report_csv_row(const BenchmarkReport& report) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%s,%.3f,%.1f,%.10g,%.1f,%.3f,%.3f,%.3f,%llu",
                report.source.c_str(), report.elapsed_s, report.embeddings_per_hour,
                report.price_per_embedding, report.embeddings_per_dollar, report.p50_ms,
                report.p90_ms, report.p99_ms,
                static_cast<unsigned long long>(report.error_count));
  return buf;
}

std::string compare_sources_csv(const std::vector<BenchmarkReport>& reports) {
  std::string out = report_csv_header() + "\n";
  for (const auto& report : reports) out += report_csv_row(report) + "\n";
  return out;
}

}  // namespace wes
