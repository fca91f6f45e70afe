#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wes/ingestion.hpp"

namespace wes {

// How patches are laid out across sources within one request:
//   PerPatch   - one source per patch; the image is the patch (the external
//                and object-store setup, where stored image dimensions match
//                the encoder input)
//   PerRequest - a single tiled source with many patch coordinates (the
//                DICOMweb setup)
enum class RequestLayout { PerPatch, PerRequest };

struct BenchmarkConfig {
  unsigned concurrency = 10;
  uint32_t embeddings_per_request = 5000;
  uint64_t total_embeddings = 50000;
  SourceKind source_kind = SourceKind::Inline;
  std::string target;  // base URL of the embedding service
  double hourly_price = 3.12;
  std::optional<RequestLayout> layout;  // default depends on source_kind
  uint64_t seed = 1;

  // fixture bindings for the non-inline kinds
  std::string object_uri;
  DicomWebRef dicomweb;
  std::string inline_base64;  // base64 PNG used by the inline kind

  FetchOptions fetch;

  RequestLayout effective_layout() const {
    if (layout.has_value()) return *layout;
    return source_kind == SourceKind::DicomWeb ? RequestLayout::PerRequest
                                               : RequestLayout::PerPatch;
  }
};

struct CostFigures {
  double price_per_embedding = 0.0;
  double embeddings_per_dollar = 0.0;
};

// price = hourly_price / rate, per_dollar = rate / hourly_price; the two are
// exact reciprocals.
CostFigures cost_report(double embeddings_per_hour, double hourly_price);

struct BenchmarkReport {
  std::string source;
  double elapsed_s = 0.0;
  double embeddings_per_hour = 0.0;
  double price_per_embedding = 0.0;
  double embeddings_per_dollar = 0.0;
  double p50_ms = 0.0;
  double p90_ms = 0.0;
  double p99_ms = 0.0;
  uint64_t error_count = 0;
  uint64_t requests_issued = 0;
  uint64_t embeddings_received = 0;
  std::string utilization_note;  // free-form; host utilization is not measured
};

// Issues total/per_request requests across `concurrency` workers after one
// untimed warm-up request per worker. Elapsed runs from first send to last
// receive.
BenchmarkReport run_benchmark(const BenchmarkConfig& cfg);

// Nearest-rank percentile of an unsorted sample.
double percentile(std::vector<double> values, double q);

std::string report_csv_header();
std::string report_csv_row(const BenchmarkReport& report);
std::string compare_sources_csv(const std::vector<BenchmarkReport>& reports);

}  // namespace wes
