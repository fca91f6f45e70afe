#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "wes/base64.hpp"
#include "wes/bench.hpp"
#include "wes/codec.hpp"
#include "wes/error.hpp"
#include "wes/fixtures.hpp"
#include "wes/service.hpp"
#include "wes/stubs.hpp"
#include "wes/swsi.hpp"

using namespace wes;

TEST_CASE("cost report matches the published capacity table") {
  // floor(rate/price) and the price at the table's printed precision
  struct Row {
    double rate;
    long long per_dollar;
    const char* printed_price;
    int decimals;
  };
  const Row rows[] = {
      {960869.0, 307970, "0.000003", 6},
      {243779.0, 78134, "0.00001", 5},
      {988217.0, 316736, "0.000003", 6},
  };
  for (const Row& row : rows) {
    CostFigures figures = cost_report(row.rate, 3.12);
    CHECK(static_cast<long long>(std::floor(figures.embeddings_per_dollar)) == row.per_dollar);
    char printed[32];
    std::snprintf(printed, sizeof(printed), "%.*f", row.decimals, figures.price_per_embedding);
    CHECK(std::string(printed) == row.printed_price);
    CHECK(figures.price_per_embedding * figures.embeddings_per_dollar ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("cost report rejects non-positive inputs") {
  CHECK_THROWS_AS(cost_report(0.0, 3.12), Error);
  CHECK_THROWS_AS(cost_report(1000.0, -1.0), Error);
}

TEST_CASE("unit case: one hour for 50,000 embeddings") {
  // elapsed injected via the identity: rate = total*3600/elapsed
  double rate = 50000.0 * 3600.0 / 3600.0;
  CHECK(rate == 50000.0);
  CostFigures figures = cost_report(rate, 3.12);
  CHECK(figures.embeddings_per_dollar == doctest::Approx(50000.0 / 3.12));
}

TEST_CASE("percentile uses nearest rank") {
  std::vector<double> values = {5, 1, 4, 2, 3};
  CHECK(percentile(values, 0.50) == 3);
  CHECK(percentile(values, 0.90) == 5);
  CHECK(percentile(values, 0.99) == 5);
  CHECK(percentile({7.0}, 0.5) == 7.0);
}

TEST_CASE("benchmark accounting against the live service") {
  ServiceConfig config;
  config.max_patches_per_request = 100;
  config.workers = 2;
  EmbedService service(config);
  int port = service.start();

  BenchmarkConfig cfg;
  cfg.target = "http://127.0.0.1:" + std::to_string(port);
  cfg.source_kind = SourceKind::Inline;
  cfg.inline_base64 = base64_encode(encode_png(synth_smooth(224, 224)));
  cfg.concurrency = 2;
  cfg.embeddings_per_request = 10;
  cfg.total_embeddings = 60;

  BenchmarkReport report = run_benchmark(cfg);
  CHECK(report.requests_issued == 6);  // total / per_request
  CHECK(report.error_count == 0);
  CHECK(report.embeddings_received == 60);
  CHECK(report.embeddings_per_hour ==
        static_cast<double>(cfg.total_embeddings) * 3600.0 / report.elapsed_s);
  CHECK(report.price_per_embedding * report.embeddings_per_dollar ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.p50_ms > 0.0);
  CHECK(report.p99_ms >= report.p50_ms);
  service.stop();
}

TEST_CASE("per-patch errors are counted, not dropped") {
  ServiceConfig config;
  config.max_patches_per_request = 100;
  EmbedService service(config);
  int port = service.start();

  // dicomweb layout (per-request) over a 300x300 image: some random patches
  // would be out of bounds if dims were ignored, so instead inject errors by
  // pointing object fetches at a missing blob for half the sources
  StubServer stub;
  stub.add_blob("/ok.png", encode_png(synth_smooth(224, 224)), "image/png");
  stub.start();

  BenchmarkConfig cfg;
  cfg.target = "http://127.0.0.1:" + std::to_string(port);
  cfg.source_kind = SourceKind::Object;
  cfg.object_uri = stub.base_url() + "/gone.png";
  cfg.concurrency = 1;
  cfg.embeddings_per_request = 5;
  cfg.total_embeddings = 10;
  cfg.fetch.backoff_base_ms = 1;

  BenchmarkReport report = run_benchmark(cfg);
  CHECK(report.requests_issued == 2);
  CHECK(report.error_count == 10);
  CHECK(report.embeddings_received == 0);
  service.stop();
}

TEST_CASE("benchmark validates its configuration") {
  BenchmarkConfig cfg;
  cfg.target = "http://127.0.0.1:1";  // nothing listening
  cfg.embeddings_per_request = 7;
  cfg.total_embeddings = 10;  // not divisible
  CHECK_THROWS_AS(run_benchmark(cfg), Error);

  cfg.total_embeddings = 14;
  try {
    run_benchmark(cfg);
    FAIL("expected TargetUnreachable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TargetUnreachable);
  }
}

TEST_CASE("csv report format") {
  BenchmarkReport report;
  report.source = "inline";
  report.elapsed_s = 1.5;
  report.embeddings_per_hour = 1200.0;
  report.price_per_embedding = 0.0026;
  report.embeddings_per_dollar = 384.6;
  report.p50_ms = 10.0;
  report.p90_ms = 20.0;
  report.p99_ms = 30.0;
  report.error_count = 0;

  std::string csv = compare_sources_csv({report, report, report});
  size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == 4);  // header + 3 data rows
  CHECK(csv.rfind("source,elapsed_s,emb_per_hour,price_per_embedding,emb_per_dollar,"
                  "p50_ms,p90_ms,p99_ms,errors\n",
                  0) == 0);
  CHECK(csv.find("inline,1.500,") != std::string::npos);
}

TEST_CASE("per-request layout draws in-bounds patches from a dicomweb source") {
  ServiceConfig config;
  config.max_patches_per_request = 100;
  config.workers = 2;
  EmbedService service(config);
  int port = service.start();

  StubServer stub;
  stub.add_wsi("s", "se", "i",
               write_swsi(synth_gradient(512, 512), 256, 256, TransferSyntax::UncompressedRgb8));
  stub.start();

  BenchmarkConfig cfg;
  cfg.target = "http://127.0.0.1:" + std::to_string(port);
  cfg.source_kind = SourceKind::DicomWeb;
  cfg.dicomweb = stub.dicomweb_ref("s", "se", "i");
  cfg.concurrency = 2;
  cfg.embeddings_per_request = 8;
  cfg.total_embeddings = 32;

  BenchmarkReport report = run_benchmark(cfg);
  CHECK(report.error_count == 0);
  CHECK(report.embeddings_received == 32);
  service.stop();
}
