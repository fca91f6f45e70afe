// End-to-end acceptance suite. Each criterion prints exactly one PASS/FAIL
// line; the binary exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "support/oracles.hpp"
#include "support/synth.hpp"
#include "wes/analytics.hpp"
#include "wes/base64.hpp"
#include "wes/bench.hpp"
#include "wes/codec.hpp"
#include "wes/encoder.hpp"
#include "wes/fixtures.hpp"
#include "wes/httplib_wrap.hpp"
#include "wes/ingestion.hpp"
#include "wes/pcg.hpp"
#include "wes/service.hpp"
#include "wes/stubs.hpp"
#include "wes/swsi.hpp"

using namespace wes;
using nlohmann::json;

namespace {

int failures = 0;

struct Criterion {
  int number;
  const char* summary;
  std::vector<std::string> problems;

  void expect(bool ok, const std::string& detail) {
    if (!ok) problems.push_back(detail);
  }

  ~Criterion() {
    auto t1 = std::chrono::steady_clock::now();
    double seconds = std::chrono::duration<double>(t1 - t0).count();
    if (problems.empty()) {
      std::printf("PASS  criterion %2d  (%6.2fs)  %s\n", number, seconds, summary);
    } else {
      ++failures;
      std::printf("FAIL  criterion %2d  (%6.2fs)  %s\n", number, seconds, summary);
      for (const auto& p : problems) std::printf("      - %s\n", p.c_str());
    }
  }

  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
};

// 1. Cost arithmetic reproduced exactly at the table's printed precision.
void criterion_1() {
  Criterion c{1, "cost arithmetic matches the published capacity table"};
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
    long long floored = static_cast<long long>(std::floor(figures.embeddings_per_dollar));
    c.expect(floored == row.per_dollar,
             "rate " + std::to_string(row.rate) + ": per-dollar " + std::to_string(floored) +
                 " != " + std::to_string(row.per_dollar));
    char printed[32];
    std::snprintf(printed, sizeof(printed), "%.*f", row.decimals, figures.price_per_embedding);
    c.expect(std::string(printed) == row.printed_price,
             "rate " + std::to_string(row.rate) + ": price prints as " + printed);
    double identity = figures.price_per_embedding * figures.embeddings_per_dollar;
    c.expect(std::abs(identity - 1.0) <= 1e-9, "price x per-dollar identity violated");
  }
}

// 2. Patch assembly on 20 synthetic uncompressed containers, 100 random
// patches each, byte-identical to reference crops.
void criterion_2() {
  Criterion c{2, "2000 random patches byte-identical to reference crops (20 WSIs)"};
  Pcg32 rng(20240917);
  for (int w = 0; w < 20; ++w) {
    uint32_t rows = 256 + rng.next_below(2048 - 256 + 1);
    uint32_t cols = 256 + rng.next_below(1536 - 256 + 1);
    Image bitmap = synth_gradient(rows, cols);
    auto container = write_swsi(bitmap, 256, 256, TransferSyntax::UncompressedRgb8);
    ParsedWsi parsed = parse_wsi(container);
    for (int p = 0; p < 100; ++p) {
      PatchSpec spec{rng.next_below(cols - 224 + 1), rng.next_below(rows - 224 + 1), 224, 224};
      Patch got = extract_patch(parsed.meta, parsed.index, container, spec);
      Patch expect = crop(bitmap, spec);
      if (got.pixels != expect.pixels) {
        c.expect(false, "mismatch on wsi " + std::to_string(w) + " patch " + std::to_string(p));
        return;
      }
    }
  }
}

// 3. One bitmap through inline PNG, object-store PNG and DICOMweb tiles
// yields an identical embedding vector from all three paths.
void criterion_3() {
  Criterion c{3, "source equivalence: identical embeddings across all three paths"};
  Image bitmap = synth_gradient(512, 512);
  StubServer stub;
  stub.add_blob("/acc/full.png", encode_png(bitmap), "image/png");
  stub.add_wsi("a3", "a3s", "a3i",
               write_swsi(bitmap, 256, 256, TransferSyntax::UncompressedRgb8));
  stub.start();

  FetchOptions fetch;
  fetch.timeout_ms = 10000;
  auto inline_src = open_inline(base64_encode(encode_png(bitmap)), ImageFormat::Png);
  auto object_src = fetch_object(stub.base_url() + "/acc/full.png", fetch);
  auto dicomweb_src = open_dicomweb(stub.dicomweb_ref("a3", "a3s", "a3i"), fetch, 64);

  ReferenceEncoder encoder((EncoderSpec{}));
  PatchSpec spec{200, 200, 224, 224};
  EmbeddingVector a = encoder.embed(inline_src->extract_patch(spec));
  EmbeddingVector b = encoder.embed(object_src->extract_patch(spec));
  EmbeddingVector d = encoder.embed(dicomweb_src->extract_patch(spec));
  c.expect(a == b, "inline and object-store embeddings differ");
  c.expect(b == d, "object-store and dicomweb embeddings differ");
}

// 4. DICOMweb frame GETs equal the union of covered frames, 50 random cases.
void criterion_4() {
  Criterion c{4, "frame-fetch minimality over 50 random patch sets"};
  StubServer stub;
  stub.add_wsi("a4", "a4s", "a4i",
               write_swsi(synth_gradient(1024, 1024), 256, 256,
                          TransferSyntax::UncompressedRgb8));
  stub.start();
  auto ref = stub.dicomweb_ref("a4", "a4s", "a4i");
  std::string frames_prefix = "/dicomweb/studies/a4/series/a4s/instances/a4i/frames/";

  FetchOptions fetch;
  fetch.timeout_ms = 10000;
  Pcg32 rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    auto source = open_dicomweb(ref, fetch, 64);
    stub.clear_log();
    std::set<uint32_t> expected;
    int patch_count = 1 + static_cast<int>(rng.next_below(8));
    for (int p = 0; p < patch_count; ++p) {
      PatchSpec spec{rng.next_below(1024 - 224 + 1), rng.next_below(1024 - 224 + 1), 224, 224};
      auto covered = oracles::pixel_scan_frames(256, 256, 4, spec);
      expected.insert(covered.begin(), covered.end());
      source->extract_patch(spec);
    }
    size_t gets = stub.request_count(frames_prefix);
    if (gets != expected.size()) {
      c.expect(false, "trial " + std::to_string(trial) + ": " + std::to_string(gets) +
                          " GETs for " + std::to_string(expected.size()) + " covered frames");
      return;
    }
  }
}

// 5. ROC AUC equals the brute-force pairwise oracle on 1,000 random
// instances with ties, to 1e-12.
void criterion_5() {
  Criterion c{5, "ROC AUC matches the pairwise oracle on 1000 tied instances"};
  Pcg32 rng(55);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    size_t n = 2 + rng.next_below(49);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    uint32_t levels = 1 + rng.next_below(10);
    for (size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.next_below(levels)) / levels;
      labels[i] = static_cast<int>(rng.next() & 1);
    }
    labels[0] = 0;
    labels[1] = 1;
    worst = std::max(worst, std::abs(roc_auc(scores, labels) -
                                     oracles::pairwise_auc(scores, labels)));
  }
  c.expect(worst <= 1e-12, "worst deviation " + std::to_string(worst));
}

// 6. Data-efficiency property on seeded separable embeddings: mean linear
// AUC over 5 seeds >= {0.80, 0.95, 0.99} at fractions {0.01, 0.1, 1.0},
// non-decreasing within 0.02.
void criterion_6() {
  Criterion c{6, "linear-probe data-efficiency curve on separable embeddings"};
  LabeledEmbeddingSet data = synth::blobs(1000, 384, 3.0, 606);
  std::vector<double> fractions = {0.01, 0.1, 1.0};
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  auto records = data_efficiency_sweep(data, fractions, ProbeKind::Linear, seeds);

  auto mean_at = [&](double fraction) {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : records) {
      if (r.fraction == fraction) {
        sum += r.auc;
        ++count;
      }
    }
    return sum / count;
  };
  double m001 = mean_at(0.01), m01 = mean_at(0.1), m1 = mean_at(1.0);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "means: %.4f @0.01, %.4f @0.1, %.4f @1.0", m001, m01, m1);
  c.expect(m001 >= 0.80, std::string("mean at 0.01 below 0.80 (") + buf + ")");
  c.expect(m01 >= 0.95, std::string("mean at 0.1 below 0.95 (") + buf + ")");
  c.expect(m1 >= 0.99, std::string("mean at 1.0 below 0.99 (") + buf + ")");
  c.expect(m01 >= m001 - 0.02, "curve decreases beyond slack between 0.01 and 0.1");
  c.expect(m1 >= m01 - 0.02, "curve decreases beyond slack between 0.1 and 1.0");
}

// 7. MLP beats linear on the XOR fixture.
void criterion_7() {
  Criterion c{7, "mlp2 succeeds where the linear probe fails (XOR fixture)"};
  LabeledEmbeddingSet train = synth::xor_clusters(100, 16, 2.0, 0.35, 77);
  LabeledEmbeddingSet eval = synth::xor_clusters(100, 16, 2.0, 0.35, 78);

  auto eval_auc = [&](auto&& probe) {
    std::vector<double> scores(eval.labels.size());
    for (size_t i = 0; i < eval.labels.size(); ++i) {
      scores[i] = probe.score(eval.embeddings.row_span(i));
    }
    return roc_auc(scores, eval.labels);
  };
  double linear_auc = eval_auc(train_linear_probe(train, {}, 1));
  double mlp_auc = eval_auc(train_mlp_probe(train, {}, 1));
  char buf[96];
  std::snprintf(buf, sizeof(buf), "linear %.4f, mlp2 %.4f", linear_auc, mlp_auc);
  c.expect(linear_auc <= 0.6, std::string("linear AUC above 0.6: ") + buf);
  c.expect(mlp_auc >= 0.9, std::string("mlp2 AUC below 0.9: ") + buf);
}

// 8. Desk-scale benchmark: 10 x 500 inline patches, zero errors, exact
// report identities, concurrency 10 at >= 0.9x the concurrency-1 throughput.
void criterion_8() {
  Criterion c{8, "benchmark harness: 10 x 500 inline, identities and monotone load"};
  ServiceConfig config;
  config.max_patches_per_request = 5000;
  EmbedService service(config);
  int port = service.start();

  BenchmarkConfig cfg;
  cfg.target = "http://127.0.0.1:" + std::to_string(port);
  cfg.source_kind = SourceKind::Inline;
  cfg.inline_base64 = base64_encode(encode_png(synth_smooth(224, 224)));
  cfg.embeddings_per_request = 500;
  cfg.total_embeddings = 5000;

  cfg.concurrency = 10;
  BenchmarkReport at10 = run_benchmark(cfg);
  cfg.concurrency = 1;
  BenchmarkReport at1 = run_benchmark(cfg);
  service.stop();

  c.expect(at10.requests_issued == 10, "expected 10 requests at concurrency 10");
  c.expect(at10.error_count == 0,
           "concurrency-10 run reported " + std::to_string(at10.error_count) + " errors");
  c.expect(at1.error_count == 0,
           "concurrency-1 run reported " + std::to_string(at1.error_count) + " errors");
  c.expect(at10.embeddings_received == 5000, "missing embeddings at concurrency 10");

  for (const BenchmarkReport* report : {&at10, &at1}) {
    double identity = report->price_per_embedding * report->embeddings_per_dollar;
    c.expect(std::abs(identity - 1.0) <= 1e-9, "price x per-dollar identity violated");
    double recomputed = static_cast<double>(cfg.total_embeddings) * 3600.0 / report->elapsed_s;
    c.expect(report->embeddings_per_hour == recomputed,
             "embeddings_per_hour is not exactly total*3600/elapsed");
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "throughput c10 %.0f vs c1 %.0f emb/h",
                at10.embeddings_per_hour, at1.embeddings_per_hour);
  c.expect(at10.embeddings_per_hour >= 0.9 * at1.embeddings_per_hour,
           std::string("monotone-load check failed: ") + buf);
}

// 9. Two-region overlay purity and k-means inertia monotonicity.
void criterion_9() {
  Criterion c{9, "clustering overlay purity and non-increasing inertia"};
  Image bitmap = synth_two_region(448, 896, 10, 245);
  auto container = write_swsi(bitmap, 256, 256, TransferSyntax::UncompressedRgb8);
  ParsedWsi parsed = parse_wsi(container);
  ReferenceEncoder encoder((EncoderSpec{}));
  OverlayResult overlay =
      cluster_overlay(parsed.meta, parsed.index, container, encoder, 2, 9);

  std::set<uint32_t> left, right;
  for (size_t i = 0; i < overlay.patches.size(); ++i) {
    if (overlay.patches[i].x + 224 <= 448) left.insert(overlay.clusters.assignment[i]);
    else right.insert(overlay.clusters.assignment[i]);
  }
  c.expect(left.size() == 1 && right.size() == 1 && *left.begin() != *right.begin(),
           "overlay does not assign one distinct cluster per region");

  Pcg32 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    size_t n = 10 + rng.next_below(80);
    size_t dim = 2 + rng.next_below(8);
    uint32_t k = 1 + rng.next_below(8);
    if (k > n) k = static_cast<uint32_t>(n);
    Matrix points = Matrix::zeros(n, dim);
    for (auto& v : points.data) v = rng.next_double() * 5.0;
    ClusterResult result = kmeans(points, k, trial);
    for (size_t i = 1; i < result.inertia_history.size(); ++i) {
      if (result.inertia_history[i] > result.inertia_history[i - 1] + 1e-9) {
        c.expect(false, "inertia increased on instance " + std::to_string(trial));
        return;
      }
    }
  }
}

// 10. Service invariants: byte-identical result arrays under concurrency and
// per-patch failure isolation.
void criterion_10() {
  Criterion c{10, "service determinism under concurrency and failure isolation"};
  ServiceConfig config;
  config.max_patches_per_request = 100;
  EmbedService service(config);
  int port = service.start();

  Image img = synth_gradient(512, 512);
  json request = {
      {"sources",
       json::array({json{{"source", json{{"kind", "inline"},
                                         {"data", base64_encode(encode_png(img))},
                                         {"format", "png"}}},
                         {"patches", json::array({json{{"x", 0}, {"y", 0}, {"w", 224}, {"h", 224}},
                                                  json{{"x", 200}, {"y", 150}, {"w", 224}, {"h", 224}},
                                                  json{{"x", 288}, {"y", 288}, {"w", 224}, {"h", 224}}})}}})}};
  std::string body = request.dump();

  std::vector<std::string> results(8);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      httplib::Client client("127.0.0.1", port);
      auto res = client.Post("/v1/embeddings", body, "application/json");
      if (res && res->status == 200) {
        results[t] = json::parse(res->body)["results"].dump();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (int t = 0; t < 8; ++t) {
    c.expect(!results[t].empty(), "request " + std::to_string(t) + " failed");
  }
  for (int t = 1; t < 8; ++t) {
    if (results[t] != results[0]) {
      c.expect(false, "result arrays differ between concurrent requests");
      break;
    }
  }

  // one out-of-bounds patch among valid ones
  json mixed = {
      {"sources",
       json::array({json{{"source", json{{"kind", "inline"},
                                         {"data", base64_encode(encode_png(img))},
                                         {"format", "png"}}},
                         {"patches", json::array({json{{"x", 0}, {"y", 0}, {"w", 224}, {"h", 224}},
                                                  json{{"x", 400}, {"y", 400}, {"w", 224}, {"h", 224}},
                                                  json{{"x", 100}, {"y", 100}, {"w", 224}, {"h", 224}}})}}})}};
  int status = 0;
  json response = service.handle_embed(mixed, status);
  service.stop();

  c.expect(status == 200, "mixed request did not return 200");
  const auto& entries = response["results"];
  c.expect(entries.size() == 3, "expected 3 results");
  c.expect(entries[0].contains("embedding"), "first valid patch lost");
  c.expect(entries[1].contains("error") &&
               entries[1]["error"]["code"] == "PatchOutOfBounds",
           "out-of-bounds patch not isolated");
  c.expect(entries[2].contains("embedding"), "sibling patch aborted by failing one");

  ReferenceEncoder encoder((EncoderSpec{}));
  EmbeddingVector expect = encoder.embed(crop(img, {100, 100, 224, 224}));
  c.expect(entries[2]["embedding"].get<std::vector<double>>() == expect,
           "sibling patch result corrupted");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all 10 criteria passed\n");
  return 0;
}
