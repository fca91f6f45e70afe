#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "support/oracles.hpp"
#include "support/synth.hpp"
#include "wes/analytics.hpp"
#include "wes/encoder.hpp"
#include "wes/error.hpp"
#include "wes/fixtures.hpp"
#include "wes/pcg.hpp"
#include "wes/swsi.hpp"

using namespace wes;

TEST_CASE("roc auc on the worked example") {
  std::vector<double> scores = {0.9, 0.8, 0.3, 0.2};
  std::vector<int> labels = {1, 0, 1, 0};
  CHECK(roc_auc(scores, labels) == 0.75);  // 3 of 4 pos/neg pairs ordered correctly
}

TEST_CASE("roc auc endpoints") {
  std::vector<double> separated = {0.9, 0.8, 0.2, 0.1};
  std::vector<int> labels = {1, 1, 0, 0};
  CHECK(roc_auc(separated, labels) == 1.0);

  std::vector<double> ties = {0.5, 0.5, 0.5, 0.5};
  CHECK(roc_auc(ties, labels) == 0.5);

  std::vector<double> inverted = {0.1, 0.2, 0.8, 0.9};
  CHECK(roc_auc(inverted, labels) == 0.0);
}

TEST_CASE("roc auc equals the brute-force pairwise oracle with ties injected") {
  Pcg32 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    size_t n = 2 + rng.next_below(49);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    // discrete score levels force ties
    uint32_t levels = 1 + rng.next_below(8);
    for (size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.next_below(levels)) / levels;
      labels[i] = static_cast<int>(rng.next() & 1);
    }
    labels[0] = 0;
    labels[1] = 1;
    CHECK(std::abs(roc_auc(scores, labels) - oracles::pairwise_auc(scores, labels)) <= 1e-12);
  }
}

TEST_CASE("roc auc is invariant under strictly increasing transforms") {
  Pcg32 rng(5);
  std::vector<double> scores(40);
  std::vector<int> labels(40);
  for (size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.next_double();
    labels[i] = static_cast<int>(rng.next() & 1);
  }
  labels[0] = 0;
  labels[1] = 1;
  double base = roc_auc(scores, labels);
  std::vector<double> transformed = scores;
  for (double& s : transformed) s = std::exp(3.0 * s) - 7.0;
  CHECK(roc_auc(transformed, labels) == base);
}

TEST_CASE("roc auc error paths") {
  std::vector<double> scores = {0.1, 0.2};
  std::vector<int> ones = {1, 1};
  CHECK_THROWS_AS(roc_auc(scores, ones), Error);
  std::vector<double> bad = {0.1, std::nan("")};
  std::vector<int> labels = {0, 1};
  CHECK_THROWS_AS(roc_auc(bad, labels), Error);
}

// ---------------------------------------------------------------------------

namespace {

double holdout_auc(const LabeledEmbeddingSet& train, const LabeledEmbeddingSet& eval,
                   const LinearProbe& probe) {
  std::vector<double> scores(eval.labels.size());
  for (size_t i = 0; i < eval.labels.size(); ++i) {
    scores[i] = probe.score(eval.embeddings.row_span(i));
  }
  return roc_auc(scores, eval.labels);
}

}  // namespace

TEST_CASE("linear probe separates Gaussian blobs") {
  LabeledEmbeddingSet train = synth::blobs(100, 384, 4.0, 7);
  LabeledEmbeddingSet eval = synth::blobs(100, 384, 4.0, 8);
  LinearProbe probe = train_linear_probe(train, {}, 7);
  CHECK(holdout_auc(train, eval, probe) >= 0.99);
}

TEST_CASE("linear probe on label noise stays near chance") {
  LabeledEmbeddingSet train = synth::random_labels(200, 64, 7);
  LabeledEmbeddingSet eval = synth::random_labels(200, 64, 1007);
  LinearProbe probe = train_linear_probe(train, {}, 7);
  double auc = holdout_auc(train, eval, probe);
  CHECK(auc >= 0.35);
  CHECK(auc <= 0.65);
}

TEST_CASE("duplicating every training point leaves the decision function unchanged") {
  LabeledEmbeddingSet data = synth::blobs(40, 32, 3.0, 3);
  LabeledEmbeddingSet doubled;
  doubled.task = data.task;
  doubled.embeddings = Matrix::zeros(2 * data.embeddings.rows, data.embeddings.cols);
  for (size_t i = 0; i < data.embeddings.rows; ++i) {
    std::copy_n(data.embeddings.row(i), data.embeddings.cols, doubled.embeddings.row(i));
    std::copy_n(data.embeddings.row(i), data.embeddings.cols,
                doubled.embeddings.row(i + data.embeddings.rows));
    doubled.labels.push_back(data.labels[i]);
  }
  for (int label : data.labels) doubled.labels.push_back(label);

  LinearProbe a = train_linear_probe(data, {}, 1);
  LinearProbe b = train_linear_probe(doubled, {}, 1);
  for (size_t i = 0; i < data.embeddings.rows; ++i) {
    CHECK(std::abs(a.score(data.embeddings.row_span(i)) -
                   b.score(data.embeddings.row_span(i))) <= 1e-9);
  }
}

TEST_CASE("probes are bit-reproducible") {
  LabeledEmbeddingSet data = synth::blobs(50, 48, 3.0, 11);
  LinearProbe l1 = train_linear_probe(data, {}, 42);
  LinearProbe l2 = train_linear_probe(data, {}, 42);
  CHECK(l1.weights == l2.weights);
  CHECK(l1.bias == l2.bias);

  MlpProbe m1 = train_mlp_probe(data, {}, 42);
  MlpProbe m2 = train_mlp_probe(data, {}, 42);
  CHECK(m1.w1 == m2.w1);
  CHECK(m1.b1 == m2.b1);
  CHECK(m1.w2 == m2.w2);
  CHECK(m1.b2 == m2.b2);
}

TEST_CASE("mlp beats linear on the xor arrangement") {
  LabeledEmbeddingSet train = synth::xor_clusters(100, 16, 2.0, 0.35, 21);
  LabeledEmbeddingSet eval = synth::xor_clusters(100, 16, 2.0, 0.35, 22);

  LinearProbe linear = train_linear_probe(train, {}, 1);
  std::vector<double> linear_scores(eval.labels.size());
  for (size_t i = 0; i < eval.labels.size(); ++i) {
    linear_scores[i] = linear.score(eval.embeddings.row_span(i));
  }
  double linear_auc = roc_auc(linear_scores, eval.labels);
  CHECK(linear_auc <= 0.6);

  MlpProbe mlp = train_mlp_probe(train, {}, 1);
  std::vector<double> mlp_scores(eval.labels.size());
  for (size_t i = 0; i < eval.labels.size(); ++i) {
    mlp_scores[i] = mlp.score(eval.embeddings.row_span(i));
  }
  double mlp_auc = roc_auc(mlp_scores, eval.labels);
  CHECK(mlp_auc >= 0.9);
}

TEST_CASE("mlp separates blobs") {
  LabeledEmbeddingSet train = synth::blobs(100, 48, 4.0, 31);
  LabeledEmbeddingSet eval = synth::blobs(100, 48, 4.0, 32);
  MlpProbe probe = train_mlp_probe(train, {}, 31);
  std::vector<double> scores(eval.labels.size());
  for (size_t i = 0; i < eval.labels.size(); ++i) {
    scores[i] = probe.score(eval.embeddings.row_span(i));
  }
  CHECK(roc_auc(scores, eval.labels) >= 0.99);
}

TEST_CASE("probe input validation") {
  LabeledEmbeddingSet single;
  single.embeddings = Matrix::zeros(4, 8);
  single.labels = {1, 1, 1, 1};
  CHECK_THROWS_AS(train_linear_probe(single), Error);

  LabeledEmbeddingSet nonfinite = synth::blobs(10, 8, 2.0, 1);
  nonfinite.embeddings.data[5] = std::nan("");
  try {
    train_linear_probe(nonfinite);
    FAIL("expected NonFiniteInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteInput);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("stratified subsample preserves the class ratio within one example") {
  std::vector<int> labels;
  for (int i = 0; i < 300; ++i) labels.push_back(0);
  for (int i = 0; i < 700; ++i) labels.push_back(1);

  for (uint64_t seed = 1; seed <= 5; ++seed) {
    auto picked = stratified_subsample(labels, 0.1, seed);
    CHECK(picked.size() == 100);
    size_t zeros = 0;
    for (size_t i : picked) zeros += labels[i] == 0;
    CHECK(std::abs(static_cast<long>(zeros) - 30L) <= 1);
    // no duplicates
    CHECK(std::set<size_t>(picked.begin(), picked.end()).size() == picked.size());
  }
}

TEST_CASE("stratified subsample keeps at least one example per class") {
  std::vector<int> labels;
  labels.push_back(0);
  for (int i = 0; i < 99; ++i) labels.push_back(1);
  auto picked = stratified_subsample(labels, 0.05, 3);
  bool has0 = false;
  for (size_t i : picked) has0 |= labels[i] == 0;
  CHECK(has0);
}

TEST_CASE("fraction too small to cover the classes") {
  std::vector<int> labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  CHECK_THROWS_AS(stratified_subsample(labels, 0.05, 1), Error);
  try {
    stratified_subsample(labels, 0.0, 1);
    FAIL("expected FractionTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FractionTooSmall);
  }
}

TEST_CASE("degenerate sweep equals a single train/eval run") {
  LabeledEmbeddingSet data = synth::blobs(100, 32, 3.0, 17);
  std::vector<double> fractions = {1.0};
  std::vector<uint64_t> seeds = {4};
  auto records = data_efficiency_sweep(data, fractions, ProbeKind::Linear, seeds);
  REQUIRE(records.size() == 1);
  CHECK(records[0].fraction == 1.0);
  CHECK(records[0].seed == 4);
  CHECK(records[0].auc >= 0.95);
}

TEST_CASE("sweep records are invariant to execution order of fractions") {
  LabeledEmbeddingSet data = synth::blobs(150, 16, 3.0, 23);
  std::vector<uint64_t> seeds = {1, 2};
  std::vector<double> ascending = {0.1, 0.5, 1.0};
  auto base = data_efficiency_sweep(data, ascending, ProbeKind::Linear, seeds);

  // same cells, one at a time, in reverse
  for (double fraction : {1.0, 0.5, 0.1}) {
    std::vector<double> one = {fraction};
    auto solo = data_efficiency_sweep(data, one, ProbeKind::Linear, seeds);
    for (const auto& record : solo) {
      auto match = std::find_if(base.begin(), base.end(), [&](const SweepRecord& r) {
        return r.fraction == record.fraction && r.seed == record.seed;
      });
      REQUIRE(match != base.end());
      CHECK(match->auc == record.auc);
    }
  }
}

TEST_CASE("sweep auc grows with training data on separable blobs") {
  LabeledEmbeddingSet data = synth::blobs(500, 64, 3.0, 29);
  std::vector<double> fractions = {0.01, 0.1, 1.0};
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  auto records = data_efficiency_sweep(data, fractions, ProbeKind::Linear, seeds);
  REQUIRE(records.size() == 15);

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
  CHECK(m1 >= m001 - 0.02);
  CHECK(m1 >= m01 - 0.02);
  CHECK(m1 >= 0.99);
}

TEST_CASE("sweep rejects unsorted fractions") {
  LabeledEmbeddingSet data = synth::blobs(50, 8, 3.0, 1);
  std::vector<double> fractions = {1.0, 0.1};
  std::vector<uint64_t> seeds = {1};
  CHECK_THROWS_AS(data_efficiency_sweep(data, fractions, ProbeKind::Linear, seeds), Error);
}

// ---------------------------------------------------------------------------

TEST_CASE("kmeans on two point masses") {
  Matrix points = Matrix::zeros(8, 2);
  for (int i = 0; i < 4; ++i) {
    points.row(i)[0] = 5.0;
    points.row(i)[1] = 5.0;
  }
  // other four stay at the origin
  ClusterResult result = kmeans(points, 2, 1);
  CHECK(result.inertia() == 0.0);
  std::set<uint32_t> left(result.assignment.begin(), result.assignment.begin() + 4);
  std::set<uint32_t> right(result.assignment.begin() + 4, result.assignment.end());
  CHECK(left.size() == 1);
  CHECK(right.size() == 1);
  CHECK(*left.begin() != *right.begin());
}

TEST_CASE("kmeans with k=1 gives the mean and the summed squared deviations") {
  Pcg32 rng(3);
  Matrix points = Matrix::zeros(50, 4);
  for (auto& v : points.data) v = rng.next_double() * 10.0;
  ClusterResult result = kmeans(points, 1, 9);

  std::vector<double> mean(4, 0.0);
  for (size_t i = 0; i < points.rows; ++i) {
    for (size_t d = 0; d < 4; ++d) mean[d] += points.row(i)[d];
  }
  for (double& m : mean) m /= 50.0;
  double expect = 0.0;
  for (size_t i = 0; i < points.rows; ++i) {
    for (size_t d = 0; d < 4; ++d) {
      double diff = points.row(i)[d] - mean[d];
      expect += diff * diff;
    }
  }
  for (size_t d = 0; d < 4; ++d) {
    CHECK(result.centroids.row(0)[d] == doctest::Approx(mean[d]).epsilon(1e-12));
  }
  CHECK(result.inertia() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("kmeans with k=N reaches zero inertia") {
  Pcg32 rng(8);
  Matrix points = Matrix::zeros(12, 3);
  for (auto& v : points.data) v = rng.next_double();
  ClusterResult result = kmeans(points, 12, 2);
  CHECK(result.inertia() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("inertia is non-increasing and the final assignment is a fixed point") {
  Pcg32 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    size_t n = 10 + rng.next_below(60);
    size_t dim = 2 + rng.next_below(6);
    uint32_t k = 1 + rng.next_below(static_cast<uint32_t>(n < 8 ? n : 8));
    Matrix points = Matrix::zeros(n, dim);
    for (auto& v : points.data) v = rng.next_double() * 4.0;

    ClusterResult result = kmeans(points, k, trial);
    for (size_t i = 1; i < result.inertia_history.size(); ++i) {
      REQUIRE(result.inertia_history[i] <= result.inertia_history[i - 1] + 1e-9);
    }
    // re-assigning against the final centroids changes nothing
    ClusterResult again = kmeans(points, k, trial);
    REQUIRE(again.assignment == result.assignment);
  }
}

TEST_CASE("serial and parallel kmeans agree bitwise") {
  Pcg32 rng(77);
  Matrix points = Matrix::zeros(400, 16);
  for (auto& v : points.data) v = rng.next_double();
  ClusterResult serial = kmeans(points, 7, 5, Execution::Serial);
  ClusterResult parallel = kmeans(points, 7, 5, Execution::Parallel);
  CHECK(serial.assignment == parallel.assignment);
  CHECK(serial.inertia_history == parallel.inertia_history);
  CHECK(serial.centroids.data == parallel.centroids.data);
}

TEST_CASE("kmeans rejects k > N") {
  Matrix points = Matrix::zeros(3, 2);
  CHECK_THROWS_AS(kmeans(points, 4, 1), Error);
  CHECK_THROWS_AS(kmeans(points, 0, 1), Error);
}

// ---------------------------------------------------------------------------

TEST_CASE("two-region overlay separates the halves perfectly") {
  Image bitmap = synth_two_region(448, 896, 10, 245);
  auto swsi = write_swsi(bitmap, 256, 256, TransferSyntax::UncompressedRgb8);
  ParsedWsi parsed = parse_wsi(swsi);
  ReferenceEncoder encoder((EncoderSpec{}));

  OverlayResult overlay = cluster_overlay(parsed.meta, parsed.index, swsi, encoder, 2, 4);
  REQUIRE(overlay.grid_rows == 2);
  REQUIRE(overlay.grid_cols == 4);
  REQUIRE(overlay.patches.size() == 8);

  std::set<uint32_t> left, right;
  for (size_t i = 0; i < overlay.patches.size(); ++i) {
    if (overlay.patches[i].x + 224 <= 448) left.insert(overlay.clusters.assignment[i]);
    else right.insert(overlay.clusters.assignment[i]);
  }
  CHECK(left.size() == 1);
  CHECK(right.size() == 1);
  CHECK(*left.begin() != *right.begin());
}

TEST_CASE("uniform overlay collapses to zero inertia immediately") {
  Image bitmap = synth_uniform(448, 448, 128);
  auto swsi = write_swsi(bitmap, 256, 256, TransferSyntax::UncompressedRgb8);
  ParsedWsi parsed = parse_wsi(swsi);
  ReferenceEncoder encoder((EncoderSpec{}));
  OverlayResult overlay = cluster_overlay(parsed.meta, parsed.index, swsi, encoder, 3, 1);
  REQUIRE(!overlay.clusters.inertia_history.empty());
  CHECK(overlay.clusters.inertia_history[0] == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("overlay csv has one row per grid cell") {
  Image bitmap = synth_gradient(700, 500);
  auto swsi = write_swsi(bitmap, 256, 256, TransferSyntax::UncompressedRgb8);
  ParsedWsi parsed = parse_wsi(swsi);
  ReferenceEncoder encoder((EncoderSpec{}));
  OverlayResult overlay = cluster_overlay(parsed.meta, parsed.index, swsi, encoder, 2, 9);
  std::string csv = overlay_csv(overlay);
  size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == 1 + (700 / 224) * (500 / 224));  // header + 3*2 cells

  Image img = overlay_image(overlay, 8);
  CHECK(img.rows == overlay.grid_rows * 8);
  CHECK(img.cols == overlay.grid_cols * 8);
}

// ---------------------------------------------------------------------------

TEST_CASE("embedding csv round trip and label join") {
  EmbeddingTable table;
  table.ids = {"p0", "p1", "p2"};
  table.values = Matrix::zeros(3, 4);
  Pcg32 rng(4);
  for (auto& v : table.values.data) v = rng.next_double() * 2.0 - 1.0;

  std::string path = "/tmp/wes_test_embeddings.csv";
  save_embeddings_csv(path, table);
  EmbeddingTable back = load_embeddings_csv(path);
  CHECK(back.ids == table.ids);
  CHECK(back.values.data == table.values.data);

  std::string labels_path = "/tmp/wes_test_labels.csv";
  {
    FILE* f = fopen(labels_path.c_str(), "w");
    fputs("id,label\np0,0\np1,1\np2,0\n", f);
    fclose(f);
  }
  auto labels = load_labels_csv(labels_path);
  LabeledEmbeddingSet data = join_labeled_set(back, labels, "demo");
  CHECK(data.labels == std::vector<int>{0, 1, 0});
  CHECK(data.task == "demo");

  std::vector<SweepRecord> records = {{"demo", ProbeKind::Linear, 0.5, 3, 0.875}};
  std::string csv = sweep_csv(records);
  CHECK(csv.find("task,probe,fraction,seed,auc\n") == 0);
  CHECK(csv.find("demo,linear,0.5,3,0.875") != std::string::npos);
}
