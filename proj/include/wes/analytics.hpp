#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wes/encoder.hpp"
#include "wes/image.hpp"
#include "wes/parallel.hpp"
#include "wes/wsi.hpp"

namespace wes {

struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;  // row-major

  static Matrix zeros(size_t rows, size_t cols) {
    return Matrix{rows, cols, std::vector<double>(rows * cols, 0.0)};
  }
  double* row(size_t i) { return data.data() + i * cols; }
  const double* row(size_t i) const { return data.data() + i * cols; }
  std::span<const double> row_span(size_t i) const { return {row(i), cols}; }
};

struct LabeledEmbeddingSet {
  Matrix embeddings;
  std::vector<int> labels;  // 0/1 for probes
  std::string task = "task";
};

// P(score+ > score-) with ties counting one half, computed exactly via
// average ranks. Throws SingleClass unless both labels occur.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Probes

struct LinearProbeOptions {
  double reg_lambda = 1e-4;
  double learning_rate = 0.1;
  int steps = 500;
};

// Logistic regression fit by full-batch gradient descent on the mean
// cross-entropy plus (lambda/2)*|w|^2; bias unregularized, zero init.
struct LinearProbe {
  std::vector<double> weights;
  double bias = 0.0;
  double score(std::span<const double> x) const;
};

LinearProbe train_linear_probe(const LabeledEmbeddingSet& data, LinearProbeOptions opts = {},
                               uint64_t seed = 0);

struct MlpProbeOptions {
  uint32_t hidden_dim = 128;
  int epochs = 200;
  double learning_rate = 0.01;
  uint32_t batch_size = 32;
};

// input -> hidden (ReLU) -> 1 (sigmoid), seeded init and seeded shuffling,
// fixed epoch count; bit-reproducible for a given (data, seed, options).
struct MlpProbe {
  size_t input_dim = 0;
  size_t hidden_dim = 0;
  std::vector<double> w1;  // hidden x input
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;
  double score(std::span<const double> x) const;
};

MlpProbe train_mlp_probe(const LabeledEmbeddingSet& data, MlpProbeOptions opts = {},
                         uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Data-efficiency sweep

enum class ProbeKind { Linear, Mlp2 };
const char* probe_kind_name(ProbeKind kind);
ProbeKind parse_probe_kind(const std::string& name);

struct SweepRecord {
  std::string task;
  ProbeKind probe;
  double fraction;
  uint64_t seed;
  double auc;
};

struct SweepOptions {
  double eval_fraction = 0.5;   // held-out split, fixed across all cells
  uint64_t split_seed = 0x5eed;
};

// Largest-remainder stratified subsample of the training split per
// (fraction, seed) cell; every cell is evaluated on the same held-out split.
// Cell seeding depends on the fraction value, not its position, so records
// do not depend on execution order.
std::vector<SweepRecord> data_efficiency_sweep(const LabeledEmbeddingSet& data,
                                               std::span<const double> fractions, ProbeKind kind,
                                               std::span<const uint64_t> seeds,
                                               SweepOptions opts = {});

// Indices of a stratified subsample (largest-remainder rounding, at least one
// example per class). Exposed for the counting tests.
std::vector<size_t> stratified_subsample(std::span<const int> labels, double fraction,
                                         uint64_t seed);

// ---------------------------------------------------------------------------
// k-means

struct ClusterResult {
  std::vector<uint32_t> assignment;
  std::vector<double> inertia_history;  // after each assignment step
  Matrix centroids;
  double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }
};

// Lloyd's algorithm with seeded k-means++ initialization; stops once the
// assignment is a fixed point or after max_iters. The parallel execution
// path only distributes the per-point assignment step, so results match the
// serial path bitwise.
ClusterResult kmeans(const Matrix& points, uint32_t k, uint64_t seed,
                     Execution exec = Execution::Parallel, int max_iters = 100);

// ---------------------------------------------------------------------------
// Clustering overlay across a tiled image

struct OverlayResult {
  uint32_t grid_rows = 0;
  uint32_t grid_cols = 0;
  uint32_t stride = 224;
  std::vector<PatchSpec> patches;  // row-major grid order
  ClusterResult clusters;
};

OverlayResult cluster_overlay(const WsiMetadata& meta, const FrameIndex& index,
                              std::span<const uint8_t> container, const Encoder& encoder,
                              uint32_t k, uint64_t seed, uint32_t stride = 224);

// Color map image, one cell per patch.
Image overlay_image(const OverlayResult& overlay, uint32_t cell_px = 16);
// Rows "x,y,cluster", one per patch.
std::string overlay_csv(const OverlayResult& overlay);

// ---------------------------------------------------------------------------
// CSV interchange

std::string sweep_csv(std::span<const SweepRecord> records);

struct EmbeddingTable {
  std::vector<std::string> ids;
  Matrix values;
};

// Header "id,e0..e{D-1}".
EmbeddingTable load_embeddings_csv(const std::string& path);
void save_embeddings_csv(const std::string& path, const EmbeddingTable& table);

// Header "id,label".
std::vector<std::pair<std::string, int>> load_labels_csv(const std::string& path);

LabeledEmbeddingSet join_labeled_set(const EmbeddingTable& table,
                                     const std::vector<std::pair<std::string, int>>& labels,
                                     const std::string& task);

}  // namespace wes
