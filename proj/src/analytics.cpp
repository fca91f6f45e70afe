#include "wes/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include <omp.h>

#include "wes/error.hpp"
#include "wes/pcg.hpp"

namespace wes {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void validate_labeled_set(const LabeledEmbeddingSet& data) {
  if (data.embeddings.rows != data.labels.size()) {
    throw Error(ErrorCode::BadData, "embeddings and labels disagree on row count");
  }
  if (data.embeddings.rows < 2) {
    throw Error(ErrorCode::BadData, "need at least two examples");
  }
  bool has0 = false, has1 = false;
  for (int label : data.labels) {
    if (label == 0) has0 = true;
    else if (label == 1) has1 = true;
    else throw Error(ErrorCode::BadData, "labels must be 0 or 1");
  }
  if (!has0 || !has1) {
    throw Error(ErrorCode::SingleClass, "training data contains a single class");
  }
  for (double v : data.embeddings.data) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteInput, "embeddings contain a non-finite value");
    }
  }
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw Error(ErrorCode::BadData, "scores and labels must be non-empty and aligned");
  }
  size_t n_pos = 0, n_neg = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw Error(ErrorCode::NonFiniteInput, "scores contain a non-finite value");
    }
    if (labels[i] == 1) ++n_pos;
    else if (labels[i] == 0) ++n_neg;
    else throw Error(ErrorCode::BadData, "labels must be 0 or 1");
  }
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::SingleClass, "ROC AUC requires both classes");
  }

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // average ranks over tied runs; rank sum of positives gives Mann-Whitney U
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// ---------------------------------------------------------------------------
// Linear probe

double LinearProbe::score(std::span<const double> x) const {
  double z = bias;
  for (size_t d = 0; d < weights.size(); ++d) z += weights[d] * x[d];
  return sigmoid(z);
}

LinearProbe train_linear_probe(const LabeledEmbeddingSet& data, LinearProbeOptions opts,
                               uint64_t seed) {
  validate_labeled_set(data);
  (void)seed;  // zero init makes the fit identical for every seed
  const size_t n = data.embeddings.rows;
  const size_t dim = data.embeddings.cols;

  LinearProbe probe;
  probe.weights.assign(dim, 0.0);
  probe.bias = 0.0;

  std::vector<double> residual(n);
  std::vector<double> grad(dim);
  for (int step = 0; step < opts.steps; ++step) {
    for (size_t i = 0; i < n; ++i) {
      const double* x = data.embeddings.row(i);
      double z = probe.bias;
      for (size_t d = 0; d < dim; ++d) z += probe.weights[d] * x[d];
      residual[i] = sigmoid(z) - data.labels[i];
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_bias = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double* x = data.embeddings.row(i);
      double r = residual[i];
      for (size_t d = 0; d < dim; ++d) grad[d] += r * x[d];
      grad_bias += r;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (size_t d = 0; d < dim; ++d) {
      probe.weights[d] -=
          opts.learning_rate * (grad[d] * inv_n + opts.reg_lambda * probe.weights[d]);
    }
    probe.bias -= opts.learning_rate * grad_bias * inv_n;
  }
  return probe;
}

// ---------------------------------------------------------------------------
// Two-layer MLP probe

double MlpProbe::score(std::span<const double> x) const {
  double z = b2;
  for (size_t h = 0; h < hidden_dim; ++h) {
    double a = b1[h];
    const double* row = w1.data() + h * input_dim;
    for (size_t d = 0; d < input_dim; ++d) a += row[d] * x[d];
    if (a > 0.0) z += w2[h] * a;
  }
  return sigmoid(z);
}

MlpProbe train_mlp_probe(const LabeledEmbeddingSet& data, MlpProbeOptions opts, uint64_t seed) {
  validate_labeled_set(data);
  if (opts.hidden_dim == 0 || opts.batch_size == 0) {
    throw Error(ErrorCode::BadData, "hidden_dim and batch_size must be positive");
  }
  const size_t n = data.embeddings.rows;
  const size_t dim = data.embeddings.cols;
  const size_t hidden = opts.hidden_dim;

  MlpProbe probe;
  probe.input_dim = dim;
  probe.hidden_dim = hidden;
  probe.w1.resize(hidden * dim);
  probe.b1.assign(hidden, 0.0);
  probe.w2.resize(hidden);
  probe.b2 = 0.0;

  Pcg32 rng(mix_seed(seed, 0x6d6c70));
  const double a1 = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& w : probe.w1) w = (rng.next_double() * 2.0 - 1.0) * a1;
  const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& w : probe.w2) w = (rng.next_double() * 2.0 - 1.0) * a2;

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> activation(hidden);

  std::vector<double> grad_w1(hidden * dim);
  std::vector<double> grad_b1(hidden);
  std::vector<double> grad_w2(hidden);

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    // seeded Fisher-Yates
    for (size_t i = n - 1; i > 0; --i) {
      size_t j = rng.next_below(static_cast<uint32_t>(i + 1));
      std::swap(order[i], order[j]);
    }
    for (size_t start = 0; start < n; start += opts.batch_size) {
      size_t end = std::min(n, start + opts.batch_size);
      double batch = static_cast<double>(end - start);
      std::fill(grad_w1.begin(), grad_w1.end(), 0.0);
      std::fill(grad_b1.begin(), grad_b1.end(), 0.0);
      std::fill(grad_w2.begin(), grad_w2.end(), 0.0);
      double grad_b2 = 0.0;

      for (size_t t = start; t < end; ++t) {
        const double* x = data.embeddings.row(order[t]);
        double y = data.labels[order[t]];
        double z = probe.b2;
        for (size_t h = 0; h < hidden; ++h) {
          double a = probe.b1[h];
          const double* row = probe.w1.data() + h * dim;
          for (size_t d = 0; d < dim; ++d) a += row[d] * x[d];
          activation[h] = a > 0.0 ? a : 0.0;
          z += probe.w2[h] * activation[h];
        }
        double delta = sigmoid(z) - y;  // d(ce)/dz
        grad_b2 += delta;
        for (size_t h = 0; h < hidden; ++h) {
          grad_w2[h] += delta * activation[h];
          if (activation[h] > 0.0) {
            double dh = delta * probe.w2[h];
            grad_b1[h] += dh;
            double* grow = grad_w1.data() + h * dim;
            for (size_t d = 0; d < dim; ++d) grow[d] += dh * x[d];
          }
        }
      }

      double scale = opts.learning_rate / batch;
      for (size_t i = 0; i < probe.w1.size(); ++i) probe.w1[i] -= scale * grad_w1[i];
      for (size_t h = 0; h < hidden; ++h) {
        probe.b1[h] -= scale * grad_b1[h];
        probe.w2[h] -= scale * grad_w2[h];
      }
      probe.b2 -= scale * grad_b2;
    }
  }
  return probe;
}

// ---------------------------------------------------------------------------
// Sweep

const char* probe_kind_name(ProbeKind kind) {
  return kind == ProbeKind::Linear ? "linear" : "mlp2";
}

ProbeKind parse_probe_kind(const std::string& name) {
  if (name == "linear") return ProbeKind::Linear;
  if (name == "mlp2") return ProbeKind::Mlp2;
  throw Error(ErrorCode::BadFlag, "unknown probe kind '" + name + "' (use linear or mlp2)");
}

std::vector<size_t> stratified_subsample(std::span<const int> labels, double fraction,
                                         uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw Error(ErrorCode::FractionTooSmall, "fraction must be in (0, 1]");
  }
  std::map<int, std::vector<size_t>> by_class;
  for (size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  const size_t n_classes = by_class.size();

  size_t target = static_cast<size_t>(std::llround(fraction * static_cast<double>(labels.size())));
  if (target < n_classes) {
    throw Error(ErrorCode::FractionTooSmall,
                "fraction " + std::to_string(fraction) + " of " + std::to_string(labels.size()) +
                    " examples cannot cover " + std::to_string(n_classes) + " classes");
  }

  // largest-remainder rounding of per-class quotas
  struct ClassQuota {
    int label;
    size_t base;
    double remainder;
    size_t available;
  };
  std::vector<ClassQuota> quotas;
  size_t base_sum = 0;
  for (const auto& [label, indices] : by_class) {
    double quota = fraction * static_cast<double>(indices.size());
    size_t base = static_cast<size_t>(std::floor(quota));
    base = std::min(base, indices.size());
    quotas.push_back({label, base, quota - std::floor(quota), indices.size()});
    base_sum += base;
  }
  {
    std::vector<size_t> order(quotas.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return quotas[a].remainder > quotas[b].remainder;
    });
    size_t leftover = target > base_sum ? target - base_sum : 0;
    for (size_t idx : order) {
      if (leftover == 0) break;
      if (quotas[idx].base < quotas[idx].available) {
        ++quotas[idx].base;
        --leftover;
      }
    }
  }
  // at least one example per class; borrow from the largest allocation
  for (auto& quota : quotas) {
    if (quota.base == 0) {
      auto donor = std::max_element(quotas.begin(), quotas.end(),
                                    [](const ClassQuota& a, const ClassQuota& b) {
                                      return a.base < b.base;
                                    });
      if (donor->base > 1) --donor->base;
      quota.base = 1;
    }
  }

  Pcg32 rng(seed);
  std::vector<size_t> picked;
  for (const auto& quota : quotas) {
    auto& pool = by_class[quota.label];
    // partial Fisher-Yates: the first quota.base entries are the sample
    for (size_t i = 0; i < quota.base; ++i) {
      size_t j = i + rng.next_below(static_cast<uint32_t>(pool.size() - i));
      std::swap(pool[i], pool[j]);
      picked.push_back(pool[i]);
    }
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

namespace {

LabeledEmbeddingSet take_rows(const LabeledEmbeddingSet& data, std::span<const size_t> rows) {
  LabeledEmbeddingSet out;
  out.task = data.task;
  out.embeddings = Matrix::zeros(rows.size(), data.embeddings.cols);
  out.labels.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(data.embeddings.row(rows[i]), data.embeddings.cols, out.embeddings.row(i));
    out.labels.push_back(data.labels[rows[i]]);
  }
  return out;
}

uint64_t fraction_bits(double fraction) {
  uint64_t bits;
  static_assert(sizeof(bits) == sizeof(fraction));
  std::memcpy(&bits, &fraction, sizeof(bits));
  return bits;
}

}  // namespace

std::vector<SweepRecord> data_efficiency_sweep(const LabeledEmbeddingSet& data,
                                               std::span<const double> fractions, ProbeKind kind,
                                               std::span<const uint64_t> seeds,
                                               SweepOptions opts) {
  validate_labeled_set(data);
  if (fractions.empty() || seeds.empty()) {
    throw Error(ErrorCode::BadData, "sweep requires at least one fraction and one seed");
  }
  for (size_t i = 0; i + 1 < fractions.size(); ++i) {
    if (fractions[i] > fractions[i + 1]) {
      throw Error(ErrorCode::BadData, "fractions must be sorted ascending");
    }
  }

  // fixed stratified train/eval split, shared by every cell
  std::vector<size_t> eval_rows =
      stratified_subsample(data.labels, opts.eval_fraction, mix_seed(opts.split_seed, 0xe7a1));
  std::vector<char> in_eval(data.labels.size(), 0);
  for (size_t row : eval_rows) in_eval[row] = 1;
  std::vector<size_t> train_rows;
  for (size_t i = 0; i < data.labels.size(); ++i) {
    if (!in_eval[i]) train_rows.push_back(i);
  }
  LabeledEmbeddingSet train = take_rows(data, train_rows);
  LabeledEmbeddingSet eval = take_rows(data, eval_rows);

  struct Cell {
    double fraction;
    uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double fraction : fractions) {
    for (uint64_t seed : seeds) cells.push_back({fraction, seed});
  }

  std::vector<SweepRecord> records(cells.size());
  std::exception_ptr error;
  std::mutex error_mutex;
  parallel_for(cells.size(), 0, [&](size_t c) {
    try {
      const Cell& cell = cells[c];
      uint64_t cell_seed = mix_seed(cell.seed, fraction_bits(cell.fraction));
      std::vector<size_t> subsample =
          stratified_subsample(train.labels, cell.fraction, cell_seed);
      LabeledEmbeddingSet fit_set = take_rows(train, subsample);

      std::vector<double> scores(eval.labels.size());
      if (kind == ProbeKind::Linear) {
        LinearProbe probe = train_linear_probe(fit_set, {}, cell_seed);
        for (size_t i = 0; i < eval.labels.size(); ++i) {
          scores[i] = probe.score(eval.embeddings.row_span(i));
        }
      } else {
        MlpProbe probe = train_mlp_probe(fit_set, {}, cell_seed);
        for (size_t i = 0; i < eval.labels.size(); ++i) {
          scores[i] = probe.score(eval.embeddings.row_span(i));
        }
      }
      records[c] = {data.task, kind, cell.fraction, cell.seed, roc_auc(scores, eval.labels)};
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  });
  if (error) std::rethrow_exception(error);
  return records;
}

// ---------------------------------------------------------------------------
// k-means

namespace {

double squared_distance(const double* a, const double* b, size_t dim) {
  double sum = 0.0;
  for (size_t d = 0; d < dim; ++d) {
    double diff = a[d] - b[d];
    sum += diff * diff;
  }
  return sum;
}

// nearest centroid, ties to the lowest index; identical arithmetic on the
// serial and parallel paths
void assign_point(const Matrix& points, const Matrix& centroids, size_t i, uint32_t k,
                  uint32_t* assignment, double* best_d2) {
  const double* x = points.row(i);
  uint32_t best = 0;
  double best_val = squared_distance(x, centroids.row(0), points.cols);
  for (uint32_t c = 1; c < k; ++c) {
    double d2 = squared_distance(x, centroids.row(c), points.cols);
    if (d2 < best_val) {
      best_val = d2;
      best = c;
    }
  }
  assignment[i] = best;
  best_d2[i] = best_val;
}

}  // namespace

ClusterResult kmeans(const Matrix& points, uint32_t k, uint64_t seed, Execution exec,
                     int max_iters) {
  const size_t n = points.rows;
  const size_t dim = points.cols;
  if (k == 0 || n < k) {
    throw Error(ErrorCode::TooFewPoints,
                std::to_string(n) + " points cannot form " + std::to_string(k) + " clusters");
  }

  ClusterResult result;
  result.centroids = Matrix::zeros(k, dim);

  // k-means++ seeding
  Pcg32 rng(seed);
  std::vector<double> min_d2(n, 0.0);
  {
    size_t first = rng.next_below(static_cast<uint32_t>(n));
    std::copy_n(points.row(first), dim, result.centroids.row(0));
    for (size_t i = 0; i < n; ++i) {
      min_d2[i] = squared_distance(points.row(i), result.centroids.row(0), dim);
    }
    for (uint32_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (double d2 : min_d2) total += d2;
      size_t chosen;
      if (total <= 0.0) {
        chosen = rng.next_below(static_cast<uint32_t>(n));
      } else {
        double r = rng.next_double() * total;
        double acc = 0.0;
        chosen = n - 1;
        for (size_t i = 0; i < n; ++i) {
          acc += min_d2[i];
          if (acc >= r) {
            chosen = i;
            break;
          }
        }
      }
      std::copy_n(points.row(chosen), dim, result.centroids.row(c));
      for (size_t i = 0; i < n; ++i) {
        double d2 = squared_distance(points.row(i), result.centroids.row(c), dim);
        if (d2 < min_d2[i]) min_d2[i] = d2;
      }
    }
  }

  result.assignment.assign(n, 0);
  std::vector<uint32_t> previous(n, k);  // k = "unassigned"
  std::vector<double> best_d2(n, 0.0);
  std::vector<double> sums(static_cast<size_t>(k) * dim);
  std::vector<size_t> counts(k);

  for (int iter = 0; iter < max_iters; ++iter) {
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
      for (long i = 0; i < static_cast<long>(n); ++i) {
        assign_point(points, result.centroids, static_cast<size_t>(i), k,
                     result.assignment.data(), best_d2.data());
      }
    } else {
      for (size_t i = 0; i < n; ++i) {
        assign_point(points, result.centroids, i, k, result.assignment.data(), best_d2.data());
      }
    }

    double inertia = 0.0;
    for (size_t i = 0; i < n; ++i) inertia += best_d2[i];  // fixed order
    result.inertia_history.push_back(inertia);

    if (result.assignment == previous) break;
    previous = result.assignment;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (size_t i = 0; i < n; ++i) {
      uint32_t c = result.assignment[i];
      ++counts[c];
      const double* x = points.row(i);
      double* sum = sums.data() + static_cast<size_t>(c) * dim;
      for (size_t d = 0; d < dim; ++d) sum[d] += x[d];
    }
    for (uint32_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // relocate to the point farthest from its centroid
        size_t farthest = 0;
        for (size_t i = 1; i < n; ++i) {
          if (best_d2[i] > best_d2[farthest]) farthest = i;
        }
        std::copy_n(points.row(farthest), dim, result.centroids.row(c));
        best_d2[farthest] = 0.0;
        continue;
      }
      double inv = 1.0 / static_cast<double>(counts[c]);
      const double* sum = sums.data() + static_cast<size_t>(c) * dim;
      double* centroid = result.centroids.row(c);
      for (size_t d = 0; d < dim; ++d) centroid[d] = sum[d] * inv;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Overlay

OverlayResult cluster_overlay(const WsiMetadata& meta, const FrameIndex& index,
                              std::span<const uint8_t> container, const Encoder& encoder,
                              uint32_t k, uint64_t seed, uint32_t stride) {
  if (stride == 0) stride = 224;
  constexpr uint32_t kSide = ReferenceEncoder::kPatchSide;
  if (meta.total_rows < kSide || meta.total_cols < kSide) {
    throw Error(ErrorCode::TooFewPoints, "image smaller than one patch");
  }
  OverlayResult overlay;
  overlay.stride = stride;
  overlay.grid_rows = (meta.total_rows - kSide) / stride + 1;
  overlay.grid_cols = (meta.total_cols - kSide) / stride + 1;

  std::vector<Patch> patches;
  patches.reserve(static_cast<size_t>(overlay.grid_rows) * overlay.grid_cols);
  for (uint32_t gr = 0; gr < overlay.grid_rows; ++gr) {
    for (uint32_t gc = 0; gc < overlay.grid_cols; ++gc) {
      PatchSpec spec{gc * stride, gr * stride, kSide, kSide};
      overlay.patches.push_back(spec);
      patches.push_back(extract_patch(meta, index, container, spec));
    }
  }

  std::vector<EmbeddingVector> embeddings = embed_batch(encoder, patches);
  Matrix matrix = Matrix::zeros(embeddings.size(), encoder.spec().dim);
  for (size_t i = 0; i < embeddings.size(); ++i) {
    std::copy(embeddings[i].begin(), embeddings[i].end(), matrix.row(i));
  }
  overlay.clusters = kmeans(matrix, k, seed);
  return overlay;
}

namespace {

constexpr uint8_t kPalette[12][3] = {
    {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
    {245, 130, 48}, {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
    {210, 245, 60}, {250, 190, 212}, {0, 128, 128},  {220, 190, 255},
};

}  // namespace

Image overlay_image(const OverlayResult& overlay, uint32_t cell_px) {
  if (cell_px == 0) cell_px = 1;
  Image img = Image::blank(overlay.grid_rows * cell_px, overlay.grid_cols * cell_px);
  for (uint32_t gr = 0; gr < overlay.grid_rows; ++gr) {
    for (uint32_t gc = 0; gc < overlay.grid_cols; ++gc) {
      uint32_t cluster = overlay.clusters.assignment[gr * overlay.grid_cols + gc];
      const uint8_t* color = kPalette[cluster % 12];
      for (uint32_t r = 0; r < cell_px; ++r) {
        uint8_t* row = img.row_ptr(gr * cell_px + r) + static_cast<size_t>(gc) * cell_px * 3;
        for (uint32_t c = 0; c < cell_px; ++c) {
          row[c * 3 + 0] = color[0];
          row[c * 3 + 1] = color[1];
          row[c * 3 + 2] = color[2];
        }
      }
    }
  }
  return img;
}

std::string overlay_csv(const OverlayResult& overlay) {
  std::string out = "x,y,cluster\n";
  for (size_t i = 0; i < overlay.patches.size(); ++i) {
    out += std::to_string(overlay.patches[i].x) + "," + std::to_string(overlay.patches[i].y) +
           "," + std::to_string(overlay.clusters.assignment[i]) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string sweep_csv(std::span<const SweepRecord> records) {
  std::string out = "task,probe,fraction,seed,auc\n";
  char buf[256];
  for (const auto& record : records) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6g,%llu,%.6f\n", record.task.c_str(),
                  probe_kind_name(record.probe), record.fraction,
                  static_cast<unsigned long long>(record.seed), record.auc);
    out += buf;
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

EmbeddingTable load_embeddings_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::BadData, path + ": empty file");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "id") {
    throw Error(ErrorCode::BadData, path + ": expected header id,e0..eN");
  }
  const size_t dim = header.size() - 1;

  EmbeddingTable table;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != dim + 1) {
      throw Error(ErrorCode::BadData,
                  path + ": row with " + std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(dim + 1));
    }
    table.ids.push_back(fields[0]);
    for (size_t d = 0; d < dim; ++d) values.push_back(std::stod(fields[d + 1]));
  }
  table.values = Matrix{table.ids.size(), dim, std::move(values)};
  return table;
}

void save_embeddings_csv(const std::string& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  out << "id";
  for (size_t d = 0; d < table.values.cols; ++d) out << ",e" << d;
  out << "\n";
  char buf[32];
  for (size_t i = 0; i < table.ids.size(); ++i) {
    out << table.ids[i];
    const double* row = table.values.row(i);
    for (size_t d = 0; d < table.values.cols; ++d) {
      std::snprintf(buf, sizeof(buf), ",%.17g", row[d]);
      out << buf;
    }
    out << "\n";
  }
}

std::vector<std::pair<std::string, int>> load_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::BadData, path + ": empty file");
  auto header = split_csv_line(line);
  if (header.size() != 2 || header[0] != "id" || header[1] != "label") {
    throw Error(ErrorCode::BadData, path + ": expected header id,label");
  }
  std::vector<std::pair<std::string, int>> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 2) throw Error(ErrorCode::BadData, path + ": malformed label row");
    labels.emplace_back(fields[0], std::stoi(fields[1]));
  }
  return labels;
}

LabeledEmbeddingSet join_labeled_set(const EmbeddingTable& table,
                                     const std::vector<std::pair<std::string, int>>& labels,
                                     const std::string& task) {
  std::map<std::string, int> by_id(labels.begin(), labels.end());
  LabeledEmbeddingSet data;
  data.task = task;
  data.embeddings = table.values;
  data.labels.reserve(table.ids.size());
  for (const auto& id : table.ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::BadData, "no label for id '" + id + "'");
    }
    data.labels.push_back(it->second);
  }
  return data;
}

}  // namespace wes
