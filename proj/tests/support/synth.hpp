#pragma once

// Synthetic labeled embedding sets for probe tests.

#include <cstdint>

#include "wes/analytics.hpp"
#include "wes/pcg.hpp"

namespace synth {

// Two Gaussian blobs separated along every 8th dimension; linearly separable
// for separation values of a few sigma.
inline wes::LabeledEmbeddingSet blobs(size_t n_per_class, size_t dim, double separation,
                                      uint64_t seed) {
  wes::LabeledEmbeddingSet data;
  data.task = "blobs";
  data.embeddings = wes::Matrix::zeros(2 * n_per_class, dim);
  wes::Pcg32 rng(seed);
  for (size_t i = 0; i < 2 * n_per_class; ++i) {
    int label = i < n_per_class ? 0 : 1;
    double shift = label == 0 ? -separation / 2.0 : separation / 2.0;
    double* row = data.embeddings.row(i);
    for (size_t d = 0; d < dim; ++d) {
      row[d] = rng.next_gaussian() + (d % 8 == 0 ? shift : 0.0);
    }
    data.labels.push_back(label);
  }
  return data;
}

// XOR arrangement: class = sign(x0) XOR sign(x1); no linear separator.
inline wes::LabeledEmbeddingSet xor_clusters(size_t n_per_cluster, size_t dim, double scale,
                                             double noise, uint64_t seed) {
  wes::LabeledEmbeddingSet data;
  data.task = "xor";
  data.embeddings = wes::Matrix::zeros(4 * n_per_cluster, dim);
  wes::Pcg32 rng(seed);
  const double corners[4][2] = {{+1, +1}, {-1, -1}, {+1, -1}, {-1, +1}};
  for (size_t i = 0; i < 4 * n_per_cluster; ++i) {
    size_t corner = i / n_per_cluster;
    double* row = data.embeddings.row(i);
    row[0] = corners[corner][0] * scale + rng.next_gaussian() * noise;
    row[1] = corners[corner][1] * scale + rng.next_gaussian() * noise;
    for (size_t d = 2; d < dim; ++d) row[d] = rng.next_gaussian() * noise;
    data.labels.push_back(corner < 2 ? 0 : 1);
  }
  return data;
}

// Labels drawn independently of the embeddings.
inline wes::LabeledEmbeddingSet random_labels(size_t n, size_t dim, uint64_t seed) {
  wes::LabeledEmbeddingSet data;
  data.task = "null";
  data.embeddings = wes::Matrix::zeros(n, dim);
  wes::Pcg32 rng(seed);
  for (auto& v : data.embeddings.data) v = rng.next_gaussian();
  for (size_t i = 0; i < n; ++i) data.labels.push_back(static_cast<int>(rng.next() & 1));
  // guarantee both classes
  data.labels[0] = 0;
  data.labels[1] = 1;
  return data;
}

}  // namespace synth
