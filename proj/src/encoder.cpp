#include "wes/encoder.hpp"

#include <cmath>
#include <exception>

#include <omp.h>

#include "wes/error.hpp"
#include "wes/pcg.hpp"

namespace wes {

namespace {

// -1 with p=1/6, 0 with p=2/3, +1 with p=1/6 (sparse sign projection).
int8_t sign_draw(Pcg32& rng) {
  uint32_t r = rng.next_below(6);
  if (r == 0) return -1;
  if (r == 5) return 1;
  return 0;
}

void check_patch_shape(const Patch& patch, size_t index_in_batch, bool batched) {
  const uint32_t side = ReferenceEncoder::kPatchSide;
  if (patch.spec.width != side || patch.spec.height != side ||
      patch.pixels.size() != static_cast<size_t>(side) * side * 3) {
    std::string prefix = batched ? "patch " + std::to_string(index_in_batch) + ": " : "";
    throw Error(ErrorCode::BadPatchShape,
                prefix + "expected " + std::to_string(side) + "x" + std::to_string(side) +
                    " RGB8, got " + std::to_string(patch.spec.width) + "x" +
                    std::to_string(patch.spec.height) + " (" +
                    std::to_string(patch.pixels.size()) + " bytes)");
  }
}

}  // namespace

ReferenceEncoder::ReferenceEncoder(EncoderSpec spec) : spec_(std::move(spec)) {
  if (spec_.dim == 0) {
    throw Error(ErrorCode::BadData, "encoder dim must be >= 1");
  }
  Pcg32 rng(spec_.seed);
  projection_.resize(static_cast<size_t>(kInputDim) * spec_.dim);
  for (auto& v : projection_) v = sign_draw(rng);
  tie_break_.resize(spec_.dim);
  for (auto& v : tie_break_) v = sign_draw(rng);
  bool any = false;
  for (int8_t v : tie_break_) any |= (v != 0);
  if (!any) tie_break_[0] = 1;
}

EmbeddingVector ReferenceEncoder::embed(const Patch& patch) const {
  check_patch_shape(patch, 0, false);

  // integer box sums over 14x14 blocks, channel-interleaved 16x16x3
  constexpr uint32_t kBlock = kPatchSide / kGridSide;  // 14
  int32_t sums[kInputDim] = {0};
  for (uint32_t r = 0; r < kPatchSide; ++r) {
    const uint8_t* row = patch.pixels.data() + static_cast<size_t>(r) * kPatchSide * 3;
    uint32_t gr = r / kBlock;
    for (uint32_t c = 0; c < kPatchSide; ++c) {
      uint32_t gc = c / kBlock;
      int32_t* cell = sums + (gr * kGridSide + gc) * 3;
      cell[0] += row[c * 3 + 0];
      cell[1] += row[c * 3 + 1];
      cell[2] += row[c * 3 + 2];
    }
  }

  const uint32_t dim = spec_.dim;
  std::vector<int64_t> acc(dim, 0);
  for (uint32_t j = 0; j < kInputDim; ++j) {
    int32_t s = sums[j];
    if (s == 0) continue;
    const int8_t* row = projection_.data() + static_cast<size_t>(j) * dim;
    for (uint32_t d = 0; d < dim; ++d) acc[d] += static_cast<int64_t>(row[d]) * s;
  }

  bool zero = true;
  for (int64_t v : acc) zero &= (v == 0);
  if (zero) {
    for (uint32_t d = 0; d < dim; ++d) acc[d] = tie_break_[d];
  }

  int64_t norm_sq = 0;
  for (int64_t v : acc) norm_sq += v * v;
  double norm = std::sqrt(static_cast<double>(norm_sq));

  EmbeddingVector out(dim);
  for (uint32_t d = 0; d < dim; ++d) out[d] = static_cast<double>(acc[d]) / norm;
  return out;
}

std::shared_ptr<const Encoder> make_encoder(const EncoderSpec& spec) {
  if (spec.name != "reference-v1") {
    throw Error(ErrorCode::BadData, "unknown encoder '" + spec.name + "'");
  }
  return std::make_shared<ReferenceEncoder>(spec);
}

std::vector<EmbeddingVector> embed_batch(const Encoder& encoder, std::span<const Patch> patches,
                                         Execution exec) {
  // validate up front so the reported index is the lowest offender
  for (size_t i = 0; i < patches.size(); ++i) check_patch_shape(patches[i], i, true);

  std::vector<EmbeddingVector> out(patches.size());
  if (exec == Execution::Serial) {
    for (size_t i = 0; i < patches.size(); ++i) out[i] = encoder.embed(patches[i]);
    return out;
  }
  // exceptions may not cross the omp region boundary
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 8)
  for (long i = 0; i < static_cast<long>(patches.size()); ++i) {
    try {
      out[static_cast<size_t>(i)] = encoder.embed(patches[static_cast<size_t>(i)]);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace wes
