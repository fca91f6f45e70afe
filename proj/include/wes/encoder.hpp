#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wes/image.hpp"
#include "wes/parallel.hpp"

namespace wes {

using EmbeddingVector = std::vector<double>;

struct EncoderSpec {
  std::string name = "reference-v1";
  uint32_t dim = 384;
  uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

// Maps a 224x224 RGB8 patch to a unit-norm embedding. Implementations must be
// immutable after construction so one instance can serve many threads.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual const EncoderSpec& spec() const = 0;
  virtual EmbeddingVector embed(const Patch& patch) const = 0;
};

// Deterministic stand-in for a learned patch encoder. Pipeline: 14x14 box
// sums down to a 16x16x3 grid, a seeded {-1,0,+1} sparse sign projection to
// `dim` values, then L2 normalization. Everything before the final
// normalization is integer arithmetic, so identical pixels give bitwise
// identical vectors on any platform. An all-black patch projects to zero and
// falls back to the seeded tie-break direction.
class ReferenceEncoder final : public Encoder {
 public:
  explicit ReferenceEncoder(EncoderSpec spec);

  const EncoderSpec& spec() const override { return spec_; }
  EmbeddingVector embed(const Patch& patch) const override;

  static constexpr uint32_t kPatchSide = 224;
  static constexpr uint32_t kGridSide = 16;
  static constexpr uint32_t kInputDim = kGridSide * kGridSide * 3;  // 768

 private:
  EncoderSpec spec_;
  std::vector<int8_t> projection_;  // kInputDim x dim, row-major
  std::vector<int8_t> tie_break_;   // dim
};

std::shared_ptr<const Encoder> make_encoder(const EncoderSpec& spec);

// Element i equals encoder.embed(patches[i]); order preserved. Patches are
// independent, so the parallel path is bitwise identical to the serial one.
std::vector<EmbeddingVector> embed_batch(const Encoder& encoder, std::span<const Patch> patches,
                                         Execution exec = Execution::Parallel);

double l2_norm(std::span<const double> v);

}  // namespace wes
