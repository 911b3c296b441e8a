#include "advdga/scorer.hpp"

#include <algorithm>

#include "advdga/errors.hpp"
#include "advdga/tape.hpp"

namespace advdga {
namespace {
constexpr int kChunk = 1024;
}

Tensor EmbeddingScorer::embed_batch(std::span<const EncodedDomain> batch) const {
  const int n = seq_len(), d = embed_dim();
  const Tensor& rows = embedding_rows();
  Tensor out({static_cast<int>(batch.size()), n, d});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    float* dst = out.v.data() + b * static_cast<std::size_t>(n) * d;
    for (int i = 0; i < n; ++i) {
      const float* src =
          rows.v.data() + static_cast<std::size_t>(batch[b].indices[static_cast<std::size_t>(i)]) * d;
      std::copy_n(src, d, dst + static_cast<std::size_t>(i) * d);
    }
  }
  return out;
}

std::vector<float> EmbeddingScorer::logits_for(std::span<const EncodedDomain> batch) const {
  return logits(embed_batch(batch));
}

std::vector<float> ModelScorer::logits(const Tensor& v) const {
  return logits_for_embeddings(model_, v);
}

std::vector<float> ModelScorer::logits_and_grad(const Tensor& v, Tensor& grads) const {
  if (v.rank() != 3) throw ShapeMismatch("expected [B, seq_len, embed_dim]");
  const int B = v.dim(0);
  const std::size_t stride =
      static_cast<std::size_t>(model_.meta.seq_len) * model_.meta.embed_dim;
  if (!grads.same_shape(v)) grads = Tensor(v.shape);
  std::vector<float> out(static_cast<std::size_t>(B));
  for (int start = 0; start < B; start += kChunk) {
    int count = std::min(kChunk, B - start);
    Tape tape;
    TensorPtr x = tape.leaf({count, model_.meta.seq_len, model_.meta.embed_dim},
                            /*needs_grad=*/true);
    std::copy_n(v.v.data() + static_cast<std::size_t>(start) * stride,
                static_cast<std::size_t>(count) * stride, x->v.data());
    TensorPtr z = model_logits(tape, model_, x);
    // Samples are independent, so d(sum z)/dx stacks the per-sample dz/dv.
    TensorPtr total = tape.sum(z);
    tape.backward(total);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(start + i)] = z->v[static_cast<std::size_t>(i)];
    std::copy_n(x->g.data(), static_cast<std::size_t>(count) * stride,
                grads.v.data() + static_cast<std::size_t>(start) * stride);
  }
  return out;
}

}  // namespace advdga
