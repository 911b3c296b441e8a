#pragma once

#include <span>
#include <vector>

#include "advdga/model.hpp"
#include "advdga/tensor.hpp"

namespace advdga {

// Differentiable scoring surface used by every embedding-space and
// gradient-guided discrete attack: a batch of embedding matrices in, one
// logit per sample out, plus per-sample input gradients dz/dv.  Attack
// losses are scalar functions of z, so their gradients are recovered via
// the chain rule from dz/dv; this keeps the attacks independent of the
// concrete model (tests substitute cheap linear scorers).
class EmbeddingScorer {
 public:
  virtual ~EmbeddingScorer() = default;

  virtual int embed_dim() const = 0;
  virtual int seq_len() const = 0;
  // Raw embedding rows, [vocab, embed_dim]; row order = alphabet order.
  virtual const Tensor& embedding_rows() const = 0;

  // v: [B, seq_len, embed_dim] -> one logit per sample.
  virtual std::vector<float> logits(const Tensor& v) const = 0;
  // Also fills grads ([B, seq_len, embed_dim]) with dz_b/dv_b per sample.
  virtual std::vector<float> logits_and_grad(const Tensor& v, Tensor& grads) const = 0;

  // Embeds encoded domains with this scorer's embedding rows.
  Tensor embed_batch(std::span<const EncodedDomain> batch) const;
  std::vector<float> logits_for(std::span<const EncodedDomain> batch) const;
};

class ModelScorer final : public EmbeddingScorer {
 public:
  explicit ModelScorer(const Model& m) : model_(m) {}

  int embed_dim() const override { return model_.meta.embed_dim; }
  int seq_len() const override { return model_.meta.seq_len; }
  const Tensor& embedding_rows() const override { return *model_.W; }
  std::vector<float> logits(const Tensor& v) const override;
  std::vector<float> logits_and_grad(const Tensor& v, Tensor& grads) const override;

  const Model& model() const { return model_; }

 private:
  const Model& model_;
};

}  // namespace advdga
