#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "advdga/domain.hpp"
#include "advdga/tape.hpp"
#include "advdga/tensor.hpp"

namespace advdga {

struct ArchMeta {
  int vocab = 0;       // = |Σ|, embedding row count
  int embed_dim = 128;
  int seq_len = kMaxDomainLength;
  int channels = 128;  // = embed_dim so the identity skip type-checks
  int blocks = 2;
  int kernel = 3;
};

// Adversarial embedding matrix for one domain: row i is the embedding of
// position i (the i-th column of the mathematical d×n matrix).
struct EmbeddedDomain {
  Tensor matrix;  // [seq_len, embed_dim]
  EncodedDomain origin;
};

// Residual classifier: embedding -> 2 x [conv1d k=3 -> relu -> conv1d k=3,
// identity skip, relu] -> global max pool -> dense(channels -> 1).
// The single output logit is the malicious score; predicted-malicious iff
// sigmoid(z) >= 0.5, i.e. z >= 0 (ties count as malicious).
struct Model {
  ArchMeta meta;
  TensorPtr W;  // [vocab, embed_dim]
  struct Block {
    TensorPtr w1, b1, w2, b2;
  };
  std::vector<Block> blocks;
  TensorPtr head_w;  // [channels, 1]
  TensorPtr head_b;  // [1]

  static Model init(const ArchMeta& meta, std::uint64_t seed);
  Model clone() const;

  // Stable parameter order: W, block weights in order, head.
  std::vector<TensorPtr> parameters() const;
  void set_parameter_grads(bool on) const;
};

// Graph builders (shared by training, attacks and inference).
// v: [B, seq_len, embed_dim] -> logits [B, 1].
TensorPtr model_logits(Tape& tape, const Model& m, TensorPtr v);
// Looks up embeddings for a batch of encoded domains -> [B, seq_len, d].
TensorPtr model_embed(Tape& tape, const Model& m, std::span<const EncodedDomain> batch);

// Column i of the result = W row of indices[i] (pad rows included).
EmbeddedDomain embed(const Model& m, const EncodedDomain& e);
// Single-sample logit.
float forward(const Model& m, const EmbeddedDomain& v);

// Batched inference helpers (chunked internally to bound memory).
std::vector<float> logits_for_embeddings(const Model& m, const Tensor& v);
std::vector<float> logits_for_domains(const Model& m, std::span<const EncodedDomain> batch);

}  // namespace advdga
