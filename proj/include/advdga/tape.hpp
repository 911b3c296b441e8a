#pragma once

#include <functional>
#include <span>
#include <unordered_set>
#include <vector>

#include "advdga/tensor.hpp"

namespace advdga {

// Reverse-mode gradient tape.  Operations record a backward closure; the
// backward pass replays closures in exact reverse order of recording.
// Gradients are only propagated into tensors whose needs_grad flag is set
// (directly or transitively), so attack loops that differentiate w.r.t. the
// input skip all weight-gradient work.
//
// A Tape is single-threaded.  Distinct tapes over shared immutable
// parameter tensors may run concurrently.
class Tape {
 public:
  // Creates a fresh leaf tensor owned by this tape.
  TensorPtr leaf(std::vector<int> shape, bool needs_grad = false);
  // Registers an existing tensor (e.g. a model parameter) on this tape.
  TensorPtr watch(TensorPtr t);

  // out = a @ b for a: [M,K], b: [K,N].
  TensorPtr matmul(TensorPtr a, TensorPtr b);
  // Same-padding 1-D convolution over channels-last input.
  // x: [B,L,Cin], w: [K,Cin,Cout] (K odd), bias: [Cout] or nullptr.
  TensorPtr conv1d(TensorPtr x, TensorPtr w, TensorPtr bias);
  TensorPtr add(TensorPtr a, TensorPtr b);
  // x: [R,C] plus a per-column bias b: [C] (the only broadcast supported).
  TensorPtr bias_add(TensorPtr x, TensorPtr b);
  TensorPtr relu(TensorPtr x);
  // x: [B,L,C] -> [B,C]; gradient routed to the first maximal position.
  TensorPtr global_max_pool(TensorPtr x);
  TensorPtr sigmoid(TensorPtr x);
  // table: [V,d]; ids are flattened [B*L] row indices; out: [B,L,d].
  TensorPtr embedding_lookup(TensorPtr table, std::span<const int> ids, int batch, int len);
  // Fused sigmoid + binary cross-entropy, mean over the batch, numerically
  // stable for large |logit|.  logits: [B] or [B,1]; targets: length B.
  TensorPtr bce_loss(TensorPtr logits, std::span<const float> targets);
  TensorPtr sum(TensorPtr x);

  // Runs the backward pass from a scalar loss (gradients zeroed first).
  void backward(const TensorPtr& loss);
  // backward() + copy of target's gradient; reuses a previous backward pass
  // from the same loss.
  Tensor grad_wrt(const TensorPtr& loss, const TensorPtr& target);

 private:
  TensorPtr result(std::vector<int> shape, bool needs_grad);
  void check_on_tape(const TensorPtr& t) const;

  std::vector<std::function<void()>> nodes_;
  std::vector<TensorPtr> tensors_;
  std::unordered_set<const Tensor*> known_;
  const Tensor* backward_root_ = nullptr;
};

}  // namespace advdga
