#include "linear_scorer.hpp"

#include "advdga/alphabet.hpp"
#include "advdga/errors.hpp"
#include "advdga/rng.hpp"

namespace advdga::testing {

LinearScorer::LinearScorer(int seq_len, int embed_dim, std::uint64_t seed)
    : seq_len_(seq_len),
      embed_dim_(embed_dim),
      rows_({Alphabet::standard().size(), embed_dim}),
      a_({seq_len, embed_dim}) {
  Rng rng(seed);
  for (float& x : rows_.v) x = static_cast<float>(rng.normal());
  for (float& x : a_.v) x = static_cast<float>(rng.normal());
  bias_ = static_cast<float>(rng.normal());
}

std::vector<float> LinearScorer::logits(const Tensor& v) const {
  if (v.rank() != 3 || v.dim(1) != seq_len_ || v.dim(2) != embed_dim_) {
    throw ShapeMismatch("LinearScorer expects [B, seq_len, embed_dim]");
  }
  const int B = v.dim(0);
  const std::size_t n = a_.v.size();
  std::vector<float> out(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    const float* vb = v.v.data() + static_cast<std::size_t>(b) * n;
    double acc = bias_;
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a_.v[i]) * vb[i];
    out[static_cast<std::size_t>(b)] = static_cast<float>(acc);
  }
  return out;
}

std::vector<float> LinearScorer::logits_and_grad(const Tensor& v, Tensor& grads) const {
  std::vector<float> z = logits(v);
  grads = Tensor({v.dim(0), seq_len_, embed_dim_});
  const std::size_t n = a_.v.size();
  for (int b = 0; b < v.dim(0); ++b) {
    std::copy(a_.v.begin(), a_.v.end(),
              grads.v.begin() + static_cast<std::size_t>(b) * n);
  }
  return z;
}

float LinearScorer::logit_of(const EncodedDomain& e) const {
  double acc = bias_;
  for (int i = 0; i < seq_len_; ++i) {
    const float* row = rows_.v.data() +
                       static_cast<std::size_t>(e.indices[static_cast<std::size_t>(i)]) * embed_dim_;
    const float* ai = a_.v.data() + static_cast<std::size_t>(i) * embed_dim_;
    for (int j = 0; j < embed_dim_; ++j) acc += static_cast<double>(ai[j]) * row[j];
  }
  return static_cast<float>(acc);
}

}  // namespace advdga::testing
