#include "advdga/model.hpp"

#include <cmath>

#include "advdga/errors.hpp"
#include "advdga/rng.hpp"

namespace advdga {
namespace {

void fill_normal(Tensor& t, Rng& rng, float scale) {
  for (float& x : t.v) x = static_cast<float>(rng.normal()) * scale;
}

constexpr int kInferenceChunk = 1024;

}  // namespace

Model Model::init(const ArchMeta& meta, std::uint64_t seed) {
  if (meta.vocab <= 0 || meta.embed_dim != meta.channels) {
    throw InvalidConfig("arch: vocab must be positive and embed_dim == channels");
  }
  Rng rng(seed);
  Model m;
  m.meta = meta;
  m.W = make_tensor({meta.vocab, meta.embed_dim});
  fill_normal(*m.W, rng, 1.f);
  // He initialization for the conv stacks, fan-in = kernel * channels.
  float conv_scale = std::sqrt(2.f / static_cast<float>(meta.kernel * meta.channels));
  for (int b = 0; b < meta.blocks; ++b) {
    Block blk;
    blk.w1 = make_tensor({meta.kernel, meta.channels, meta.channels});
    blk.b1 = make_tensor({meta.channels});
    blk.w2 = make_tensor({meta.kernel, meta.channels, meta.channels});
    blk.b2 = make_tensor({meta.channels});
    fill_normal(*blk.w1, rng, conv_scale);
    fill_normal(*blk.w2, rng, conv_scale);
    m.blocks.push_back(std::move(blk));
  }
  m.head_w = make_tensor({meta.channels, 1});
  m.head_b = make_tensor({1});
  fill_normal(*m.head_w, rng, std::sqrt(1.f / static_cast<float>(meta.channels)));
  return m;
}

Model Model::clone() const {
  Model c;
  c.meta = meta;
  auto copy = [](const TensorPtr& t) {
    auto out = make_tensor(t->shape);
    out->v = t->v;
    return out;
  };
  c.W = copy(W);
  for (const Block& b : blocks) {
    c.blocks.push_back({copy(b.w1), copy(b.b1), copy(b.w2), copy(b.b2)});
  }
  c.head_w = copy(head_w);
  c.head_b = copy(head_b);
  return c;
}

std::vector<TensorPtr> Model::parameters() const {
  std::vector<TensorPtr> ps{W};
  for (const Block& b : blocks) {
    ps.push_back(b.w1);
    ps.push_back(b.b1);
    ps.push_back(b.w2);
    ps.push_back(b.b2);
  }
  ps.push_back(head_w);
  ps.push_back(head_b);
  return ps;
}

void Model::set_parameter_grads(bool on) const {
  for (const TensorPtr& p : parameters()) p->set_needs_grad(on);
}

TensorPtr model_logits(Tape& tape, const Model& m, TensorPtr v) {
  if (v->rank() != 3 || v->dim(1) != m.meta.seq_len || v->dim(2) != m.meta.embed_dim) {
    throw ShapeMismatch("model input must be [B, seq_len, embed_dim]");
  }
  TensorPtr h = std::move(v);
  for (const Model::Block& blk : m.blocks) {
    TensorPtr w1 = tape.watch(blk.w1), b1 = tape.watch(blk.b1);
    TensorPtr w2 = tape.watch(blk.w2), b2 = tape.watch(blk.b2);
    TensorPtr t = tape.relu(tape.conv1d(h, w1, b1));
    t = tape.conv1d(t, w2, b2);
    h = tape.relu(tape.add(t, h));
  }
  TensorPtr pooled = tape.global_max_pool(h);
  return tape.bias_add(tape.matmul(pooled, tape.watch(m.head_w)),
                       tape.watch(m.head_b));
}

TensorPtr model_embed(Tape& tape, const Model& m, std::span<const EncodedDomain> batch) {
  std::vector<int> ids;
  ids.reserve(batch.size() * static_cast<std::size_t>(m.meta.seq_len));
  for (const EncodedDomain& e : batch) {
    for (int i = 0; i < m.meta.seq_len; ++i) ids.push_back(e.indices[static_cast<std::size_t>(i)]);
  }
  return tape.embedding_lookup(tape.watch(m.W), ids,
                               static_cast<int>(batch.size()), m.meta.seq_len);
}

EmbeddedDomain embed(const Model& m, const EncodedDomain& e) {
  EmbeddedDomain out;
  out.origin = e;
  out.matrix = Tensor({m.meta.seq_len, m.meta.embed_dim});
  const int d = m.meta.embed_dim;
  for (int i = 0; i < m.meta.seq_len; ++i) {
    const float* row = m.W->v.data() + static_cast<std::size_t>(e.indices[static_cast<std::size_t>(i)]) * d;
    std::copy_n(row, d, out.matrix.v.data() + static_cast<std::size_t>(i) * d);
  }
  return out;
}

float forward(const Model& m, const EmbeddedDomain& v) {
  Tensor batched({1, m.meta.seq_len, m.meta.embed_dim});
  batched.v = v.matrix.v;
  return logits_for_embeddings(m, batched)[0];
}

std::vector<float> logits_for_embeddings(const Model& m, const Tensor& v) {
  if (v.rank() != 3) throw ShapeMismatch("expected [B, seq_len, embed_dim]");
  const int B = v.dim(0);
  const std::size_t stride =
      static_cast<std::size_t>(m.meta.seq_len) * m.meta.embed_dim;
  std::vector<float> out(static_cast<std::size_t>(B));
  for (int start = 0; start < B; start += kInferenceChunk) {
    int count = std::min(kInferenceChunk, B - start);
    Tape tape;
    TensorPtr x = tape.leaf({count, m.meta.seq_len, m.meta.embed_dim});
    std::copy_n(v.v.data() + static_cast<std::size_t>(start) * stride,
                static_cast<std::size_t>(count) * stride, x->v.data());
    TensorPtr z = model_logits(tape, m, x);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(start + i)] = z->v[static_cast<std::size_t>(i)];
  }
  return out;
}

std::vector<float> logits_for_domains(const Model& m, std::span<const EncodedDomain> batch) {
  std::vector<float> out(batch.size());
  for (std::size_t start = 0; start < batch.size(); start += kInferenceChunk) {
    std::size_t count = std::min<std::size_t>(kInferenceChunk, batch.size() - start);
    Tape tape;
    TensorPtr v = model_embed(tape, m, batch.subspan(start, count));
    TensorPtr z = model_logits(tape, m, v);
    for (std::size_t i = 0; i < count; ++i) out[start + i] = z->v[i];
  }
  return out;
}

}  // namespace advdga
