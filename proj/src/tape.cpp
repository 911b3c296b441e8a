#include "advdga/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "advdga/errors.hpp"
#include "advdga/gemm.hpp"

namespace advdga {
namespace {

float stable_sigmoid(float z) {
  if (z >= 0.f) {
    float e = std::exp(-z);
    return 1.f / (1.f + e);
  }
  float e = std::exp(z);
  return e / (1.f + e);
}

void require(bool cond, const char* msg) {
  if (!cond) throw ShapeMismatch(msg);
}

}  // namespace

TensorPtr Tape::leaf(std::vector<int> shape, bool needs_grad) {
  TensorPtr t = make_tensor(std::move(shape));
  t->set_needs_grad(needs_grad);
  return watch(std::move(t));
}

TensorPtr Tape::watch(TensorPtr t) {
  known_.insert(t.get());
  tensors_.push_back(t);
  return std::move(t);
}

TensorPtr Tape::result(std::vector<int> shape, bool needs_grad) {
  TensorPtr out = make_tensor(std::move(shape));
  out->set_needs_grad(needs_grad);
  known_.insert(out.get());
  tensors_.push_back(out);
  return out;
}

void Tape::check_on_tape(const TensorPtr& t) const {
  if (!known_.count(t.get())) throw NotOnTape();
}

TensorPtr Tape::matmul(TensorPtr a, TensorPtr b) {
  check_on_tape(a);
  check_on_tape(b);
  require(a->rank() == 2 && b->rank() == 2, "matmul expects rank-2 operands");
  require(a->dim(1) == b->dim(0), "matmul inner dimensions differ");
  const int m = a->dim(0), k = a->dim(1), n = b->dim(1);
  TensorPtr out = result({m, n}, a->needs_grad || b->needs_grad);
  sgemm(false, false, m, n, k, 1.f, a->v.data(), k, b->v.data(), n, 0.f,
        out->v.data(), n);
  if (out->needs_grad) {
    nodes_.push_back([a, b, out, m, n, k] {
      if (a->needs_grad) {
        sgemm(false, true, m, k, n, 1.f, out->g.data(), n, b->v.data(), n, 1.f,
              a->g.data(), k);
      }
      if (b->needs_grad) {
        sgemm(true, false, k, n, m, 1.f, a->v.data(), k, out->g.data(), n, 1.f,
              b->g.data(), n);
      }
    });
  }
  return out;
}

TensorPtr Tape::conv1d(TensorPtr x, TensorPtr w, TensorPtr bias) {
  check_on_tape(x);
  check_on_tape(w);
  if (bias) check_on_tape(bias);
  require(x->rank() == 3, "conv1d input must be [B,L,C]");
  require(w->rank() == 3, "conv1d weight must be [K,Cin,Cout]");
  const int B = x->dim(0), L = x->dim(1), cin = x->dim(2);
  const int K = w->dim(0), cout = w->dim(2);
  require(w->dim(1) == cin, "conv1d channel mismatch");
  require(K % 2 == 1, "conv1d kernel must be odd for same padding");
  if (bias) require(bias->rank() == 1 && bias->dim(0) == cout, "conv1d bias shape");
  const int pad = (K - 1) / 2;
  const int rows = B * L;
  const int kc = K * cin;

  // im2col: row (b,l) holds the K receptive-field columns, zero outside.
  auto cols = std::make_shared<std::vector<float>>(
      static_cast<std::size_t>(rows) * kc, 0.f);
  for (int b = 0; b < B; ++b) {
    const float* xb = x->v.data() + static_cast<std::size_t>(b) * L * cin;
    float* cb = cols->data() + static_cast<std::size_t>(b) * L * kc;
    for (int t = 0; t < K; ++t) {
      const int off = t - pad;
      const int lo = std::max(0, -off), hi = std::min(L, L - off);
      for (int l = lo; l < hi; ++l) {
        std::copy_n(xb + static_cast<std::size_t>(l + off) * cin, cin,
                    cb + static_cast<std::size_t>(l) * kc + t * cin);
      }
    }
  }

  bool track = x->needs_grad || w->needs_grad || (bias && bias->needs_grad);
  TensorPtr out = result({B, L, cout}, track);
  // w's [K,Cin,Cout] layout is already the [K*Cin, Cout] matrix.
  sgemm(false, false, rows, cout, kc, 1.f, cols->data(), kc, w->v.data(), cout,
        0.f, out->v.data(), cout);
  if (bias) {
    for (int r = 0; r < rows; ++r) {
      float* orow = out->v.data() + static_cast<std::size_t>(r) * cout;
      for (int c = 0; c < cout; ++c) orow[c] += bias->v[static_cast<std::size_t>(c)];
    }
  }

  if (track) {
    // The weight gradient needs the im2col buffer; the data gradient only
    // needs w, so drop the buffer early when no parameter wants gradients.
    if (!w->needs_grad) cols.reset();
    nodes_.push_back([x, w, bias, out, cols, B, L, cin, cout, K, pad, rows, kc] {
      if (bias && bias->needs_grad) {
        for (int r = 0; r < rows; ++r) {
          const float* grow = out->g.data() + static_cast<std::size_t>(r) * cout;
          for (int c = 0; c < cout; ++c) bias->g[static_cast<std::size_t>(c)] += grow[c];
        }
      }
      if (w->needs_grad) {
        sgemm(true, false, kc, cout, rows, 1.f, cols->data(), kc, out->g.data(),
              cout, 1.f, w->g.data(), cout);
      }
      if (x->needs_grad) {
        std::vector<float> dcols(static_cast<std::size_t>(rows) * kc);
        sgemm(false, true, rows, kc, cout, 1.f, out->g.data(), cout,
              w->v.data(), cout, 0.f, dcols.data(), kc);
        for (int b = 0; b < B; ++b) {
          float* gxb = x->g.data() + static_cast<std::size_t>(b) * L * cin;
          const float* cb = dcols.data() + static_cast<std::size_t>(b) * L * kc;
          for (int t = 0; t < K; ++t) {
            const int off = t - pad;
            const int lo = std::max(0, -off), hi = std::min(L, L - off);
            for (int l = lo; l < hi; ++l) {
              const float* src = cb + static_cast<std::size_t>(l) * kc + t * cin;
              float* dst = gxb + static_cast<std::size_t>(l + off) * cin;
              for (int c = 0; c < cin; ++c) dst[c] += src[c];
            }
          }
        }
      }
    });
  }
  return out;
}

TensorPtr Tape::add(TensorPtr a, TensorPtr b) {
  check_on_tape(a);
  check_on_tape(b);
  require(a->same_shape(*b), "add shape mismatch");
  TensorPtr out = result(a->shape, a->needs_grad || b->needs_grad);
  for (std::size_t i = 0; i < out->v.size(); ++i) out->v[i] = a->v[i] + b->v[i];
  if (out->needs_grad) {
    nodes_.push_back([a, b, out] {
      if (a->needs_grad)
        for (std::size_t i = 0; i < a->g.size(); ++i) a->g[i] += out->g[i];
      if (b->needs_grad)
        for (std::size_t i = 0; i < b->g.size(); ++i) b->g[i] += out->g[i];
    });
  }
  return out;
}

TensorPtr Tape::bias_add(TensorPtr x, TensorPtr b) {
  check_on_tape(x);
  check_on_tape(b);
  require(x->rank() == 2 && b->rank() == 1 && x->dim(1) == b->dim(0),
          "bias_add expects [R,C] plus [C]");
  const int r = x->dim(0), c = x->dim(1);
  TensorPtr out = result(x->shape, x->needs_grad || b->needs_grad);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out->v[static_cast<std::size_t>(i) * c + j] =
          x->v[static_cast<std::size_t>(i) * c + j] + b->v[static_cast<std::size_t>(j)];
  if (out->needs_grad) {
    nodes_.push_back([x, b, out, r, c] {
      if (x->needs_grad)
        for (std::size_t i = 0; i < x->g.size(); ++i) x->g[i] += out->g[i];
      if (b->needs_grad)
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j)
            b->g[static_cast<std::size_t>(j)] += out->g[static_cast<std::size_t>(i) * c + j];
    });
  }
  return out;
}

TensorPtr Tape::relu(TensorPtr x) {
  check_on_tape(x);
  TensorPtr out = result(x->shape, x->needs_grad);
  for (std::size_t i = 0; i < out->v.size(); ++i)
    out->v[i] = x->v[i] > 0.f ? x->v[i] : 0.f;
  if (out->needs_grad) {
    // Subgradient 0 at exactly x = 0.
    nodes_.push_back([x, out] {
      for (std::size_t i = 0; i < x->g.size(); ++i)
        if (x->v[i] > 0.f) x->g[i] += out->g[i];
    });
  }
  return out;
}

TensorPtr Tape::global_max_pool(TensorPtr x) {
  check_on_tape(x);
  require(x->rank() == 3, "global_max_pool input must be [B,L,C]");
  const int B = x->dim(0), L = x->dim(1), C = x->dim(2);
  TensorPtr out = result({B, C}, x->needs_grad);
  auto argmax = std::make_shared<std::vector<int>>(static_cast<std::size_t>(B) * C);
  for (int b = 0; b < B; ++b) {
    const float* xb = x->v.data() + static_cast<std::size_t>(b) * L * C;
    for (int c = 0; c < C; ++c) {
      float best = xb[c];
      int arg = 0;
      for (int l = 1; l < L; ++l) {
        float val = xb[static_cast<std::size_t>(l) * C + c];
        if (val > best) {
          best = val;
          arg = l;
        }
      }
      out->v[static_cast<std::size_t>(b) * C + c] = best;
      (*argmax)[static_cast<std::size_t>(b) * C + c] = arg;
    }
  }
  if (out->needs_grad) {
    nodes_.push_back([x, out, argmax, B, L, C] {
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          int l = (*argmax)[static_cast<std::size_t>(b) * C + c];
          x->g[(static_cast<std::size_t>(b) * L + l) * C + c] +=
              out->g[static_cast<std::size_t>(b) * C + c];
        }
    });
  }
  return out;
}

TensorPtr Tape::sigmoid(TensorPtr x) {
  check_on_tape(x);
  TensorPtr out = result(x->shape, x->needs_grad);
  for (std::size_t i = 0; i < out->v.size(); ++i) out->v[i] = stable_sigmoid(x->v[i]);
  if (out->needs_grad) {
    nodes_.push_back([x, out] {
      for (std::size_t i = 0; i < x->g.size(); ++i)
        x->g[i] += out->g[i] * out->v[i] * (1.f - out->v[i]);
    });
  }
  return out;
}

TensorPtr Tape::embedding_lookup(TensorPtr table, std::span<const int> ids,
                                 int batch, int len) {
  check_on_tape(table);
  require(table->rank() == 2, "embedding table must be [V,d]");
  require(static_cast<int>(ids.size()) == batch * len, "id count mismatch");
  const int V = table->dim(0), d = table->dim(1);
  for (int id : ids) require(id >= 0 && id < V, "embedding id out of range");
  TensorPtr out = result({batch, len, d}, table->needs_grad);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    std::copy_n(table->v.data() + static_cast<std::size_t>(ids[k]) * d, d,
                out->v.data() + k * d);
  }
  if (out->needs_grad) {
    std::vector<int> ids_copy(ids.begin(), ids.end());
    nodes_.push_back([table, out, ids_copy = std::move(ids_copy), d] {
      for (std::size_t k = 0; k < ids_copy.size(); ++k) {
        const float* src = out->g.data() + k * d;
        float* dst = table->g.data() + static_cast<std::size_t>(ids_copy[k]) * d;
        for (int j = 0; j < d; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

TensorPtr Tape::bce_loss(TensorPtr logits, std::span<const float> targets) {
  check_on_tape(logits);
  std::int64_t b = logits->numel();
  require(logits->rank() == 1 || (logits->rank() == 2 && logits->dim(1) == 1),
          "bce_loss expects [B] or [B,1] logits");
  require(static_cast<std::int64_t>(targets.size()) == b, "target count mismatch");
  TensorPtr out = result({1}, logits->needs_grad);
  // loss = mean( max(z,0) - z*y + log(1 + exp(-|z|)) )
  double acc = 0.0;
  for (std::int64_t i = 0; i < b; ++i) {
    float z = logits->v[static_cast<std::size_t>(i)];
    float y = targets[static_cast<std::size_t>(i)];
    acc += std::max(z, 0.f) - z * y + std::log1p(std::exp(-std::fabs(z)));
  }
  out->v[0] = static_cast<float>(acc / static_cast<double>(b));
  if (out->needs_grad) {
    std::vector<float> y_copy(targets.begin(), targets.end());
    nodes_.push_back([logits, out, y_copy = std::move(y_copy), b] {
      const float scale = out->g[0] / static_cast<float>(b);
      for (std::int64_t i = 0; i < b; ++i) {
        float z = logits->v[static_cast<std::size_t>(i)];
        logits->g[static_cast<std::size_t>(i)] +=
            scale * (stable_sigmoid(z) - y_copy[static_cast<std::size_t>(i)]);
      }
    });
  }
  return out;
}

TensorPtr Tape::sum(TensorPtr x) {
  check_on_tape(x);
  TensorPtr out = result({1}, x->needs_grad);
  double acc = 0.0;
  for (float val : x->v) acc += val;
  out->v[0] = static_cast<float>(acc);
  if (out->needs_grad) {
    nodes_.push_back([x, out] {
      for (std::size_t i = 0; i < x->g.size(); ++i) x->g[i] += out->g[0];
    });
  }
  return out;
}

void Tape::backward(const TensorPtr& loss) {
  check_on_tape(loss);
  if (loss->numel() != 1) throw NotAScalar("backward requires a scalar loss");
  if (!loss->needs_grad) {
    throw NotOnTape("loss does not depend on any tensor with needs_grad");
  }
  for (auto& t : tensors_) t->zero_grad();
  loss->g[0] = 1.f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  backward_root_ = loss.get();
}

Tensor Tape::grad_wrt(const TensorPtr& loss, const TensorPtr& target) {
  check_on_tape(loss);
  check_on_tape(target);
  if (!target->needs_grad) {
    throw NotOnTape("target tensor does not track gradients");
  }
  if (backward_root_ != loss.get()) backward(loss);
  Tensor grad(target->shape);
  grad.v = target->g;
  return grad;
}

}  // namespace advdga
