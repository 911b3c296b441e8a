#include "advdga/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "advdga/errors.hpp"

namespace advdga {

Tensor::Tensor(std::vector<int> s, float fill) : shape(std::move(s)) {
  v.assign(static_cast<std::size_t>(numel()), fill);
}

std::int64_t Tensor::numel() const {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

void Tensor::set_needs_grad(bool on) {
  needs_grad = on;
  if (on) {
    g.assign(v.size(), 0.f);
  } else {
    g.clear();
  }
}

void Tensor::zero_grad() { std::fill(g.begin(), g.end(), 0.f); }

TensorPtr make_tensor(std::vector<int> shape, float fill) {
  return std::make_shared<Tensor>(std::move(shape), fill);
}

float l2_norm(const Tensor& t) {
  double acc = 0.0;
  for (float x : t.v) acc += static_cast<double>(x) * x;
  return static_cast<float>(std::sqrt(acc));
}

float linf_norm(const Tensor& t) {
  float m = 0.f;
  for (float x : t.v) m = std::max(m, std::fabs(x));
  return m;
}

void axpy(float alpha, const Tensor& x, Tensor& y) {
  if (!x.same_shape(y)) throw ShapeMismatch("axpy shape mismatch");
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += alpha * x.v[i];
}

}  // namespace advdga
