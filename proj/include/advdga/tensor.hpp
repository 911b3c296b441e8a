#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace advdga {

// Dense float32 tensor with row-major values and an optional gradient
// buffer of the same shape.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> v;
  std::vector<float> g;
  bool needs_grad = false;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, float fill = 0.f);

  std::int64_t numel() const;
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  void set_needs_grad(bool on);
  void zero_grad();
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::vector<int> shape, float fill = 0.f);

// In-place helpers used by the attack loops (no autodiff involvement).
float l2_norm(const Tensor& t);
float linf_norm(const Tensor& t);
// y += alpha * x
void axpy(float alpha, const Tensor& x, Tensor& y);

}  // namespace advdga
