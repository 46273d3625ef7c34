// Copyright 2026 The RAMAVT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace ramavt::diffnet {

using Shape = std::vector<int>;

// Cache-line aligned storage. Eigen kernels peel unaligned leading elements,
// which changes summation order; fixing the base alignment makes every result
// a function of shapes and values alone.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};
  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major float32 array with an optional gradient buffer of the same
// length. Graph-building ops share tensors through TensorPtr.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, const std::vector<float>& values);
  Tensor(Shape shape, FloatBuffer values);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const;
  std::size_t size() const { return data_.size(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  FloatBuffer& values() { return data_; }
  const FloatBuffer& values() const { return data_; }
  std::vector<float> to_vector() const { return {data_.begin(), data_.end()}; }
  std::vector<float> to_grad_vector() const { return {grad_.begin(), grad_.end()}; }
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on) { requires_grad_ = on; }

  bool has_grad() const { return !grad_.empty(); }
  // Allocates a zeroed gradient buffer on first access.
  FloatBuffer& grad() {
    if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0f);
    return grad_;
  }
  const FloatBuffer& grad() const { return grad_; }
  void zero_grad();
  void drop_grad() { grad_.clear(); grad_.shrink_to_fit(); }

  // Same data, new shape; element count must agree.
  void reshape(Shape shape);

  bool all_finite() const;

  // Scalars produced by reductions keep a float64 copy of their value so that
  // finite-difference probes are not limited by the float32 rounding of the
  // final sum.
  double scalar() const { return has_precise_ ? precise_ : static_cast<double>(data_.at(0)); }
  void set_scalar(double value) {
    precise_ = value;
    has_precise_ = true;
    data_.at(0) = static_cast<float>(value);
  }

 private:
  Shape shape_;
  FloatBuffer data_;
  FloatBuffer grad_;
  bool requires_grad_ = false;
  double precise_ = 0.0;
  bool has_precise_ = false;
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(Shape shape, float fill = 0.0f);
TensorPtr make_tensor(Shape shape, const std::vector<float>& values);
TensorPtr make_tensor(Shape shape, FloatBuffer values);
TensorPtr make_tensor(Shape shape, std::initializer_list<float> values);
// Leaf that participates in differentiation.
TensorPtr make_param(Shape shape, const std::vector<float>& values);
// Detached deep copy (value only).
TensorPtr constant_like(const Tensor& t);

}  // namespace ramavt::diffnet
