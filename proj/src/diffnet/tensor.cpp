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

#include "diffnet/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "common/error.hpp"

namespace ramavt::diffnet {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    require(d >= 0, ErrorKind::kShape, "negative extent in shape " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, const std::vector<float>& values)
    : Tensor(std::move(shape), FloatBuffer(values.begin(), values.end())) {}

Tensor::Tensor(Shape shape, FloatBuffer values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  require(shape_numel(shape_) == data_.size(), ErrorKind::kShape,
          "tensor shape " + shape_string(shape_) + " does not hold " +
              std::to_string(data_.size()) + " values");
}

int Tensor::dim(int axis) const {
  if (axis < 0) axis += rank();
  require(axis >= 0 && axis < rank(), ErrorKind::kShape,
          "axis out of range for shape " + shape_string(shape_));
  return shape_[static_cast<std::size_t>(axis)];
}

void Tensor::zero_grad() { grad_.assign(data_.size(), 0.0f); }

void Tensor::reshape(Shape shape) {
  require(shape_numel(shape) == data_.size(), ErrorKind::kShape,
          "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  shape_ = std::move(shape);
}

bool Tensor::all_finite() const {
  for (float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

TensorPtr make_tensor(Shape shape, float fill) {
  return std::make_shared<Tensor>(std::move(shape), fill);
}

TensorPtr make_tensor(Shape shape, const std::vector<float>& values) {
  return std::make_shared<Tensor>(std::move(shape), values);
}

TensorPtr make_tensor(Shape shape, FloatBuffer values) {
  return std::make_shared<Tensor>(std::move(shape), std::move(values));
}

TensorPtr make_tensor(Shape shape, std::initializer_list<float> values) {
  return std::make_shared<Tensor>(std::move(shape), FloatBuffer(values));
}

TensorPtr make_param(Shape shape, const std::vector<float>& values) {
  auto t = make_tensor(std::move(shape), values);
  t->set_requires_grad(true);
  return t;
}

TensorPtr constant_like(const Tensor& t) { return make_tensor(t.shape(), t.values()); }

}  // namespace ramavt::diffnet
