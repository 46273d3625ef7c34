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

#include "diffnet/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace ramavt::diffnet {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  RAMAVT_REQUIRE(a.shape() == b.shape(), ErrorKind::kShape,
          std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
              shape_string(b.shape()));
}

void require_rank(const Tensor& t, int rank, const char* op, const char* what) {
  RAMAVT_REQUIRE(t.rank() == rank, ErrorKind::kShape,
          std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
              shape_string(t.shape()));
}

float sigmoidf(float x) { return 1.0f / (1.0f + std::exp(-x)); }

}  // namespace

int conv_output_extent(int extent, int kernel, int stride, int padding) {
  RAMAVT_REQUIRE(stride > 0 && padding >= 0 && kernel > 0, ErrorKind::kInvalidArgument,
          "conv2d: stride must be positive and padding non-negative");
  RAMAVT_REQUIRE(extent + 2 * padding >= kernel, ErrorKind::kShape,
          "conv2d: kernel " + std::to_string(kernel) + " larger than padded extent " +
              std::to_string(extent + 2 * padding));
  return (extent + 2 * padding - kernel) / stride + 1;
}

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(*a, *b, "add");
  auto out = make_tensor(a->shape());
  for (std::size_t i = 0; i < out->size(); ++i) (*out)[i] = (*a)[i] + (*b)[i];
  if (out->size() == 1) out->set_scalar(a->scalar() + b->scalar());
  if (Tape::records(tape, {&a, &b})) {
    tape->record({a, b}, out, [a, b, out] {
      const auto& g = out->grad();
      if (a->requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) a->grad()[i] += g[i];
      if (b->requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) b->grad()[i] += g[i];
    });
  }
  return out;
}

TensorPtr sub(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(*a, *b, "sub");
  auto out = make_tensor(a->shape());
  for (std::size_t i = 0; i < out->size(); ++i) (*out)[i] = (*a)[i] - (*b)[i];
  if (out->size() == 1) out->set_scalar(a->scalar() - b->scalar());
  if (Tape::records(tape, {&a, &b})) {
    tape->record({a, b}, out, [a, b, out] {
      const auto& g = out->grad();
      if (a->requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) a->grad()[i] += g[i];
      if (b->requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) b->grad()[i] -= g[i];
    });
  }
  return out;
}

TensorPtr mul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(*a, *b, "mul");
  auto out = make_tensor(a->shape());
  for (std::size_t i = 0; i < out->size(); ++i) (*out)[i] = (*a)[i] * (*b)[i];
  if (out->size() == 1) out->set_scalar(a->scalar() * b->scalar());
  if (Tape::records(tape, {&a, &b})) {
    tape->record({a, b}, out, [a, b, out] {
      const auto& g = out->grad();
      if (a->requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) a->grad()[i] += g[i] * (*b)[i];
      if (b->requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) b->grad()[i] += g[i] * (*a)[i];
    });
  }
  return out;
}

TensorPtr scale(Tape* tape, const TensorPtr& a, float factor) {
  auto out = make_tensor(a->shape());
  for (std::size_t i = 0; i < out->size(); ++i) (*out)[i] = (*a)[i] * factor;
  if (out->size() == 1) out->set_scalar(a->scalar() * factor);
  if (Tape::records(tape, {&a})) {
    tape->record({a}, out, [a, out, factor] {
      const auto& g = out->grad();
      for (std::size_t i = 0; i < g.size(); ++i) a->grad()[i] += g[i] * factor;
    });
  }
  return out;
}

TensorPtr sum(Tape* tape, const TensorPtr& a) {
  double acc = 0.0;
  for (float v : a->values()) acc += v;
  auto out = make_tensor({1});
  out->set_scalar(acc);
  if (Tape::records(tape, {&a})) {
    tape->record({a}, out, [a, out] {
      const float g = out->grad()[0];
      for (float& d : a->grad()) d += g;
    });
  }
  return out;
}

TensorPtr mean(Tape* tape, const TensorPtr& a) {
  double acc = 0.0;
  for (float v : a->values()) acc += v;
  const double n = static_cast<double>(a->size());
  auto out = make_tensor({1});
  out->set_scalar(acc / n);
  if (Tape::records(tape, {&a})) {
    tape->record({a}, out, [a, out, n] {
      const float g = static_cast<float>(out->grad()[0] / n);
      for (float& d : a->grad()) d += g;
    });
  }
  return out;
}

TensorPtr activation(Tape* tape, const TensorPtr& x, Activation kind) {
  auto out = make_tensor(x->shape());
  const std::size_t n = x->size();
  switch (kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < n; ++i) (*out)[i] = std::max((*x)[i], 0.0f);
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < n; ++i) (*out)[i] = sigmoidf((*x)[i]);
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < n; ++i) (*out)[i] = std::tanh((*x)[i]);
      break;
  }
  if (Tape::records(tape, {&x})) {
    tape->record({x}, out, [x, out, kind, n] {
      const auto& g = out->grad();
      auto& dx = x->grad();
      switch (kind) {
        case Activation::kRelu:
          for (std::size_t i = 0; i < n; ++i)
            if ((*x)[i] > 0.0f) dx[i] += g[i];
          break;
        case Activation::kSigmoid:
          for (std::size_t i = 0; i < n; ++i) {
            const float y = (*out)[i];
            dx[i] += g[i] * y * (1.0f - y);
          }
          break;
        case Activation::kTanh:
          for (std::size_t i = 0; i < n; ++i) {
            const float y = (*out)[i];
            dx[i] += g[i] * (1.0f - y * y);
          }
          break;
      }
    });
  }
  return out;
}

TensorPtr softmax(Tape* tape, const TensorPtr& x, int axis) {
  const int rank = x->rank();
  if (axis < 0) axis += rank;
  RAMAVT_REQUIRE(axis >= 0 && axis < rank, ErrorKind::kShape,
          "softmax: axis out of range for " + shape_string(x->shape()));
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(x->dim(i));
  for (int i = axis + 1; i < rank; ++i) inner *= static_cast<std::size_t>(x->dim(i));
  const std::size_t len = static_cast<std::size_t>(x->dim(axis));

  auto out = make_tensor(x->shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      float mx = (*x)[base];
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, (*x)[base + j * inner]);
      double total = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        const float e = std::exp((*x)[base + j * inner] - mx);
        (*out)[base + j * inner] = e;
        total += e;
      }
      const float inv = static_cast<float>(1.0 / total);
      for (std::size_t j = 0; j < len; ++j) (*out)[base + j * inner] *= inv;
    }
  }
  if (Tape::records(tape, {&x})) {
    tape->record({x}, out, [x, out, outer, inner, len] {
      const auto& g = out->grad();
      auto& dx = x->grad();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * len * inner + in;
          double dot = 0.0;
          for (std::size_t j = 0; j < len; ++j)
            dot += static_cast<double>(g[base + j * inner]) * (*out)[base + j * inner];
          for (std::size_t j = 0; j < len; ++j) {
            const std::size_t k = base + j * inner;
            dx[k] += (*out)[k] * (g[k] - static_cast<float>(dot));
          }
        }
      }
    });
  }
  return out;
}

TensorPtr matmul(Tape* tape, const TensorPtr& x, const TensorPtr& w) {
  require_rank(*w, 2, "matmul", "weight");
  const int d = w->dim(0);
  const int e = w->dim(1);
  RAMAVT_REQUIRE(x->rank() >= 1 && x->dim(-1) == d, ErrorKind::kShape,
          "matmul: inner dimensions disagree, input " + shape_string(x->shape()) + " weight " +
              shape_string(w->shape()));
  const int rows = static_cast<int>(x->size() / static_cast<std::size_t>(d));
  Shape out_shape = x->shape();
  out_shape.back() = e;
  auto out = make_tensor(out_shape);
  MatMap(out->data().data(), rows, e).noalias() =
      ConstMatMap(x->data().data(), rows, d) * ConstMatMap(w->data().data(), d, e);
  if (Tape::records(tape, {&x, &w})) {
    tape->record({x, w}, out, [x, w, out, rows, d, e] {
      ConstMatMap g(out->grad().data(), rows, e);
      if (x->requires_grad())
        MatMap(x->grad().data(), rows, d).noalias() +=
            g * ConstMatMap(w->data().data(), d, e).transpose();
      if (w->requires_grad())
        MatMap(w->grad().data(), d, e).noalias() +=
            ConstMatMap(x->data().data(), rows, d).transpose() * g;
    });
  }
  return out;
}

TensorPtr dense(Tape* tape, const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
  require_rank(*w, 2, "dense", "weight");
  require_rank(*b, 1, "dense", "bias");
  const int d = w->dim(0);
  const int e = w->dim(1);
  RAMAVT_REQUIRE(b->dim(0) == e, ErrorKind::kShape,
          "dense: bias " + shape_string(b->shape()) + " does not match weight " +
              shape_string(w->shape()));
  RAMAVT_REQUIRE(x->rank() >= 1 && x->dim(-1) == d, ErrorKind::kShape,
          "dense: inner dimensions disagree, input " + shape_string(x->shape()) + " weight " +
              shape_string(w->shape()));
  const int rows = static_cast<int>(x->size() / static_cast<std::size_t>(d));
  Shape out_shape = x->shape();
  out_shape.back() = e;
  auto out = make_tensor(out_shape);
  MatMap o(out->data().data(), rows, e);
  o.noalias() = ConstMatMap(x->data().data(), rows, d) * ConstMatMap(w->data().data(), d, e);
  o.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(b->data().data(), e);
  if (Tape::records(tape, {&x, &w, &b})) {
    tape->record({x, w, b}, out, [x, w, b, out, rows, d, e] {
      ConstMatMap g(out->grad().data(), rows, e);
      if (x->requires_grad())
        MatMap(x->grad().data(), rows, d).noalias() +=
            g * ConstMatMap(w->data().data(), d, e).transpose();
      if (w->requires_grad())
        MatMap(w->grad().data(), d, e).noalias() +=
            ConstMatMap(x->data().data(), rows, d).transpose() * g;
      if (b->requires_grad())
        Eigen::Map<Eigen::RowVectorXf>(b->grad().data(), e) += g.colwise().sum();
    });
  }
  return out;
}

TensorPtr conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& kernel, const TensorPtr& bias,
                 Conv2dGeometry geometry) {
  require_rank(*x, 4, "conv2d", "input");
  require_rank(*kernel, 4, "conv2d", "kernel");
  require_rank(*bias, 1, "conv2d", "bias");
  const int n = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
  const int f = kernel->dim(0), kh = kernel->dim(2), kw = kernel->dim(3);
  RAMAVT_REQUIRE(kernel->dim(1) == c, ErrorKind::kShape,
          "conv2d: input channels " + std::to_string(c) + " != kernel channels " +
              std::to_string(kernel->dim(1)) + " (input " + shape_string(x->shape()) +
              ", kernel " + shape_string(kernel->shape()) + ")");
  RAMAVT_REQUIRE(bias->dim(0) == f, ErrorKind::kShape, "conv2d: bias length does not match filters");
  const int stride = geometry.stride, pad = geometry.padding;
  const int ho = conv_output_extent(h, kh, stride, pad);
  const int wo = conv_output_extent(w, kw, stride, pad);
  const int k = c * kh * kw;
  const int hw = ho * wo;

  // Images are lowered in chunks: cols[k, m*hw] holds m images side by side
  // so each chunk is a single GEMM.
  const int chunk = std::max(1, std::min(n, static_cast<int>((1 << 16) / std::max<std::size_t>(
                                                                 1, static_cast<std::size_t>(k) * hw))));
  // Output columns whose input column lies inside the image, per kernel column.
  std::vector<int> ox_lo(kw), ox_hi(kw);
  for (int j = 0; j < kw; ++j) {
    int lo = 0, hi = wo;
    while (lo < wo && lo * stride - pad + j < 0) ++lo;
    while (hi > lo && (hi - 1) * stride - pad + j >= w) --hi;
    ox_lo[j] = lo;
    ox_hi[j] = hi;
  }
  auto im2col = [=](const float* src, float* cols, std::size_t ld) {
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < kh; ++i)
        for (int j = 0; j < kw; ++j) {
          float* row = cols + static_cast<std::size_t>((ch * kh + i) * kw + j) * ld;
          const int lo = ox_lo[j], hi = ox_hi[j];
          for (int oy = 0; oy < ho; ++oy) {
            float* dst = row + oy * wo;
            const int iy = oy * stride - pad + i;
            if (iy < 0 || iy >= h) {
              std::fill(dst, dst + wo, 0.0f);
              continue;
            }
            const float* line = src + (static_cast<std::size_t>(ch) * h + iy) * w - pad + j;
            std::fill(dst, dst + lo, 0.0f);
            if (stride == 1) {
              std::copy(line + lo, line + hi, dst + lo);
            } else {
              for (int ox = lo; ox < hi; ++ox) dst[ox] = line[ox * stride];
            }
            std::fill(dst + hi, dst + wo, 0.0f);
          }
        }
  };
  auto col2im = [=](const float* cols, std::size_t ld, float* dst) {
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < kh; ++i)
        for (int j = 0; j < kw; ++j) {
          const float* row = cols + static_cast<std::size_t>((ch * kh + i) * kw + j) * ld;
          const int lo = ox_lo[j], hi = ox_hi[j];
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride - pad + i;
            if (iy < 0 || iy >= h) continue;
            float* line = dst + (static_cast<std::size_t>(ch) * h + iy) * w - pad + j;
            const float* from = row + oy * wo;
            if (stride == 1) {
              for (int ox = lo; ox < hi; ++ox) line[ox] += from[ox];
            } else {
              for (int ox = lo; ox < hi; ++ox) line[ox * stride] += from[ox];
            }
          }
        }
  };

  auto out = make_tensor({n, f, ho, wo});
  const std::size_t in_stride = static_cast<std::size_t>(c) * h * w;
  const std::size_t out_stride = static_cast<std::size_t>(f) * hw;
  {
    FloatBuffer cols(static_cast<std::size_t>(k) * chunk * hw);
    RowMat prod;
    ConstMatMap wmat(kernel->data().data(), f, k);
    for (int first = 0; first < n; first += chunk) {
      const int m = std::min(chunk, n - first);
      const std::size_t ld = static_cast<std::size_t>(m) * hw;
      for (int img = 0; img < m; ++img)
        im2col(x->data().data() + (first + img) * in_stride, cols.data() + img * hw, ld);
      prod.noalias() = wmat * ConstMatMap(cols.data(), k, ld);
      for (int img = 0; img < m; ++img) {
        MatMap o(out->data().data() + (first + img) * out_stride, f, hw);
        o = prod.middleCols(img * hw, hw);
        for (int ff = 0; ff < f; ++ff) o.row(ff).array() += (*bias)[ff];
      }
    }
  }

  if (Tape::records(tape, {&x, &kernel, &bias})) {
    tape->record({x, kernel, bias}, out, [=] {
      FloatBuffer cols(static_cast<std::size_t>(k) * chunk * hw);
      RowMat grad_cols, g;
      ConstMatMap wm(kernel->data().data(), f, k);
      const float* gout = out->grad().data();
      for (int first = 0; first < n; first += chunk) {
        const int m = std::min(chunk, n - first);
        const std::size_t ld = static_cast<std::size_t>(m) * hw;
        g.resize(f, static_cast<Eigen::Index>(ld));
        for (int img = 0; img < m; ++img)
          g.middleCols(img * hw, hw) = ConstMatMap(gout + (first + img) * out_stride, f, hw);
        if (bias->requires_grad()) {
          float* db = bias->grad().data();
          for (int ff = 0; ff < f; ++ff) db[ff] += g.row(ff).sum();
        }
        if (kernel->requires_grad()) {
          for (int img = 0; img < m; ++img)
            im2col(x->data().data() + (first + img) * in_stride, cols.data() + img * hw, ld);
          MatMap(kernel->grad().data(), f, k).noalias() += g * ConstMatMap(cols.data(), k, ld).transpose();
        }
        if (x->requires_grad()) {
          grad_cols.noalias() = wm.transpose() * g;
          float* dx = x->grad().data();
          for (int img = 0; img < m; ++img) col2im(grad_cols.data() + img * hw, ld, dx + (first + img) * in_stride);
        }
      }
    });
  }
  return out;
}

TensorPtr batchnorm2d(Tape* tape, const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                      BatchNormStats& stats, NormMode mode) {
  require_rank(*x, 4, "batchnorm2d", "input");
  const int n = x->dim(0), c = x->dim(1), hw = x->dim(2) * x->dim(3);
  RAMAVT_REQUIRE(gamma->size() == static_cast<std::size_t>(c) && beta->size() == static_cast<std::size_t>(c),
          ErrorKind::kShape, "batchnorm2d: gamma/beta length does not match channels");
  RAMAVT_REQUIRE(stats.running_mean && stats.running_var &&
              stats.running_mean->size() == static_cast<std::size_t>(c) &&
              stats.running_var->size() == static_cast<std::size_t>(c),
          ErrorKind::kShape, "batchnorm2d: running statistics do not match channels");
  const std::size_t count = static_cast<std::size_t>(n) * hw;
  auto at = [=](int img, int ch) { return (static_cast<std::size_t>(img) * c + ch) * hw; };

  std::vector<float> mean_c(c), invstd(c);
  if (mode == NormMode::kTrain) {
    RAMAVT_REQUIRE(count >= 2, ErrorKind::kDegenerate,
            "batchnorm2d: train mode needs at least two values per channel (N*H*W >= 2)");
    for (int ch = 0; ch < c; ++ch) {
      double s = 0.0, s2 = 0.0;
      for (int img = 0; img < n; ++img) {
        const float* p = x->data().data() + at(img, ch);
        for (int i = 0; i < hw; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(count);
      for (int img = 0; img < n; ++img) {
        const float* p = x->data().data() + at(img, ch);
        for (int i = 0; i < hw; ++i) {
          const double d = p[i] - mu;
          s2 += d * d;
        }
      }
      const double var = s2 / static_cast<double>(count);
      mean_c[ch] = static_cast<float>(mu);
      invstd[ch] = static_cast<float>(1.0 / std::sqrt(var + stats.epsilon));
      const double unbiased = s2 / static_cast<double>(count - 1);
      auto& rm = (*stats.running_mean)[ch];
      auto& rv = (*stats.running_var)[ch];
      rm = static_cast<float>((1.0 - stats.momentum) * rm + stats.momentum * mu);
      rv = static_cast<float>((1.0 - stats.momentum) * rv + stats.momentum * unbiased);
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      mean_c[ch] = (*stats.running_mean)[ch];
      invstd[ch] = 1.0f / std::sqrt((*stats.running_var)[ch] + stats.epsilon);
    }
  }

  auto out = make_tensor(x->shape());
  for (int img = 0; img < n; ++img)
    for (int ch = 0; ch < c; ++ch) {
      const float* p = x->data().data() + at(img, ch);
      float* o = out->data().data() + at(img, ch);
      const float g = (*gamma)[ch] * invstd[ch];
      const float b = (*beta)[ch] - mean_c[ch] * g;
      for (int i = 0; i < hw; ++i) o[i] = p[i] * g + b;
    }

  if (Tape::records(tape, {&x, &gamma, &beta})) {
    const bool train = mode == NormMode::kTrain;
    tape->record({x, gamma, beta}, out, [=] {
      const auto& gout = out->grad();
      for (int ch = 0; ch < c; ++ch) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int img = 0; img < n; ++img) {
          const std::size_t base = at(img, ch);
          for (int i = 0; i < hw; ++i) {
            const double xhat = ((*x)[base + i] - mean_c[ch]) * invstd[ch];
            sum_g += gout[base + i];
            sum_gx += gout[base + i] * xhat;
          }
        }
        if (gamma->requires_grad()) gamma->grad()[ch] += static_cast<float>(sum_gx);
        if (beta->requires_grad()) beta->grad()[ch] += static_cast<float>(sum_g);
        if (!x->requires_grad()) continue;
        auto& dx = x->grad();
        const float gi = (*gamma)[ch] * invstd[ch];
        if (train) {
          const double m = static_cast<double>(count);
          const double mg = sum_g / m, mgx = sum_gx / m;
          for (int img = 0; img < n; ++img) {
            const std::size_t base = at(img, ch);
            for (int i = 0; i < hw; ++i) {
              const double xhat = ((*x)[base + i] - mean_c[ch]) * invstd[ch];
              dx[base + i] += static_cast<float>(gi * (gout[base + i] - mg - xhat * mgx));
            }
          }
        } else {
          for (int img = 0; img < n; ++img) {
            const std::size_t base = at(img, ch);
            for (int i = 0; i < hw; ++i) dx[base + i] += gi * gout[base + i];
          }
        }
      }
    });
  }
  return out;
}

TensorPtr global_avg_pool(Tape* tape, const TensorPtr& x) {
  require_rank(*x, 4, "global_avg_pool", "input");
  const int n = x->dim(0), c = x->dim(1), hw = x->dim(2) * x->dim(3);
  auto out = make_tensor({n, c});
  for (int i = 0; i < n * c; ++i) {
    double s = 0.0;
    const float* p = x->data().data() + static_cast<std::size_t>(i) * hw;
    for (int j = 0; j < hw; ++j) s += p[j];
    (*out)[i] = static_cast<float>(s / hw);
  }
  if (Tape::records(tape, {&x})) {
    tape->record({x}, out, [x, out, n, c, hw] {
      auto& dx = x->grad();
      for (int i = 0; i < n * c; ++i) {
        const float g = out->grad()[i] / static_cast<float>(hw);
        for (int j = 0; j < hw; ++j) dx[static_cast<std::size_t>(i) * hw + j] += g;
      }
    });
  }
  return out;
}

TensorPtr channel_scale(Tape* tape, const TensorPtr& x, const TensorPtr& s) {
  require_rank(*x, 4, "channel_scale", "input");
  const int n = x->dim(0), c = x->dim(1), hw = x->dim(2) * x->dim(3);
  RAMAVT_REQUIRE(s->rank() == 2 && s->dim(0) == n && s->dim(1) == c, ErrorKind::kShape,
          "channel_scale: scale " + shape_string(s->shape()) + " does not match input " +
              shape_string(x->shape()));
  auto out = make_tensor(x->shape());
  for (int i = 0; i < n * c; ++i) {
    const float f = (*s)[i];
    const std::size_t base = static_cast<std::size_t>(i) * hw;
    for (int j = 0; j < hw; ++j) (*out)[base + j] = (*x)[base + j] * f;
  }
  if (Tape::records(tape, {&x, &s})) {
    tape->record({x, s}, out, [x, s, out, n, c, hw] {
      const auto& g = out->grad();
      for (int i = 0; i < n * c; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * hw;
        if (x->requires_grad()) {
          auto& dx = x->grad();
          const float f = (*s)[i];
          for (int j = 0; j < hw; ++j) dx[base + j] += g[base + j] * f;
        }
        if (s->requires_grad()) {
          double acc = 0.0;
          for (int j = 0; j < hw; ++j) acc += static_cast<double>(g[base + j]) * (*x)[base + j];
          s->grad()[i] += static_cast<float>(acc);
        }
      }
    });
  }
  return out;
}

TensorPtr to_tokens(Tape* tape, const TensorPtr& x) {
  require_rank(*x, 4, "to_tokens", "input");
  const int n = x->dim(0), c = x->dim(1), p = x->dim(2) * x->dim(3);
  auto out = make_tensor({n, p, c});
  for (int img = 0; img < n; ++img)
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < p; ++i)
        (*out)[(static_cast<std::size_t>(img) * p + i) * c + ch] =
            (*x)[(static_cast<std::size_t>(img) * c + ch) * p + i];
  if (Tape::records(tape, {&x})) {
    tape->record({x}, out, [x, out, n, c, p] {
      auto& dx = x->grad();
      const auto& g = out->grad();
      for (int img = 0; img < n; ++img)
        for (int ch = 0; ch < c; ++ch)
          for (int i = 0; i < p; ++i)
            dx[(static_cast<std::size_t>(img) * c + ch) * p + i] +=
                g[(static_cast<std::size_t>(img) * p + i) * c + ch];
    });
  }
  return out;
}

TensorPtr from_tokens(Tape* tape, const TensorPtr& tokens, int height, int width) {
  require_rank(*tokens, 3, "from_tokens", "tokens");
  const int n = tokens->dim(0), p = tokens->dim(1), d = tokens->dim(2);
  RAMAVT_REQUIRE(p == height * width, ErrorKind::kShape, "from_tokens: token count != height*width");
  auto out = make_tensor({n, d, height, width});
  for (int img = 0; img < n; ++img)
    for (int ch = 0; ch < d; ++ch)
      for (int i = 0; i < p; ++i)
        (*out)[(static_cast<std::size_t>(img) * d + ch) * p + i] =
            (*tokens)[(static_cast<std::size_t>(img) * p + i) * d + ch];
  if (Tape::records(tape, {&tokens})) {
    tape->record({tokens}, out, [tokens, out, n, d, p] {
      auto& dt = tokens->grad();
      const auto& g = out->grad();
      for (int img = 0; img < n; ++img)
        for (int ch = 0; ch < d; ++ch)
          for (int i = 0; i < p; ++i)
            dt[(static_cast<std::size_t>(img) * p + i) * d + ch] +=
                g[(static_cast<std::size_t>(img) * d + ch) * p + i];
    });
  }
  return out;
}

TensorPtr mean_tokens(Tape* tape, const TensorPtr& tokens) {
  require_rank(*tokens, 3, "mean_tokens", "tokens");
  const int n = tokens->dim(0), p = tokens->dim(1), d = tokens->dim(2);
  auto out = make_tensor({n, d});
  for (int img = 0; img < n; ++img)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int i = 0; i < p; ++i) s += (*tokens)[(static_cast<std::size_t>(img) * p + i) * d + j];
      (*out)[static_cast<std::size_t>(img) * d + j] = static_cast<float>(s / p);
    }
  if (Tape::records(tape, {&tokens})) {
    tape->record({tokens}, out, [tokens, out, n, p, d] {
      auto& dt = tokens->grad();
      for (int img = 0; img < n; ++img)
        for (int j = 0; j < d; ++j) {
          const float g = out->grad()[static_cast<std::size_t>(img) * d + j] / static_cast<float>(p);
          for (int i = 0; i < p; ++i) dt[(static_cast<std::size_t>(img) * p + i) * d + j] += g;
        }
    });
  }
  return out;
}

TensorPtr reshape(Tape* tape, const TensorPtr& x, Shape shape) {
  auto out = make_tensor(std::move(shape), x->values());
  if (Tape::records(tape, {&x})) {
    tape->record({x}, out, [x, out] {
      auto& dx = x->grad();
      const auto& g = out->grad();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    });
  }
  return out;
}

TensorPtr flatten(Tape* tape, const TensorPtr& x) {
  const int n = x->dim(0);
  return reshape(tape, x, {n, static_cast<int>(x->size() / static_cast<std::size_t>(n))});
}

TensorPtr slice_rows(Tape* tape, const TensorPtr& x, int start, int count) {
  const int n = x->dim(0);
  RAMAVT_REQUIRE(start >= 0 && count > 0 && start + count <= n, ErrorKind::kShape,
          "slice_rows: range out of bounds for " + shape_string(x->shape()));
  const std::size_t row = x->size() / static_cast<std::size_t>(n);
  Shape shape = x->shape();
  shape[0] = count;
  FloatBuffer values(x->values().begin() + static_cast<std::ptrdiff_t>(start * row),
                            x->values().begin() + static_cast<std::ptrdiff_t>((start + count) * row));
  auto out = make_tensor(std::move(shape), std::move(values));
  if (Tape::records(tape, {&x})) {
    tape->record({x}, out, [x, out, start, row] {
      auto& dx = x->grad();
      const auto& g = out->grad();
      for (std::size_t i = 0; i < g.size(); ++i) dx[start * row + i] += g[i];
    });
  }
  return out;
}

TensorPtr concat_rows(Tape* tape, const std::vector<TensorPtr>& parts) {
  RAMAVT_REQUIRE(!parts.empty(), ErrorKind::kEmpty, "concat_rows: no inputs");
  Shape shape = parts.front()->shape();
  int rows = 0;
  for (const auto& p : parts) {
    Shape tail_a(shape.begin() + 1, shape.end()), tail_b(p->shape().begin() + 1, p->shape().end());
    RAMAVT_REQUIRE(tail_a == tail_b, ErrorKind::kShape, "concat_rows: trailing shapes disagree");
    rows += p->dim(0);
  }
  shape[0] = rows;
  auto out = make_tensor(shape);
  std::size_t offset = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    std::copy(p->values().begin(), p->values().end(), out->values().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p->size();
    any_grad = any_grad || p->requires_grad();
  }
  if (tape != nullptr && any_grad) {
    tape->record(parts, out, [parts, out] {
      std::size_t off = 0;
      const auto& g = out->grad();
      for (const auto& p : parts) {
        if (p->requires_grad()) {
          auto& d = p->grad();
          for (std::size_t i = 0; i < p->size(); ++i) d[i] += g[off + i];
        }
        off += p->size();
      }
    });
  }
  return out;
}

TensorPtr gather(Tape* tape, const TensorPtr& q, const std::vector<int>& index) {
  require_rank(*q, 2, "gather", "input");
  const int n = q->dim(0), a = q->dim(1);
  RAMAVT_REQUIRE(static_cast<int>(index.size()) == n, ErrorKind::kShape, "gather: index length != rows");
  auto out = make_tensor({n});
  for (int i = 0; i < n; ++i) {
    RAMAVT_REQUIRE(index[i] >= 0 && index[i] < a, ErrorKind::kInvalidArgument, "gather: index out of range");
    (*out)[i] = (*q)[static_cast<std::size_t>(i) * a + index[i]];
  }
  if (Tape::records(tape, {&q})) {
    tape->record({q}, out, [q, out, index, a] {
      auto& dq = q->grad();
      for (std::size_t i = 0; i < index.size(); ++i) dq[i * a + index[i]] += out->grad()[i];
    });
  }
  return out;
}

TensorPtr masked_squared_error(Tape* tape, const TensorPtr& pred, const std::vector<float>& target,
                               const std::vector<float>& mask) {
  RAMAVT_REQUIRE(pred->size() == target.size() && pred->size() == mask.size(), ErrorKind::kShape,
          "masked_squared_error: prediction, target and mask lengths differ");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = static_cast<double>((*pred)[i]) - target[i];
    num += mask[i] * d * d;
    den += mask[i];
  }
  RAMAVT_REQUIRE(den > 0.0, ErrorKind::kDegenerate, "masked_squared_error: mask selects nothing");
  auto out = make_tensor({1});
  out->set_scalar(num / den);
  if (Tape::records(tape, {&pred})) {
    tape->record({pred}, out, [pred, out, target, mask, den] {
      const double g = out->grad()[0];
      auto& dp = pred->grad();
      for (std::size_t i = 0; i < target.size(); ++i)
        dp[i] += static_cast<float>(g * 2.0 * mask[i] * ((*pred)[i] - target[i]) / den);
    });
  }
  return out;
}

TensorPtr mse(Tape* tape, const TensorPtr& pred, const std::vector<float>& target) {
  return masked_squared_error(tape, pred, target, std::vector<float>(target.size(), 1.0f));
}

TensorPtr multi_head_attention(Tape* tape, const TensorPtr& q, const TensorPtr& k,
                               const TensorPtr& v, int heads, Tensor* weights) {
  require_rank(*q, 3, "attention", "queries");
  require_same_shape(*q, *k, "attention");
  require_same_shape(*q, *v, "attention");
  const int n = q->dim(0), p = q->dim(1), d = q->dim(2);
  RAMAVT_REQUIRE(p >= 1, ErrorKind::kEmpty, "attention: empty token sequence");
  RAMAVT_REQUIRE(heads > 0 && d % heads == 0, ErrorKind::kShape,
          "attention: model width " + std::to_string(d) + " not divisible by heads " +
              std::to_string(heads));
  const int dk = d / heads;
  const float inv_scale = 1.0f / std::sqrt(static_cast<float>(dk));
  using HeadMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
  using HeadMutMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
  auto head = [=](const Tensor& t, int img, int hd) {
    return HeadMap(t.data().data() + static_cast<std::size_t>(img) * p * d + hd * dk, p, dk, Eigen::OuterStride<>(d));
  };
  auto head_mut = [=](float* base, int img, int hd) {
    return HeadMutMap(base + static_cast<std::size_t>(img) * p * d + hd * dk, p, dk, Eigen::OuterStride<>(d));
  };
  auto attn = std::make_shared<FloatBuffer>(static_cast<std::size_t>(n) * heads * p * p);
  auto out = make_tensor(q->shape());
  for (int img = 0; img < n; ++img)
    for (int hd = 0; hd < heads; ++hd) {
      MatMap a(attn->data() + (static_cast<std::size_t>(img) * heads + hd) * p * p, p, p);
      a.noalias() = head(*q, img, hd) * head(*k, img, hd).transpose();
      a *= inv_scale;
      for (int i = 0; i < p; ++i) {
        auto row = a.row(i);
        row.array() = (row.array() - row.maxCoeff()).exp();
        double total = 0.0;
        for (int j = 0; j < p; ++j) total += row[j];
        row *= static_cast<float>(1.0 / total);
      }
      head_mut(out->data().data(), img, hd).noalias() = a * head(*v, img, hd);
    }
  if (weights != nullptr) *weights = Tensor({n, heads, p, p}, *attn);

  if (Tape::records(tape, {&q, &k, &v})) {
    tape->record({q, k, v}, out, [=] {
      RowMat da, ds;
      for (int img = 0; img < n; ++img)
        for (int hd = 0; hd < heads; ++hd) {
          ConstMatMap a(attn->data() + (static_cast<std::size_t>(img) * heads + hd) * p * p, p, p);
          // Views into the gradient buffer rather than the values.
          const HeadMap g(out->grad().data() + static_cast<std::size_t>(img) * p * d + hd * dk, p, dk,
                          Eigen::OuterStride<>(d));
          if (v->requires_grad()) head_mut(v->grad().data(), img, hd).noalias() += a.transpose() * g;
          if (!q->requires_grad() && !k->requires_grad()) continue;
          da.noalias() = g * head(*v, img, hd).transpose();
          // dS = A (dA - rowsum(A dA)), scaled.
          ds = a.cwiseProduct(da);
          for (int i = 0; i < p; ++i) {
            const float dot = ds.row(i).sum();
            ds.row(i) = a.row(i).cwiseProduct((da.row(i).array() - dot).matrix());
          }
          ds *= inv_scale;
          if (q->requires_grad()) head_mut(q->grad().data(), img, hd).noalias() += ds * head(*k, img, hd);
          if (k->requires_grad()) head_mut(k->grad().data(), img, hd).noalias() += ds.transpose() * head(*q, img, hd);
        }
    });
  }
  return out;
}

std::pair<TensorPtr, TensorPtr> lstm_step(Tape* tape, const TensorPtr& x, const TensorPtr& h,
                                          const TensorPtr& c, const LstmParams& params) {
  require_rank(*x, 2, "lstm_step", "input");
  require_rank(*h, 2, "lstm_step", "hidden state");
  require_same_shape(*h, *c, "lstm_step");
  const int n = x->dim(0), dx_dim = x->dim(1), s = h->dim(1);
  RAMAVT_REQUIRE(h->dim(0) == n, ErrorKind::kShape, "lstm_step: batch of state and input differ");
  RAMAVT_REQUIRE(params.w_input->rank() == 2 && params.w_input->dim(0) == dx_dim &&
              params.w_input->dim(1) == 4 * s,
          ErrorKind::kShape, "lstm_step: input weight must be [D, 4S], got " +
                                 shape_string(params.w_input->shape()));
  RAMAVT_REQUIRE(params.w_hidden->rank() == 2 && params.w_hidden->dim(0) == s &&
              params.w_hidden->dim(1) == 4 * s,
          ErrorKind::kShape, "lstm_step: hidden weight must be [S, 4S]");
  RAMAVT_REQUIRE(params.bias->size() == static_cast<std::size_t>(4 * s), ErrorKind::kShape,
          "lstm_step: bias must have 4S entries");

  // gates = x Wx + h Wh + b, activated in place.
  auto gates = std::make_shared<FloatBuffer>(static_cast<std::size_t>(n) * 4 * s);
  MatMap gm(gates->data(), n, 4 * s);
  gm.noalias() = ConstMatMap(x->data().data(), n, dx_dim) *
                 ConstMatMap(params.w_input->data().data(), dx_dim, 4 * s);
  gm.noalias() += ConstMatMap(h->data().data(), n, s) *
                  ConstMatMap(params.w_hidden->data().data(), s, 4 * s);
  auto h_next = make_tensor({n, s});
  auto c_next = make_tensor({n, s});
  auto tanh_c = std::make_shared<FloatBuffer>(static_cast<std::size_t>(n) * s);
  for (int r = 0; r < n; ++r) {
    float* g = gates->data() + static_cast<std::size_t>(r) * 4 * s;
    for (int j = 0; j < 4 * s; ++j) g[j] += (*params.bias)[j];
    for (int j = 0; j < s; ++j) {
      g[j] = sigmoidf(g[j]);
      g[s + j] = sigmoidf(g[s + j]);
      g[2 * s + j] = std::tanh(g[2 * s + j]);
      g[3 * s + j] = sigmoidf(g[3 * s + j]);
      const std::size_t o = static_cast<std::size_t>(r) * s + j;
      const float cn = g[s + j] * (*c)[o] + g[j] * g[2 * s + j];
      (*c_next)[o] = cn;
      (*tanh_c)[o] = std::tanh(cn);
      (*h_next)[o] = g[3 * s + j] * (*tanh_c)[o];
    }
  }

  const TensorPtr& wx = params.w_input;
  const TensorPtr& wh = params.w_hidden;
  const TensorPtr& b = params.bias;
  if (Tape::records(tape, {&x, &h, &c, &wx, &wh, &b})) {
    tape->record({x, h, c, wx, wh, b}, std::vector<TensorPtr>{h_next, c_next}, [=] {
      FloatBuffer dgates(static_cast<std::size_t>(n) * 4 * s);
      const auto& dh = h_next->grad();
      const auto& dc_out = c_next->grad();
      for (int r = 0; r < n; ++r) {
        const float* g = gates->data() + static_cast<std::size_t>(r) * 4 * s;
        float* dg = dgates.data() + static_cast<std::size_t>(r) * 4 * s;
        for (int j = 0; j < s; ++j) {
          const std::size_t o = static_cast<std::size_t>(r) * s + j;
          const float ig = g[j], fg = g[s + j], cg = g[2 * s + j], og = g[3 * s + j];
          const float tc = (*tanh_c)[o];
          const float dcn = dc_out[o] + dh[o] * og * (1.0f - tc * tc);
          dg[j] = dcn * cg * ig * (1.0f - ig);
          dg[s + j] = dcn * (*c)[o] * fg * (1.0f - fg);
          dg[2 * s + j] = dcn * ig * (1.0f - cg * cg);
          dg[3 * s + j] = dh[o] * tc * og * (1.0f - og);
          if (c->requires_grad()) c->grad()[o] += dcn * fg;
        }
      }
      ConstMatMap dgm(dgates.data(), n, 4 * s);
      if (x->requires_grad())
        MatMap(x->grad().data(), n, dx_dim).noalias() +=
            dgm * ConstMatMap(wx->data().data(), dx_dim, 4 * s).transpose();
      if (h->requires_grad())
        MatMap(h->grad().data(), n, s).noalias() +=
            dgm * ConstMatMap(wh->data().data(), s, 4 * s).transpose();
      if (wx->requires_grad())
        MatMap(wx->grad().data(), dx_dim, 4 * s).noalias() +=
            ConstMatMap(x->data().data(), n, dx_dim).transpose() * dgm;
      if (wh->requires_grad())
        MatMap(wh->grad().data(), s, 4 * s).noalias() +=
            ConstMatMap(h->data().data(), n, s).transpose() * dgm;
      if (b->requires_grad()) {
        auto& db = b->grad();
        for (int r = 0; r < n; ++r)
          for (int j = 0; j < 4 * s; ++j) db[j] += dgates[static_cast<std::size_t>(r) * 4 * s + j];
      }
    });
  }
  return {h_next, c_next};
}

}  // namespace ramavt::diffnet
