// Copyright (c) 2026 lgm-sv authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LGM_TENSOR_HPP_
#define LGM_TENSOR_HPP_

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lgm/common.hpp"
#include "lgm/rng.hpp"

namespace lgm {

// Dense row-major tensor of doubles. All internal arithmetic is 64-bit even
// though feature files carry 32-bit floats; gradient checks to 1e-4 relative
// error are not reliable in single precision.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_config(checked_numel(shape_) == data_.size(),
                 "tensor: shape does not match data length");
  }

  static Tensor zeros(std::vector<std::size_t> shape) {
    return Tensor(std::move(shape));
  }

  static Tensor full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  static Tensor randn(std::vector<std::size_t> shape, Rng& rng,
                      double stddev = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data_) v = rng.normal(0.0, stddev);
    return t;
  }

  static Tensor rand_uniform(std::vector<std::size_t> shape, Rng& rng,
                             double lo, double hi) {
    Tensor t(std::move(shape));
    for (double& v : t.data_) v = rng.uniform(lo, hi);
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j) {
    return data_[i * shape_[1] + j];
  }
  double at(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  double at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  std::string shape_str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape_.size(); ++i)
      os << shape_[i] << (i + 1 < shape_.size() ? "," : "");
    os << ")";
    return os.str();
  }

 private:
  static std::size_t checked_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
      check_config(e > 0, "tensor: zero extent");
      check_config(e == 0 || n <= static_cast<std::size_t>(-1) / e,
                   "tensor: extent product overflow");
      n *= e;
    }
    return n;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline void ensure_finite(const Tensor& t, const char* what) {
  for (double v : t.values())
    check_numeric(std::isfinite(v), std::string("non-finite value in ") + what);
}

inline void ensure_finite(double v, const char* what) {
  check_numeric(std::isfinite(v), std::string("non-finite value in ") + what);
}

// ---- elementwise and linear operations ----

inline Tensor add(const Tensor& a, const Tensor& b) {
  check_config(a.same_shape(b), "add: shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
  Tensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b[i];
  ensure_finite(out, "add");
  return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  check_config(a.same_shape(b), "sub: shape mismatch");
  Tensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b[i];
  ensure_finite(out, "sub");
  return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  check_config(a.same_shape(b), "mul: shape mismatch");
  Tensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b[i];
  ensure_finite(out, "mul");
  return out;
}

inline Tensor scale(const Tensor& a, double s) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= s;
  ensure_finite(out, "scale");
  return out;
}

inline Tensor relu(const Tensor& a) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i)
    out[i] = out[i] > 0.0 ? out[i] : 0.0;
  return out;
}

// (m,k) x (k,n) -> (m,n)
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  check_config(a.rank() == 2 && b.rank() == 2, "matmul: rank-2 inputs only");
  check_config(a.extent(1) == b.extent(0), "matmul: inner extents differ");
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a.at(i, p);
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += av * b.at(p, j);
    }
  }
  ensure_finite(out, "matmul");
  return out;
}

inline std::size_t conv_out_extent(std::size_t in, std::size_t filter,
                                   std::size_t stride, std::size_t pad) {
  check_config(in + 2 * pad >= filter, "conv2d: input smaller than filter");
  return (in + 2 * pad - filter) / stride + 1;
}

// input (C_in, H, W), weight (C_out, C_in, KH, KW), bias (C_out) or empty.
// Zero padding.
inline Tensor conv2d(const Tensor& input, const Tensor& weight,
                     const Tensor& bias, std::size_t stride_h,
                     std::size_t stride_w, std::size_t pad_h,
                     std::size_t pad_w) {
  check_config(input.rank() == 3, "conv2d: input must be (C,H,W)");
  check_config(weight.rank() == 4, "conv2d: weight must be (OC,IC,KH,KW)");
  check_config(weight.extent(1) == input.extent(0),
               "conv2d: channel mismatch");
  const std::size_t ci = input.extent(0), h = input.extent(1),
                    w = input.extent(2);
  const std::size_t co = weight.extent(0), kh = weight.extent(2),
                    kw = weight.extent(3);
  if (bias.numel() > 0)
    check_config(bias.numel() == co, "conv2d: bias extent mismatch");
  const std::size_t oh = conv_out_extent(h, kh, stride_h, pad_h);
  const std::size_t ow = conv_out_extent(w, kw, stride_w, pad_w);

  Tensor out({co, oh, ow});
  for (std::size_t oc = 0; oc < co; ++oc) {
    const double b = bias.numel() > 0 ? bias[oc] : 0.0;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = b;
        for (std::size_t ic = 0; ic < ci; ++ic) {
          for (std::size_t fy = 0; fy < kh; ++fy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * stride_h + fy) -
                                      static_cast<std::ptrdiff_t>(pad_h);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            const double* in_row = input.data() + (ic * h + iy) * w;
            const double* w_row =
                weight.data() + ((oc * ci + ic) * kh + fy) * kw;
            for (std::size_t fx = 0; fx < kw; ++fx) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(x * stride_w + fx) -
                  static_cast<std::ptrdiff_t>(pad_w);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              acc += in_row[ix] * w_row[fx];
            }
          }
        }
        out.at(oc, y, x) = acc;
      }
    }
  }
  ensure_finite(out, "conv2d");
  return out;
}

// Gradients of conv2d w.r.t. input, weight and bias given d(out).
inline void conv2d_backward(const Tensor& input, const Tensor& weight,
                            const Tensor& d_out, std::size_t stride_h,
                            std::size_t stride_w, std::size_t pad_h,
                            std::size_t pad_w, Tensor* d_input,
                            Tensor* d_weight, Tensor* d_bias) {
  const std::size_t ci = input.extent(0), h = input.extent(1),
                    w = input.extent(2);
  const std::size_t co = weight.extent(0), kh = weight.extent(2),
                    kw = weight.extent(3);
  const std::size_t oh = d_out.extent(1), ow = d_out.extent(2);

  if (d_input && !d_input->same_shape(input)) *d_input = Tensor(input.shape());
  if (d_weight && !d_weight->same_shape(weight))
    *d_weight = Tensor(weight.shape());
  if (d_bias && d_bias->numel() != co) *d_bias = Tensor({co});

  for (std::size_t oc = 0; oc < co; ++oc) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const double g = d_out.at(oc, y, x);
        if (d_bias) (*d_bias)[oc] += g;
        for (std::size_t ic = 0; ic < ci; ++ic) {
          for (std::size_t fy = 0; fy < kh; ++fy) {
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(y * stride_h + fy) -
                static_cast<std::ptrdiff_t>(pad_h);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t fx = 0; fx < kw; ++fx) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(x * stride_w + fx) -
                  static_cast<std::ptrdiff_t>(pad_w);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              if (d_input)
                d_input->at(ic, iy, ix) += g * weight.at(oc, ic, fy, fx);
              if (d_weight)
                d_weight->at(oc, ic, fy, fx) += g * input.at(ic, iy, ix);
            }
          }
        }
      }
    }
  }
}

// Sum over one axis; the axis is removed from the shape (a rank-1 input
// reduces to a rank-1 tensor of one element).
inline Tensor sum(const Tensor& t, std::size_t axis) {
  check_config(axis < t.rank(), "sum: axis out of range");
  std::vector<std::size_t> out_shape;
  for (std::size_t i = 0; i < t.rank(); ++i)
    if (i != axis) out_shape.push_back(t.extent(i));
  if (out_shape.empty()) out_shape.push_back(1);

  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= t.extent(i);
  for (std::size_t i = axis + 1; i < t.rank(); ++i) inner *= t.extent(i);
  const std::size_t n = t.extent(axis);

  Tensor out(out_shape);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < inner; ++i)
        out[o * inner + i] += t[(o * n + k) * inner + i];
  ensure_finite(out, "sum");
  return out;
}

inline Tensor mean(const Tensor& t, std::size_t axis) {
  return scale(sum(t, axis), 1.0 / static_cast<double>(t.extent(axis)));
}

inline double sum_all(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.values()) acc += v;
  return acc;
}

inline double dot(const Tensor& a, const Tensor& b) {
  check_config(a.numel() == b.numel(), "dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(const Tensor& a) { return std::sqrt(dot(a, a)); }

}  // namespace lgm

#endif  // LGM_TENSOR_HPP_
