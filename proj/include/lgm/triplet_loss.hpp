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

#ifndef LGM_TRIPLET_LOSS_HPP_
#define LGM_TRIPLET_LOSS_HPP_

#include <cmath>

#include "lgm/tensor.hpp"

namespace lgm {

// Hinge triplet loss on length-normalized vectors with cosine-derived
// distance d(u, v) = 1 - cos(u, v):
//   L = max(0, d(a, p) - d(a, n) + margin)
// Subgradients are zero in the inactive region and on the hinge kink.
struct TripletValue {
  double loss = 0.0;
  bool active = false;
  Tensor d_anchor;
  Tensor d_positive;
  Tensor d_negative;
};

namespace detail {

// d/du of (1 - u.v / (|u||v|)): returns gradient w.r.t. u.
inline Tensor cosine_distance_grad_u(const Tensor& u, const Tensor& v,
                                     double norm_u, double norm_v,
                                     double cos_uv) {
  Tensor g(u.shape());
  for (std::size_t i = 0; i < u.numel(); ++i)
    g[i] = -(v[i] / (norm_u * norm_v) - cos_uv * u[i] / (norm_u * norm_u));
  return g;
}

}  // namespace detail

inline TripletValue triplet_loss(const Tensor& anchor, const Tensor& positive,
                                 const Tensor& negative, double margin,
                                 bool want_gradients = true) {
  check_config(margin >= 0.0, "triplet: margin must be >= 0");
  check_config(anchor.numel() == positive.numel() &&
                   anchor.numel() == negative.numel(),
               "triplet: dimension mismatch");
  const double na = norm2(anchor), np = norm2(positive), nn = norm2(negative);
  check_numeric(na > 0.0 && np > 0.0 && nn > 0.0,
                "triplet: zero-norm input to length normalization");

  const double cos_ap = dot(anchor, positive) / (na * np);
  const double cos_an = dot(anchor, negative) / (na * nn);
  const double d_ap = 1.0 - cos_ap;
  const double d_an = 1.0 - cos_an;
  const double raw = d_ap - d_an + margin;

  TripletValue out;
  out.active = raw > 0.0;
  out.loss = out.active ? raw : 0.0;
  if (!want_gradients) return out;

  out.d_anchor = Tensor(anchor.shape());
  out.d_positive = Tensor(positive.shape());
  out.d_negative = Tensor(negative.shape());
  if (out.active) {
    const Tensor ga_p =
        detail::cosine_distance_grad_u(anchor, positive, na, np, cos_ap);
    const Tensor ga_n =
        detail::cosine_distance_grad_u(anchor, negative, na, nn, cos_an);
    out.d_anchor = sub(ga_p, ga_n);
    out.d_positive =
        detail::cosine_distance_grad_u(positive, anchor, np, na, cos_ap);
    out.d_negative = scale(
        detail::cosine_distance_grad_u(negative, anchor, nn, na, cos_an), -1.0);
  }
  return out;
}

}  // namespace lgm

#endif  // LGM_TRIPLET_LOSS_HPP_
