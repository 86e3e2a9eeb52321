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

#ifndef LGM_ENCODER_HPP_
#define LGM_ENCODER_HPP_

#include <limits>
#include <string>
#include <vector>

#include "lgm/param_set.hpp"
#include "lgm/rng.hpp"
#include "lgm/tensor.hpp"

namespace lgm {

// Residual convolutional encoder: a stack of stages, each a strided 5x5
// transition convolution (doubling channels) followed by identity-shortcut
// residual blocks, then global average pooling, an affine projection and
// length normalization. Stage count and widths are configuration; the
// desk-scale default is three stages with channels doubling (8, 16, 32).
struct EncoderConfig {
  std::size_t input_feat_dim = 20;
  std::vector<std::size_t> block_channels = {8, 16, 32};
  std::size_t blocks_per_stage = 1;
  std::size_t transition_filter_h = 5;
  std::size_t transition_filter_w = 5;
  std::size_t transition_stride_h = 2;
  std::size_t transition_stride_w = 2;
  std::size_t block_filter = 3;  // residual branch convs, stride 1
  std::size_t embedding_dim = 64;
  std::size_t min_input_frames = 10;
  bool normalize_embeddings = true;

  void validate() const {
    check_config(input_feat_dim >= 1, "encoder: input_feat_dim must be >= 1");
    check_config(!block_channels.empty(), "encoder: block_channels empty");
    for (std::size_t c : block_channels)
      check_config(c >= 1, "encoder: zero channel count");
    check_config(blocks_per_stage >= 1, "encoder: blocks_per_stage must be >= 1");
    check_config(embedding_dim >= 1, "encoder: embedding_dim must be >= 1");
    check_config(transition_stride_h >= 1 && transition_stride_w >= 1,
                 "encoder: zero stride");
    check_config(block_filter % 2 == 1, "encoder: block filter must be odd");
    check_config(min_input_frames >= 1, "encoder: min_input_frames must be >= 1");
    // Spatial extents must stay >= 1 through every stride at the declared
    // minimum input size.
    std::size_t h = min_input_frames, w = input_feat_dim;
    for (std::size_t s = 0; s < block_channels.size(); ++s) {
      h = conv_out_extent(h, transition_filter_h, transition_stride_h,
                          transition_filter_h / 2);
      w = conv_out_extent(w, transition_filter_w, transition_stride_w,
                          transition_filter_w / 2);
      check_config(h >= 1 && w >= 1, "encoder: map collapses below 1x1");
    }
  }

  std::size_t num_stages() const { return block_channels.size(); }
};

namespace enc_names {

inline std::string trans_w(std::size_t s) {
  return "enc.stage" + std::to_string(s) + ".trans.w";
}
inline std::string trans_b(std::size_t s) {
  return "enc.stage" + std::to_string(s) + ".trans.b";
}
inline std::string block_w(std::size_t s, std::size_t b, int conv) {
  return "enc.stage" + std::to_string(s) + ".block" + std::to_string(b) +
         ".conv" + std::to_string(conv) + ".w";
}
inline std::string block_b(std::size_t s, std::size_t b, int conv) {
  return "enc.stage" + std::to_string(s) + ".block" + std::to_string(b) +
         ".conv" + std::to_string(conv) + ".b";
}
inline const char* proj_w() { return "enc.proj.w"; }
inline const char* proj_b() { return "enc.proj.b"; }

}  // namespace enc_names

class Encoder {
 public:
  // One residual block: h = conv2(relu(conv1(x))) + x. The shortcut is the
  // identity, so both convs preserve the map shape.
  struct BlockCache {
    Tensor input;
    Tensor conv1_out;   // pre-activation
    Tensor relu1_out;
    Tensor residual;    // conv2 output, i.e. F(x)
  };

  struct StageCache {
    Tensor trans_in;
    Tensor trans_pre;   // transition conv output, pre-activation
    Tensor trans_out;   // after relu
    std::vector<BlockCache> blocks;
  };

  struct Cache {
    std::vector<StageCache> stages;
    Tensor last_map;
    Tensor pooled;       // (C)
    Tensor projected;    // (embedding_dim), pre-normalization
    double norm = 0.0;
    std::size_t map_h = 0, map_w = 0;
  };

  explicit Encoder(EncoderConfig config) : config_(std::move(config)) {
    config_.validate();
  }

  const EncoderConfig& config() const { return config_; }

  // Fan-in-scaled uniform init with explicit seed; biases start at zero.
  ParamSet init_params(Rng& rng) const {
    ParamSet params;
    std::size_t in_ch = 1;
    for (std::size_t s = 0; s < config_.num_stages(); ++s) {
      const std::size_t out_ch = config_.block_channels[s];
      add_conv(params, enc_names::trans_w(s), enc_names::trans_b(s), out_ch,
               in_ch, config_.transition_filter_h, config_.transition_filter_w,
               rng);
      for (std::size_t b = 0; b < config_.blocks_per_stage; ++b) {
        add_conv(params, enc_names::block_w(s, b, 1), enc_names::block_b(s, b, 1),
                 out_ch, out_ch, config_.block_filter, config_.block_filter, rng);
        add_conv(params, enc_names::block_w(s, b, 2), enc_names::block_b(s, b, 2),
                 out_ch, out_ch, config_.block_filter, config_.block_filter, rng);
      }
      in_ch = out_ch;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(in_ch));
    params.add(enc_names::proj_w(),
               Tensor::rand_uniform({config_.embedding_dim, in_ch}, rng, -bound,
                                    bound));
    params.add(enc_names::proj_b(), Tensor({config_.embedding_dim}));
    return params;
  }

  static Tensor res_block_forward(const Tensor& x, const Tensor& w1,
                                  const Tensor& b1, const Tensor& w2,
                                  const Tensor& b2, std::size_t pad,
                                  BlockCache* cache = nullptr) {
    Tensor c1 = conv2d(x, w1, b1, 1, 1, pad, pad);
    Tensor r1 = relu(c1);
    Tensor f = conv2d(r1, w2, b2, 1, 1, pad, pad);
    check_config(f.same_shape(x), "res block: F(x) does not preserve shape");
    Tensor out = add(f, x);
    if (cache) {
      cache->input = x;
      cache->conv1_out = std::move(c1);
      cache->relu1_out = std::move(r1);
      cache->residual = std::move(f);
    }
    return out;
  }

  // features: (frames, feat_dim). Returns the unit-norm embedding (or the
  // raw projection when normalization is disabled).
  Tensor encode(const ParamSet& params, const Tensor& features,
                Cache* cache = nullptr) const {
    check_config(features.rank() == 2, "encode: features must be (frames, dim)");
    check_config(features.extent(1) == config_.input_feat_dim,
                 "encode: feature dim mismatch");
    check_data(features.extent(0) >= config_.min_input_frames,
               "encode: input too short (" +
                   std::to_string(features.extent(0)) + " < " +
                   std::to_string(config_.min_input_frames) + " frames)");

    Tensor map({1, features.extent(0), features.extent(1)}, features.values());
    if (cache) cache->stages.resize(config_.num_stages());

    const std::size_t pad_h = config_.transition_filter_h / 2;
    const std::size_t pad_w = config_.transition_filter_w / 2;
    const std::size_t bpad = config_.block_filter / 2;

    for (std::size_t s = 0; s < config_.num_stages(); ++s) {
      StageCache* sc = cache ? &cache->stages[s] : nullptr;
      if (sc) sc->trans_in = map;
      Tensor pre = conv2d(map, params.value(enc_names::trans_w(s)),
                          params.value(enc_names::trans_b(s)),
                          config_.transition_stride_h, config_.transition_stride_w,
                          pad_h, pad_w);
      map = relu(pre);
      if (sc) {
        sc->trans_pre = std::move(pre);
        sc->trans_out = map;
        sc->blocks.resize(config_.blocks_per_stage);
      }
      for (std::size_t b = 0; b < config_.blocks_per_stage; ++b) {
        map = res_block_forward(map, params.value(enc_names::block_w(s, b, 1)),
                                params.value(enc_names::block_b(s, b, 1)),
                                params.value(enc_names::block_w(s, b, 2)),
                                params.value(enc_names::block_b(s, b, 2)), bpad,
                                sc ? &sc->blocks[b] : nullptr);
      }
    }

    // Global average pool over the remaining time-frequency extent.
    const std::size_t c = map.extent(0), h = map.extent(1), w = map.extent(2);
    Tensor pooled({c});
    const double inv_hw = 1.0 / static_cast<double>(h * w);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      const double* base = map.data() + ch * h * w;
      for (std::size_t i = 0; i < h * w; ++i) acc += base[i];
      pooled[ch] = acc * inv_hw;
    }

    const Tensor& pw = params.value(enc_names::proj_w());
    const Tensor& pb = params.value(enc_names::proj_b());
    Tensor projected({config_.embedding_dim});
    for (std::size_t i = 0; i < config_.embedding_dim; ++i) {
      double acc = pb[i];
      for (std::size_t j = 0; j < c; ++j) acc += pw.at(i, j) * pooled[j];
      projected[i] = acc;
    }
    ensure_finite(projected, "encode projection");

    Tensor out = projected;
    double norm = 1.0;
    if (config_.normalize_embeddings) {
      norm = norm2(projected);
      check_numeric(norm > 0.0, "encode: zero-norm embedding");
      for (std::size_t i = 0; i < out.numel(); ++i) out[i] /= norm;
    }

    if (cache) {
      cache->last_map = std::move(map);
      cache->pooled = std::move(pooled);
      cache->projected = std::move(projected);
      cache->norm = norm;
      cache->map_h = h;
      cache->map_w = w;
    }
    return out;
  }

  // Smallest |pre-activation| across every relu in the cached forward pass.
  // Finite-difference probes of step eps straddle a relu kink whenever this
  // drops below the induced pre-activation shift, so gradient certification
  // skips configurations that evaluate too close to one.
  static double min_relu_preactivation(const Cache& cache) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& sc : cache.stages) {
      for (std::size_t i = 0; i < sc.trans_pre.numel(); ++i)
        m = std::min(m, std::abs(sc.trans_pre[i]));
      for (const auto& bc : sc.blocks)
        for (std::size_t i = 0; i < bc.conv1_out.numel(); ++i)
          m = std::min(m, std::abs(bc.conv1_out[i]));
    }
    return m;
  }

  // Backpropagates d_embedding through the cached forward pass, accumulating
  // parameter gradients into grads (which must hold the same entries as the
  // forward params). d_features, when given, receives the input gradient.
  void encode_backward(const ParamSet& params, const Cache& cache,
                       const Tensor& d_embedding, ParamSet& grads,
                       Tensor* d_features = nullptr) const {
    check_config(d_embedding.numel() == config_.embedding_dim,
                 "encode_backward: upstream gradient dim mismatch");

    // Length normalization: e = v / |v|  =>  dv = (de - (de . e) e) / |v|.
    Tensor d_proj({config_.embedding_dim});
    if (config_.normalize_embeddings) {
      const double inv_norm = 1.0 / cache.norm;
      double de_dot_e = 0.0;
      for (std::size_t i = 0; i < d_embedding.numel(); ++i)
        de_dot_e += d_embedding[i] * cache.projected[i] * inv_norm;
      for (std::size_t i = 0; i < d_embedding.numel(); ++i)
        d_proj[i] =
            (d_embedding[i] - de_dot_e * cache.projected[i] * inv_norm) *
            inv_norm;
    } else {
      d_proj = d_embedding;
    }

    const Tensor& pw = params.value(enc_names::proj_w());
    const std::size_t c = cache.pooled.numel();
    Tensor& d_pw = grads.grad(enc_names::proj_w());
    Tensor& d_pb = grads.grad(enc_names::proj_b());
    Tensor d_pooled({c});
    for (std::size_t i = 0; i < config_.embedding_dim; ++i) {
      d_pb[i] += d_proj[i];
      for (std::size_t j = 0; j < c; ++j) {
        d_pw.at(i, j) += d_proj[i] * cache.pooled[j];
        d_pooled[j] += d_proj[i] * pw.at(i, j);
      }
    }

    const std::size_t h = cache.map_h, w = cache.map_w;
    Tensor d_map({c, h, w});
    const double inv_hw = 1.0 / static_cast<double>(h * w);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double g = d_pooled[ch] * inv_hw;
      double* base = d_map.data() + ch * h * w;
      for (std::size_t i = 0; i < h * w; ++i) base[i] = g;
    }

    const std::size_t pad_h = config_.transition_filter_h / 2;
    const std::size_t pad_w = config_.transition_filter_w / 2;
    const std::size_t bpad = config_.block_filter / 2;

    for (std::size_t si = config_.num_stages(); si-- > 0;) {
      const StageCache& sc = cache.stages[si];
      for (std::size_t bi = config_.blocks_per_stage; bi-- > 0;) {
        const BlockCache& bc = sc.blocks[bi];
        // d(out) flows through both the residual branch and the shortcut.
        Tensor d_r1;
        conv2d_backward(bc.relu1_out, params.value(enc_names::block_w(si, bi, 2)),
                        d_map, 1, 1, bpad, bpad, &d_r1,
                        &grads.grad(enc_names::block_w(si, bi, 2)),
                        &grads.grad(enc_names::block_b(si, bi, 2)));
        for (std::size_t i = 0; i < d_r1.numel(); ++i)
          if (bc.conv1_out[i] <= 0.0) d_r1[i] = 0.0;
        Tensor d_block_in;
        conv2d_backward(bc.input, params.value(enc_names::block_w(si, bi, 1)),
                        d_r1, 1, 1, bpad, bpad, &d_block_in,
                        &grads.grad(enc_names::block_w(si, bi, 1)),
                        &grads.grad(enc_names::block_b(si, bi, 1)));
        for (std::size_t i = 0; i < d_map.numel(); ++i)
          d_map[i] += d_block_in[i];
      }
      for (std::size_t i = 0; i < d_map.numel(); ++i)
        if (sc.trans_pre[i] <= 0.0) d_map[i] = 0.0;
      const bool want_input = si > 0 || d_features != nullptr;
      Tensor d_in;
      conv2d_backward(sc.trans_in, params.value(enc_names::trans_w(si)), d_map,
                      config_.transition_stride_h, config_.transition_stride_w,
                      pad_h, pad_w, want_input ? &d_in : nullptr,
                      &grads.grad(enc_names::trans_w(si)),
                      &grads.grad(enc_names::trans_b(si)));
      if (want_input) d_map = std::move(d_in);
    }

    if (d_features) {
      *d_features = Tensor({d_map.extent(1), d_map.extent(2)},
                           std::vector<double>(d_map.values()));
    }
  }

 private:
  static void add_conv(ParamSet& params, const std::string& w_name,
                       const std::string& b_name, std::size_t out_ch,
                       std::size_t in_ch, std::size_t kh, std::size_t kw,
                       Rng& rng) {
    const double fan_in = static_cast<double>(in_ch * kh * kw);
    const double bound = std::sqrt(6.0 / fan_in);
    params.add(w_name,
               Tensor::rand_uniform({out_ch, in_ch, kh, kw}, rng, -bound, bound));
    params.add(b_name, Tensor({out_ch}));
  }

  EncoderConfig config_;
};

}  // namespace lgm

#endif  // LGM_ENCODER_HPP_
