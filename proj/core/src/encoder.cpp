// Copyright 2026 The stockgraph Authors
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

#include "stockgraph/encoder.hpp"

#include <cmath>
#include <random>
#include <string>

#include "stockgraph/errors.hpp"
#include "stockgraph/nn.hpp"

namespace stockgraph {

namespace {

void check_params(const EncoderParams& p) {
  const auto heads = p.w_query.size();
  if (heads == 0 || p.w_key.size() != heads || p.w_value.size() != heads) {
    throw DimensionError("encoder needs the same non-zero number of query, key and value maps");
  }
  const auto d_in = p.w_in.cols();
  if (p.b_in.size() != d_in) throw DimensionError("encoder b_in length != d_in");
  if (d_in % 2 != 0) throw DimensionError("encoder d_in must be even for the sin/cos positional encoding");
  const auto d_hidden = p.w_query[0].cols();
  const auto d_v = p.w_value[0].cols();
  for (std::size_t h = 0; h < heads; ++h) {
    if (p.w_query[h].rows() != d_in || p.w_key[h].rows() != d_in || p.w_value[h].rows() != d_in ||
        p.w_query[h].cols() != d_hidden || p.w_key[h].cols() != d_hidden || p.w_value[h].cols() != d_v) {
      throw DimensionError("encoder head " + std::to_string(h) + " has inconsistent shapes");
    }
  }
  if (p.w_out.rows() != static_cast<Eigen::Index>(heads) * d_v) {
    throw DimensionError("encoder w_out rows != heads * d_v");
  }
}

}  // namespace

EncoderParams EncoderParams::zeros(const EncoderDims& d) {
  EncoderParams p;
  p.w_in = Eigen::MatrixXd::Zero(d.d_feat, d.d_in);
  p.b_in = Eigen::VectorXd::Zero(d.d_in);
  for (int h = 0; h < d.heads; ++h) {
    p.w_query.push_back(Eigen::MatrixXd::Zero(d.d_in, d.d_hidden));
    p.w_key.push_back(Eigen::MatrixXd::Zero(d.d_in, d.d_hidden));
    p.w_value.push_back(Eigen::MatrixXd::Zero(d.d_in, d.d_v));
  }
  p.w_out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.heads) * d.d_v, d.d_enc);
  return p;
}

EncoderParams EncoderParams::glorot(const EncoderDims& d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EncoderParams p = zeros(d);
  nn::glorot_uniform(p.w_in, d.d_feat, d.d_in, rng);
  for (int h = 0; h < d.heads; ++h) {
    nn::glorot_uniform(p.w_query[h], d.d_in, d.d_hidden, rng);
    nn::glorot_uniform(p.w_key[h], d.d_in, d.d_hidden, rng);
    nn::glorot_uniform(p.w_value[h], d.d_in, d.d_v, rng);
  }
  nn::glorot_uniform(p.w_out, p.w_out.rows(), d.d_enc, rng);
  return p;
}

EncoderDims EncoderParams::dims() const {
  EncoderDims d;
  d.d_feat = static_cast<int>(w_in.rows());
  d.d_in = static_cast<int>(w_in.cols());
  d.heads = static_cast<int>(w_query.size());
  d.d_hidden = w_query.empty() ? 0 : static_cast<int>(w_query[0].cols());
  d.d_v = w_value.empty() ? 0 : static_cast<int>(w_value[0].cols());
  d.d_enc = static_cast<int>(w_out.cols());
  return d;
}

Eigen::MatrixXd positional_encoding(int rows, int d_in) {
  if (rows < 1) throw DimensionError("positional encoding needs >= 1 position");
  if (d_in < 2 || d_in % 2 != 0) throw DimensionError("positional encoding width d_in must be even");
  Eigen::MatrixXd pe(rows, d_in);
  for (int r = 0; r < rows; ++r) {
    const double p = r + 1;
    for (int i = 0; 2 * i < d_in; ++i) {
      const double angle = p / std::pow(10000.0, 2.0 * i / d_in);
      pe(r, 2 * i) = std::sin(angle);
      pe(r, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

EncodedSequence encode_history(const FeatureWindow& x, const EncoderParams& params, bool skip_attention,
                               EncoderCache* cache) {
  check_params(params);
  const auto d_feat = params.w_in.rows();
  const int lookback = x.lookback();
  for (std::size_t s = 0; s < x.data.size(); ++s) {
    if (x.data[s].rows() != lookback || x.data[s].cols() != d_feat) {
      throw DimensionError("feature window for " + x.symbols[s] + " does not match encoder input shape");
    }
    if (!x.data[s].allFinite()) throw ValidationError("non-finite features for " + x.symbols[s]);
  }

  const auto heads = params.w_query.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.w_in.cols()));
  const Eigen::MatrixXd pe = lookback > 0 ? positional_encoding(lookback, static_cast<int>(params.w_in.cols()))
                                          : Eigen::MatrixXd();

  EncodedSequence out;
  out.h.reserve(x.data.size());
  if (cache) {
    cache->stocks.clear();
    cache->stocks.reserve(x.data.size());
    cache->skip_attention = skip_attention;
  }

  for (const auto& input : x.data) {
    Eigen::MatrixXd h = input * params.w_in;
    h.rowwise() += params.b_in.transpose();
    h += pe;

    if (skip_attention) {
      out.h.push_back(h);
      if (cache) cache->stocks.push_back({input, std::move(h), {}, {}, {}, {}, {}});
      continue;
    }

    EncoderCache::Stock st;
    const auto d_v = params.w_value[0].cols();
    st.concat.resize(lookback, static_cast<Eigen::Index>(heads) * d_v);
    for (std::size_t k = 0; k < heads; ++k) {
      Eigen::MatrixXd q = h * params.w_query[k];
      Eigen::MatrixXd key = h * params.w_key[k];
      Eigen::MatrixXd v = h * params.w_value[k];
      Eigen::MatrixXd attn = nn::softmax_rows((q * key.transpose()) * scale);
      st.concat.middleCols(static_cast<Eigen::Index>(k) * d_v, d_v) = attn * v;
      if (cache) {
        st.q.push_back(std::move(q));
        st.k.push_back(std::move(key));
        st.v.push_back(std::move(v));
        st.attn.push_back(std::move(attn));
      }
    }
    out.h.push_back(st.concat * params.w_out);
    if (cache) {
      st.input = input;
      st.h = std::move(h);
      cache->stocks.push_back(std::move(st));
    }
  }
  return out;
}

void encoder_backward(const EncoderCache& cache, const EncoderParams& params,
                      const std::vector<Eigen::MatrixXd>& d_out, EncoderParams& grads) {
  if (d_out.size() != cache.stocks.size()) throw DimensionError("encoder gradient count != stock count");
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.w_in.cols()));
  const auto heads = params.w_query.size();

  for (std::size_t s = 0; s < cache.stocks.size(); ++s) {
    const auto& st = cache.stocks[s];
    Eigen::MatrixXd d_h;
    if (cache.skip_attention) {
      d_h = d_out[s];
    } else {
      grads.w_out.noalias() += st.concat.transpose() * d_out[s];
      const Eigen::MatrixXd d_concat = d_out[s] * params.w_out.transpose();
      const auto d_v = params.w_value[0].cols();
      d_h = Eigen::MatrixXd::Zero(st.h.rows(), st.h.cols());
      for (std::size_t k = 0; k < heads; ++k) {
        const auto d_head = d_concat.middleCols(static_cast<Eigen::Index>(k) * d_v, d_v);
        const Eigen::MatrixXd d_attn = d_head * st.v[k].transpose();
        const Eigen::MatrixXd d_value = st.attn[k].transpose() * d_head;
        const Eigen::MatrixXd d_logits = nn::softmax_rows_backward(st.attn[k], d_attn) * scale;
        const Eigen::MatrixXd d_query = d_logits * st.k[k];
        const Eigen::MatrixXd d_key = d_logits.transpose() * st.q[k];
        grads.w_query[k].noalias() += st.h.transpose() * d_query;
        grads.w_key[k].noalias() += st.h.transpose() * d_key;
        grads.w_value[k].noalias() += st.h.transpose() * d_value;
        d_h.noalias() += d_query * params.w_query[k].transpose();
        d_h.noalias() += d_key * params.w_key[k].transpose();
        d_h.noalias() += d_value * params.w_value[k].transpose();
      }
    }
    grads.w_in.noalias() += st.input.transpose() * d_h;
    grads.b_in += d_h.colwise().sum().transpose();
  }
}

}  // namespace stockgraph
