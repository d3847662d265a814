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

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "stockgraph/market_data.hpp"

namespace stockgraph {

struct EncoderDims {
  int d_feat = kFeatureChannels;
  int d_in = 128;
  int d_hidden = 512;
  int d_v = 128;
  int heads = 8;
  int d_enc = 128;
};

/// Affine input projection, per-head query/key/value maps and the output projection.
struct EncoderParams {
  Eigen::MatrixXd w_in;  // d_feat x d_in
  Eigen::VectorXd b_in;  // d_in
  std::vector<Eigen::MatrixXd> w_query;  // heads x (d_in x d_hidden)
  std::vector<Eigen::MatrixXd> w_key;    // heads x (d_in x d_hidden)
  std::vector<Eigen::MatrixXd> w_value;  // heads x (d_in x d_v)
  Eigen::MatrixXd w_out;                 // (heads * d_v) x d_enc

  static EncoderParams zeros(const EncoderDims& dims);
  static EncoderParams glorot(const EncoderDims& dims, std::uint64_t seed);
  EncoderDims dims() const;

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    f("encoder.w_in", self.w_in);
    f("encoder.b_in", self.b_in);
    for (std::size_t h = 0; h < self.w_query.size(); ++h) {
      const auto tag = std::to_string(h);
      f("encoder.w_query." + tag, self.w_query[h]);
      f("encoder.w_key." + tag, self.w_key[h]);
      f("encoder.w_value." + tag, self.w_value[h]);
    }
    f("encoder.w_out", self.w_out);
  }
};

/// Per-stock lookback x d_enc matrices.
struct EncodedSequence {
  std::vector<Eigen::MatrixXd> h;
};

/// Forward intermediates needed by encoder_backward.
struct EncoderCache {
  struct Stock {
    Eigen::MatrixXd input;   // lookback x d_feat
    Eigen::MatrixXd h;       // lookback x d_in, after positional encoding
    std::vector<Eigen::MatrixXd> q, k, v, attn;
    Eigen::MatrixXd concat;  // lookback x heads * d_v
  };
  std::vector<Stock> stocks;
  bool skip_attention = false;
};

/// Row p (p = 1..rows) holds sin/cos pairs at frequency 1 / 10000^(2i / d_in).
Eigen::MatrixXd positional_encoding(int rows, int d_in);

/// Affine input projection plus positional encoding, then one block of
/// multi-head self-attention over each stock's own positions (scaled by
/// 1/sqrt(d_in)) and the output projection. With `skip_attention` the
/// projected input is returned as is and the output width is d_in.
EncodedSequence encode_history(const FeatureWindow& x, const EncoderParams& params, bool skip_attention = false,
                               EncoderCache* cache = nullptr);

/// Accumulates parameter gradients given dLoss/dOutput.
void encoder_backward(const EncoderCache& cache, const EncoderParams& params,
                      const std::vector<Eigen::MatrixXd>& d_out, EncoderParams& grads);

}  // namespace stockgraph
