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

#include "extended_forward.hpp"

#include <algorithm>
#include <cmath>

#include "stockgraph/errors.hpp"

namespace stockgraph::detail {

namespace {

using Real = long double;
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

Mat up(const Eigen::MatrixXd& m) { return m.cast<Real>(); }
Vec up(const Eigen::VectorXd& v) { return v.cast<Real>(); }

Real elu(Real x) { return x > 0 ? x : std::expm1(x); }

Mat softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Real m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Mat encode(const Eigen::MatrixXd& input, const EncoderParams& p, bool skip_attention) {
  const auto d_in = p.w_in.cols();
  Mat h = up(input) * up(p.w_in);
  h.rowwise() += up(p.b_in).transpose();
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    const Real pos = static_cast<Real>(r + 1);
    for (Eigen::Index i = 0; 2 * i < d_in; ++i) {
      const Real angle = pos / std::pow(Real(10000), Real(2 * i) / static_cast<Real>(d_in));
      h(r, 2 * i) += std::sin(angle);
      h(r, 2 * i + 1) += std::cos(angle);
    }
  }
  if (skip_attention) return h;

  const Real scale = 1 / std::sqrt(static_cast<Real>(d_in));
  const auto heads = static_cast<Eigen::Index>(p.w_query.size());
  const auto d_v = p.w_value[0].cols();
  Mat concat(h.rows(), heads * d_v);
  for (Eigen::Index k = 0; k < heads; ++k) {
    const Mat q = h * up(p.w_query[k]);
    const Mat key = h * up(p.w_key[k]);
    const Mat v = h * up(p.w_value[k]);
    concat.middleCols(k * d_v, d_v) = softmax_rows((q * key.transpose()) * scale) * v;
  }
  return concat * up(p.w_out);
}

Mat relation_messages(const Mat& h, const std::vector<std::vector<int>>& neighbors, const RelationTgaParams& p,
                      Real slope, bool uniform) {
  const auto n = h.rows();
  const auto width = h.cols();
  const auto heads = static_cast<Eigen::Index>(p.attention.size());
  Mat concat = Mat::Zero(n, heads * width);
  for (Eigen::Index v = 0; v < n; ++v) {
    const auto& nbrs = neighbors[v];
    if (nbrs.empty()) continue;
    const auto m = static_cast<Eigen::Index>(nbrs.size());
    for (Eigen::Index k = 0; k < heads; ++k) {
      Vec alpha(m);
      if (uniform) {
        alpha.setConstant(Real(1) / static_cast<Real>(m));
      } else {
        const Vec a = up(p.attention[k]);
        for (Eigen::Index j = 0; j < m; ++j) {
          const Real e = a.head(width).dot(h.row(nbrs[j]).transpose()) + a.tail(width).dot(h.row(v).transpose());
          alpha(j) = e > 0 ? e : slope * e;
        }
        alpha = (alpha.array() - alpha.maxCoeff()).exp();
        alpha /= alpha.sum();
      }
      Vec agg = Vec::Zero(width);
      for (Eigen::Index j = 0; j < m; ++j) agg += alpha(j) * h.row(nbrs[j]).transpose();
      for (Eigen::Index c = 0; c < width; ++c) concat(v, k * width + c) = elu(agg(c));
    }
  }
  return concat * up(p.w_out);
}

}  // namespace

std::vector<long double> extended_scores(const FeatureWindow& features, const RelationSnapshot& snapshot,
                                         const ModelParams& params, const ModelConfig& config) {
  if (snapshot.symbols != features.symbols) throw IndexError("snapshot symbols do not align with the features");
  const auto n = static_cast<Eigen::Index>(features.size());
  const bool skip = config.ablation == Ablation::kNoEnc;

  Mat flat;
  for (Eigen::Index s = 0; s < n; ++s) {
    const Mat e = encode(features.data[s], params.encoder, skip);
    if (s == 0) flat.resize(n, e.size());
    // Positions oldest first, each position's vector contiguous.
    for (Eigen::Index t = 0; t < e.rows(); ++t) flat.row(s).segment(t * e.cols(), e.cols()) = e.row(t);
  }

  const Real slope = params.tga.negative_slope;
  const bool uniform = config.ablation == Ablation::kNoTemp;
  std::array<Mat, 3> sources;
  sources[kSelf] = flat * up(params.hga.w_self);
  sources[kSelf].rowwise() += up(params.hga.b_self).transpose();
  sources[kPosSource] = relation_messages(flat, neighbor_lists(snapshot, Relation::kPos, config.neighbor_hops),
                                          params.tga.pos, slope, uniform);
  sources[kNegSource] = relation_messages(flat, neighbor_lists(snapshot, Relation::kNeg, config.neighbor_hops),
                                          params.tga.neg, slope, uniform);

  std::array<Real, 3> beta{Real(1) / 3, Real(1) / 3, Real(1) / 3};
  if (config.ablation != Ablation::kNoHete) {
    std::array<Real, 3> w{};
    for (int r = 0; r < 3; ++r) {
      Mat pre = sources[r] * up(params.hga.w);
      pre.rowwise() += up(params.hga.b).transpose();
      w[r] = (Mat(pre.array().tanh()) * up(params.hga.q)).sum() / static_cast<Real>(n);
    }
    const Real top = std::max({w[0], w[1], w[2]});
    Real norm = 0;
    for (int r = 0; r < 3; ++r) norm += (beta[r] = std::exp(w[r] - top));
    for (auto& b : beta) b /= norm;
  }
  const Mat z = beta[0] * sources[0] + beta[1] * sources[1] + beta[2] * sources[2];
  const Vec logits = z * up(params.classifier_w);

  std::vector<long double> out(static_cast<std::size_t>(n));
  for (Eigen::Index v = 0; v < n; ++v) {
    out[v] = Real(1) / (Real(1) + std::exp(-(logits(v) + static_cast<Real>(params.classifier_b(0)))));
  }
  return out;
}

long double extended_day_loss(const FeatureWindow& features, const RelationSnapshot& snapshot,
                              const DayLabels& labels, const ModelParams& params, const ModelConfig& config) {
  const auto scores = extended_scores(features, snapshot, params, config);
  const Real eps = kScoreClamp;
  Real loss = 0;
  for (const auto& [symbol, y] : labels.labels) {
    const auto it = std::find(features.symbols.begin(), features.symbols.end(), symbol);
    if (it == features.symbols.end()) throw CoverageError("no score for labeled symbol " + symbol);
    const Real p = std::clamp(scores[it - features.symbols.begin()], eps, 1 - eps);
    loss -= y == 1 ? std::log(p) : std::log(1 - p);
  }
  return loss;
}

}  // namespace stockgraph::detail
