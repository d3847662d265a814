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

// Small numeric building blocks shared by the attention layers.

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace stockgraph::nn {

/// Row-wise softmax with max subtraction.
inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

/// Backward of row-wise softmax: dlogits = p * (dp - sum(p * dp)).
inline Eigen::MatrixXd softmax_rows_backward(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& dprobs) {
  Eigen::MatrixXd out(probs.rows(), probs.cols());
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double dot = probs.row(r).dot(dprobs.row(r));
    out.row(r) = probs.row(r).array() * (dprobs.row(r).array() - dot);
  }
  return out;
}

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_grad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }
inline double leaky_relu_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
template <class Derived, class Rng>
void glorot_uniform(Eigen::MatrixBase<Derived>& m, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
  }
}

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace stockgraph::nn
