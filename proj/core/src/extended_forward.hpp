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

#include <vector>

#include "stockgraph/model.hpp"

namespace stockgraph::detail {

/// Scores of the model recomputed in long double. Mirrors forward_day; used as
/// the finite-difference side of gradient checks, where double roundoff in the
/// loss would swamp gradients near 1e-8.
std::vector<long double> extended_scores(const FeatureWindow& features, const RelationSnapshot& snapshot,
                                         const ModelParams& params, const ModelConfig& config);

/// Clamped binary cross-entropy over the labeled symbols, in long double.
long double extended_day_loss(const FeatureWindow& features, const RelationSnapshot& snapshot,
                              const DayLabels& labels, const ModelParams& params, const ModelConfig& config);

}  // namespace stockgraph::detail
