// Copyright 2026 The sweepret Authors
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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sweepret/autodiff.hpp"
#include "sweepret/sampler.hpp"

namespace sweepret {

/// How the score matrix is scaled before the softmax: multiplied by e^tau
/// (kExpTau) or divided by tau (kInverseTau).
enum class LogitScale { kExpTau, kInverseTau };

/// Which loss terms and which positives a run trains with.
///  kSce: same-frame positives, no triplet term.
///  kP1:  probe-distance positives, no triplet term.
///  kP2:  same-frame positives plus the triplet term.
///  kFull: probe-distance positives plus the triplet term.
enum class AblationMode { kSce, kP1, kP2, kFull };

std::string_view to_string(AblationMode mode);
/// Accepts "sce", "p1", "p2", "full" and the table names "SCE", "+P1", "+P2",
/// "+P1+P2".
AblationMode parse_ablation_mode(std::string_view text);
/// "SCE", "+P1", "+P2", "+P1+P2".
std::string_view table_name(AblationMode mode);
bool uses_probe_labels(AblationMode mode);
bool uses_triplet(AblationMode mode);

std::string_view to_string(LogitScale scale);
LogitScale parse_logit_scale(std::string_view text);

/// Similarity the triplet term is evaluated on inside total_loss: the raw
/// score-matrix entries (kDot) or the cosine of the two embeddings (kCosine,
/// bounded in [-1, 1]).
enum class TripletSimilarity { kDot, kCosine };
std::string_view to_string(TripletSimilarity similarity);
TripletSimilarity parse_triplet_similarity(std::string_view text);

struct LossConfig {
  double tau = 0.1;
  double triplet_weight = 0.1;
  double triplet_distance_norm_mm = 20.0;
  LogitScale logit_scale = LogitScale::kExpTau;
  /// Divide the symmetric CE by the batch size (mean over the b1 + b2 terms)
  /// instead of only by 2.
  bool batch_mean = true;
  TripletSimilarity triplet_similarity = TripletSimilarity::kCosine;
  AblationMode mode = AblationMode::kFull;

  double logit_factor() const;
  bool operator==(const LossConfig&) const = default;
};

void validate(const LossConfig& config);
nlohmann::json to_json(const LossConfig& config);

/// [b1,b2] dot products of z1 [b1,d] and z2 [b2,d] with alpha appended as
/// the last row and column -> [b1+1, b2+1].
template <typename T>
Var<T> score_matrix(Var<T> z1, Var<T> z2, Var<T> alpha);

/// Per-row and per-column CE weights; empty means all ones.
template <typename T>
struct CeWeights {
  std::vector<T> rows;
  std::vector<T> cols;
};

/// Softmax CE of every row of the scaled score matrix against gt_1to2 plus
/// every column against gt_2to1; the dustbin row and column contribute no
/// terms of their own.
template <typename T>
Var<T> symmetric_ce_loss(Var<T> scores, const PairLabels& labels, const LossConfig& config,
                         const CeWeights<T>& weights = {});

/// sum_ij d_ij * M_ij - (1 - d_ij) * M_ji with d = clamp(dist / d_max, 0, 1).
/// `inner` is the square [b,b] similarity block.
template <typename T>
Var<T> triplet_loss(Var<T> inner, const PairLabels& labels, double d_max_mm);

/// Symmetric CE plus, in the modes that use it, lambda * triplet. The
/// triplet term is taken over `triplet_block` when given, else over the
/// inner block of `scores`; with batch_mean it is averaged over the b*b
/// pairs.
template <typename T>
Var<T> total_loss(Var<T> scores, const PairLabels& labels, const LossConfig& config,
                  Var<T> triplet_block = {});

/// Row weight W[i][gt_1to2[i]] and column weight W[gt_2to1[j]][j] taken from
/// the b1 x b2 pair-weight matrix and clamped to [0, 1]; dustbin-labelled
/// rows and columns keep weight 1.
template <typename T>
CeWeights<T> pair_weights_to_ce(const PairLabels& labels, std::span<const double> pair_weights);

template <typename T>
Var<T> weighted_ce_loss(Var<T> scores, const PairLabels& labels, std::span<const double> pair_weights,
                        const LossConfig& config);

/// Full objective from two embedding batches: score matrix with the dustbin,
/// symmetric CE (IVPP-weighted when `pair_weights` is non-empty) and the
/// triplet term on the similarity selected by the config.
template <typename T>
Var<T> embedding_loss(Var<T> z1, Var<T> z2, Var<T> alpha, const PairLabels& labels, const LossConfig& config,
                      std::span<const double> pair_weights = {});

}  // namespace sweepret
