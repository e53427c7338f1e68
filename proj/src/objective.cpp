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

#include "sweepret/objective.hpp"

#include <algorithm>
#include <cmath>

#include "sweepret/error.hpp"

namespace sweepret {

std::string_view to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::kSce: return "sce";
    case AblationMode::kP1: return "p1";
    case AblationMode::kP2: return "p2";
    case AblationMode::kFull: return "full";
  }
  return "full";
}

std::string_view table_name(AblationMode mode) {
  switch (mode) {
    case AblationMode::kSce: return "SCE";
    case AblationMode::kP1: return "+P1";
    case AblationMode::kP2: return "+P2";
    case AblationMode::kFull: return "+P1+P2";
  }
  return "+P1+P2";
}

AblationMode parse_ablation_mode(std::string_view text) {
  for (AblationMode m : {AblationMode::kSce, AblationMode::kP1, AblationMode::kP2, AblationMode::kFull}) {
    if (text == to_string(m) || text == table_name(m)) return m;
  }
  throw Error(ErrorCode::kConfig, "loss.mode",
              "unknown ablation mode '" + std::string(text) + "' (expected sce|p1|p2|full)");
}

bool uses_probe_labels(AblationMode mode) { return mode == AblationMode::kP1 || mode == AblationMode::kFull; }
bool uses_triplet(AblationMode mode) { return mode == AblationMode::kP2 || mode == AblationMode::kFull; }

std::string_view to_string(LogitScale scale) {
  return scale == LogitScale::kExpTau ? "as-written" : "inverse-tau";
}

LogitScale parse_logit_scale(std::string_view text) {
  if (text == "as-written" || text == "exp-tau") return LogitScale::kExpTau;
  if (text == "inverse-tau") return LogitScale::kInverseTau;
  throw Error(ErrorCode::kConfig, "loss.logit_scale_mode",
              "unknown value '" + std::string(text) + "' (expected as-written|inverse-tau)");
}

std::string_view to_string(TripletSimilarity similarity) {
  return similarity == TripletSimilarity::kDot ? "dot" : "cosine";
}

TripletSimilarity parse_triplet_similarity(std::string_view text) {
  if (text == "dot") return TripletSimilarity::kDot;
  if (text == "cosine") return TripletSimilarity::kCosine;
  throw Error(ErrorCode::kConfig, "loss.triplet_similarity",
              "unknown value '" + std::string(text) + "' (expected dot|cosine)");
}

double LossConfig::logit_factor() const {
  return logit_scale == LogitScale::kExpTau ? std::exp(tau) : 1.0 / tau;
}

void validate(const LossConfig& config) {
  if (!(config.tau > 0.0) || !std::isfinite(config.tau)) {
    throw Error(ErrorCode::kConfig, "loss.tau", "must be positive and finite");
  }
  if (!(config.triplet_distance_norm_mm > 0.0)) {
    throw Error(ErrorCode::kConfig, "loss.triplet_distance_norm_mm", "must be positive");
  }
  if (!std::isfinite(config.triplet_weight)) {
    throw Error(ErrorCode::kConfig, "loss.triplet_weight", "must be finite");
  }
}

nlohmann::json to_json(const LossConfig& config) {
  return {{"tau", config.tau},
          {"triplet_weight", config.triplet_weight},
          {"triplet_distance_norm_mm", config.triplet_distance_norm_mm},
          {"logit_scale_mode", to_string(config.logit_scale)},
          {"batch_mean", config.batch_mean},
          {"triplet_similarity", to_string(config.triplet_similarity)},
          {"mode", to_string(config.mode)}};
}

template <typename T>
Var<T> score_matrix(Var<T> z1, Var<T> z2, Var<T> alpha) {
  Tape<T>& tape = *z1.tape;
  if (z1.shape().size() != 2 || z2.shape().size() != 2 || z1.shape()[1] != z2.shape()[1]) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("score_matrix"),
                "embedding batches " + shape_str(z1.shape()) + " and " + shape_str(z2.shape()) +
                    " do not share an embedding dimension");
  }
  typename Tape<T>::Scope scope(tape, "score_matrix");
  return append_dustbin(matmul_nt(z1, z2), alpha);
}

namespace {

template <typename T>
void check_labels(const Var<T>& scores, const PairLabels& labels) {
  const Shape& s = scores.shape();
  if (s.size() != 2 || s[0] != labels.b1 + 1 || s[1] != labels.b2 + 1 ||
      labels.gt_1to2.size() != labels.b1 || labels.gt_2to1.size() != labels.b2) {
    throw Error(ErrorCode::kShapeMismatch, scores.tape->next_name("symmetric_ce_loss"),
                "score matrix " + shape_str(s) + " does not match labels for b1=" +
                    std::to_string(labels.b1) + ", b2=" + std::to_string(labels.b2));
  }
}

}  // namespace

template <typename T>
Var<T> symmetric_ce_loss(Var<T> scores, const PairLabels& labels, const LossConfig& config,
                         const CeWeights<T>& weights) {
  check_labels(scores, labels);
  Tape<T>& tape = *scores.tape;
  typename Tape<T>::Scope scope(tape, "symmetric_ce");
  Var<T> logits = scale(scores, static_cast<T>(config.logit_factor()));
  Var<T> rows = cross_entropy_rows(logits, std::span<const int>(labels.gt_1to2),
                                   std::span<const T>(weights.rows));
  Var<T> cols = cross_entropy_rows(transpose(logits), std::span<const int>(labels.gt_2to1),
                                   std::span<const T>(weights.cols));
  const double denom = config.batch_mean ? static_cast<double>(labels.b1 + labels.b2) : 2.0;
  return scale(add(rows, cols), static_cast<T>(1.0 / denom));
}

template <typename T>
Var<T> triplet_loss(Var<T> inner, const PairLabels& labels, double d_max_mm) {
  Tape<T>& tape = *inner.tape;
  const Shape& s = inner.shape();
  if (s.size() != 2 || s[0] != s[1]) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("triplet_loss"),
                "needs a square similarity block, got " + shape_str(s));
  }
  const std::size_t b = s[0];
  if (labels.b1 != b || labels.b2 != b || labels.distance_matrix_mm.size() != b * b) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("triplet_loss"),
                "distance matrix does not match a " + std::to_string(b) + "x" + std::to_string(b) + " block");
  }
  if (!(d_max_mm > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, tape.next_name("triplet_loss"), "d_max must be positive");
  }
  auto d = [&](std::size_t i, std::size_t j) {
    return std::clamp(labels.distance(i, j) / d_max_mm, 0.0, 1.0);
  };
  // M_ij enters once as d_ij * M_ij and once (as the transposed element of
  // pair (j,i)) as -(1 - d_ji) * M_ij.
  Tensor<T> coef(Shape{b, b});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) coef[i * b + j] = static_cast<T>(d(i, j) - (1.0 - d(j, i)));
  typename Tape<T>::Scope scope(tape, "triplet");
  return sum(mul_const(inner, coef));
}

namespace {

template <typename T>
Var<T> add_triplet(Var<T> loss, Var<T> scores, const PairLabels& labels, const LossConfig& config,
                   Var<T> triplet_block) {
  if (!uses_triplet(config.mode) || config.triplet_weight == 0.0) return loss;
  Var<T> inner = triplet_block.valid() ? triplet_block : block(scores, 0, labels.b1, 0, labels.b2);
  double w = config.triplet_weight;
  if (config.batch_mean) w /= static_cast<double>(labels.b1 * labels.b2);
  Var<T> trip = triplet_loss(inner, labels, config.triplet_distance_norm_mm);
  return add(loss, scale(trip, static_cast<T>(w)));
}

}  // namespace

template <typename T>
Var<T> total_loss(Var<T> scores, const PairLabels& labels, const LossConfig& config, Var<T> triplet_block) {
  return add_triplet(symmetric_ce_loss(scores, labels, config), scores, labels, config, triplet_block);
}

template <typename T>
CeWeights<T> pair_weights_to_ce(const PairLabels& labels, std::span<const double> pair_weights) {
  if (pair_weights.size() != labels.b1 * labels.b2) {
    throw Error(ErrorCode::kShapeMismatch, "weighted_ce_loss",
                "pair weight matrix has " + std::to_string(pair_weights.size()) + " entries, expected " +
                    std::to_string(labels.b1 * labels.b2));
  }
  CeWeights<T> w;
  w.rows.assign(labels.b1, T(1));
  w.cols.assign(labels.b2, T(1));
  for (std::size_t i = 0; i < labels.b1; ++i) {
    const int j = labels.gt_1to2[i];
    if (j != labels.row_dustbin()) w.rows[i] = static_cast<T>(std::clamp(pair_weights[i * labels.b2 + j], 0.0, 1.0));
  }
  for (std::size_t j = 0; j < labels.b2; ++j) {
    const int i = labels.gt_2to1[j];
    if (i != labels.col_dustbin()) w.cols[j] = static_cast<T>(std::clamp(pair_weights[i * labels.b2 + j], 0.0, 1.0));
  }
  return w;
}

template <typename T>
Var<T> weighted_ce_loss(Var<T> scores, const PairLabels& labels, std::span<const double> pair_weights,
                        const LossConfig& config) {
  check_labels(scores, labels);
  return symmetric_ce_loss(scores, labels, config, pair_weights_to_ce<T>(labels, pair_weights));
}

template <typename T>
Var<T> embedding_loss(Var<T> z1, Var<T> z2, Var<T> alpha, const PairLabels& labels, const LossConfig& config,
                      std::span<const double> pair_weights) {
  Var<T> scores = score_matrix(z1, z2, alpha);
  Var<T> loss = pair_weights.empty() ? symmetric_ce_loss(scores, labels, config)
                                     : weighted_ce_loss(scores, labels, pair_weights, config);
  Var<T> triplet_block;
  if (uses_triplet(config.mode) && config.triplet_weight != 0.0 &&
      config.triplet_similarity == TripletSimilarity::kCosine) {
    typename Tape<T>::Scope scope(*z1.tape, "cosine");
    triplet_block = matmul_nt(normalize_rows(z1), normalize_rows(z2));
  }
  return add_triplet(loss, scores, labels, config, triplet_block);
}

#define SWEEPRET_INSTANTIATE(T)                                                                    \
  template Var<T> score_matrix(Var<T>, Var<T>, Var<T>);                                            \
  template Var<T> symmetric_ce_loss(Var<T>, const PairLabels&, const LossConfig&, const CeWeights<T>&); \
  template Var<T> triplet_loss(Var<T>, const PairLabels&, double);                                 \
  template Var<T> total_loss(Var<T>, const PairLabels&, const LossConfig&, Var<T>);                \
  template Var<T> embedding_loss(Var<T>, Var<T>, Var<T>, const PairLabels&, const LossConfig&,     \
                                 std::span<const double>);                                        \
  template CeWeights<T> pair_weights_to_ce(const PairLabels&, std::span<const double>);            \
  template Var<T> weighted_ce_loss(Var<T>, const PairLabels&, std::span<const double>, const LossConfig&);

SWEEPRET_INSTANTIATE(float)
SWEEPRET_INSTANTIATE(double)

#undef SWEEPRET_INSTANTIATE

}  // namespace sweepret
