// core/include/spane/utility.hpp

// Copyright 2026 The spane-kit Authors.
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

#ifndef SPANE_UTILITY_HPP_
#define SPANE_UTILITY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "spane/corpus.hpp"
#include "spane/errors.hpp"
#include "spane/privacy.hpp"

namespace spane {

struct F1Result {
  double f1 = 0.0;
  // True when 2TP + FP + FN == 0 (no positive labels or predictions).
  bool degenerate = false;
};

// F1 of the positive class, 2TP / (2TP + FP + FN).
F1Result f1_score(const std::vector<bool>& predictions,
                  const std::vector<bool>& labels);

struct ProbeConfig {
  double learning_rate = 0.1;
  int iterations = 500;
  double l2 = 1e-3;
};

// Per-dimension standardization fitted on a training fold.  Dimensions
// with population stddev below 1e-12 keep scale 1.
struct InputScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  std::vector<double> apply(const std::vector<double>& x) const;
};

InputScaler fit_scaler(const std::vector<std::vector<double>>& rows);

struct ProbeModel {
  std::vector<double> weights;
  double bias = 0.0;
  ProbeConfig config;
  InputScaler scaler;
};

// Mean logistic loss plus (l2 / 2) * ||w||^2; bias unregularized.
// Inputs are assumed already standardized.
double probe_objective(const std::vector<double>& weights, double bias,
                       const std::vector<std::vector<double>>& inputs,
                       const std::vector<int>& labels, double l2);

void probe_gradient(const std::vector<double>& weights, double bias,
                    const std::vector<std::vector<double>>& inputs,
                    const std::vector<int>& labels, double l2,
                    std::vector<double>* grad_weights, double* grad_bias);

// Full-batch gradient descent from zero initialization; labels are 0/1
// with 1 the positive class.  Requires at least one example per class.
ProbeModel train_probe(const std::vector<std::vector<double>>& inputs,
                       const std::vector<int>& labels,
                       const ProbeConfig& cfg = {});

// Decision score w . standardize(x) + b; prediction is score >= 0.
double probe_score(const ProbeModel& model, const std::vector<double>& x);
bool probe_predict(const ProbeModel& model, const std::vector<double>& x);

struct UtteranceExample {
  std::string id;
  std::string speaker;
  Group group = Group::kControl;
};

struct CVCell {
  int fold = 0;
  std::uint64_t seed = 0;
  double f1 = 0.0;
};

struct CVReport {
  std::string train_condition;
  std::string eval_condition;
  std::vector<CVCell> cells;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;
};

struct CVConfig {
  int folds = 5;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  ProbeConfig probe;
};

// Speaker-disjoint stratified folds, deterministic per seed: speakers are
// ordered by fnv1a64(speaker + "#" + seed) and greedily assigned to the
// fold with the fewest speakers of their group.
std::vector<std::vector<std::string>> assign_folds(
    const std::vector<UtteranceExample>& examples, int folds,
    std::uint64_t seed);

// Trains on train-fold speakers' embeddings from the train condition and
// scores test-fold speakers' embeddings from the eval condition; F1 is
// utterance-level with the Parkinson group positive.
CVReport cross_validate(const std::vector<UtteranceExample>& examples,
                        const EmbeddingMap& train_embeddings,
                        const EmbeddingMap& eval_embeddings,
                        const std::string& train_condition,
                        const std::string& eval_condition,
                        const CVConfig& cfg = {});

void write_cv_csv(const std::string& path,
                  const std::vector<CVReport>& reports);

// Text normalization for WER: lowercase, canonical composition of Latin
// combining accents, Unicode punctuation and symbol stripping, whitespace
// collapse, space tokenization.
std::vector<std::string> normalize_tokens(const std::string& text);

// (S + D + I) / N over normalized token sequences, unit edit costs.
double wer(const std::string& reference, const std::string& hypothesis);

struct WerRow {
  std::string id;
  double wer = 0.0;
  std::size_t n_ref_tokens = 0;
};

void write_wer_csv(const std::string& path, const std::vector<WerRow>& rows);

}  // namespace spane

#endif  // SPANE_UTILITY_HPP_
