// core/src/utility.cpp

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

#include "spane/utility.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "spane/csv.hpp"
#include "spane/rng.hpp"

namespace spane {

F1Result f1_score(const std::vector<bool>& predictions,
                  const std::vector<bool>& labels) {
  if (predictions.size() != labels.size()) {
    throw DataError("f1: " + std::to_string(predictions.size()) +
                    " predictions vs " + std::to_string(labels.size()) +
                    " labels");
  }
  if (predictions.empty()) throw DataError("f1: no examples");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] && labels[i]) ++tp;
    else if (predictions[i] && !labels[i]) ++fp;
    else if (!predictions[i] && labels[i]) ++fn;
  }
  const std::size_t denom = 2 * tp + fp + fn;
  if (denom == 0) return {0.0, true};
  return {2.0 * tp / denom, false};
}

std::vector<double> InputScaler::apply(const std::vector<double>& x) const {
  if (x.size() != mean.size()) {
    throw DataError("scaler: input dim " + std::to_string(x.size()) +
                    " vs fitted dim " + std::to_string(mean.size()));
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = (x[i] - mean[i]) / scale[i];
  }
  return out;
}

InputScaler fit_scaler(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw DataError("scaler: no rows");
  const std::size_t d = rows.front().size();
  InputScaler s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw DataError("scaler: ragged rows");
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += r[i];
  }
  for (double& m : s.mean) m /= rows.size();
  std::vector<double> var(d, 0.0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = r[i] - s.mean[i];
      var[i] += diff * diff;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double sd = std::sqrt(var[i] / rows.size());
    if (sd > 1e-12) s.scale[i] = sd;
  }
  return s;
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double probe_objective(const std::vector<double>& weights, double bias,
                       const std::vector<std::vector<double>>& inputs,
                       const std::vector<int>& labels, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double z = dot(weights, inputs[i]) + bias;
    loss += std::max(z, 0.0) - labels[i] * z + std::log1p(std::exp(-std::abs(z)));
  }
  loss /= inputs.size();
  double reg = 0.0;
  for (double w : weights) reg += w * w;
  return loss + 0.5 * l2 * reg;
}

void probe_gradient(const std::vector<double>& weights, double bias,
                    const std::vector<std::vector<double>>& inputs,
                    const std::vector<int>& labels, double l2,
                    std::vector<double>* grad_weights, double* grad_bias) {
  grad_weights->assign(weights.size(), 0.0);
  *grad_bias = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double residual =
        sigmoid(dot(weights, inputs[i]) + bias) - labels[i];
    for (std::size_t j = 0; j < weights.size(); ++j) {
      (*grad_weights)[j] += residual * inputs[i][j];
    }
    *grad_bias += residual;
  }
  const double inv_n = 1.0 / inputs.size();
  for (std::size_t j = 0; j < weights.size(); ++j) {
    (*grad_weights)[j] = (*grad_weights)[j] * inv_n + l2 * weights[j];
  }
  *grad_bias *= inv_n;
}

ProbeModel train_probe(const std::vector<std::vector<double>>& inputs,
                       const std::vector<int>& labels,
                       const ProbeConfig& cfg) {
  if (inputs.size() != labels.size()) {
    throw DataError("probe: " + std::to_string(inputs.size()) +
                    " inputs vs " + std::to_string(labels.size()) + " labels");
  }
  if (inputs.empty()) throw DataError("probe: no training examples");
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("probe: labels must be 0 or 1");
    (y == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    throw DataError("probe: training set has a single class");
  }

  ProbeModel model;
  model.config = cfg;
  model.scaler = fit_scaler(inputs);
  std::vector<std::vector<double>> x;
  x.reserve(inputs.size());
  for (const auto& row : inputs) x.push_back(model.scaler.apply(row));

  model.weights.assign(inputs.front().size(), 0.0);
  model.bias = 0.0;
  std::vector<double> gw;
  double gb = 0.0;
  for (int it = 0; it < cfg.iterations; ++it) {
    probe_gradient(model.weights, model.bias, x, labels, cfg.l2, &gw, &gb);
    for (std::size_t j = 0; j < model.weights.size(); ++j) {
      model.weights[j] -= cfg.learning_rate * gw[j];
    }
    model.bias -= cfg.learning_rate * gb;
  }
  for (double w : model.weights) {
    if (!std::isfinite(w)) throw DataError("probe: diverged to non-finite weights");
  }
  if (!std::isfinite(model.bias)) {
    throw DataError("probe: diverged to non-finite bias");
  }
  return model;
}

double probe_score(const ProbeModel& model, const std::vector<double>& x) {
  return dot(model.weights, model.scaler.apply(x)) + model.bias;
}

bool probe_predict(const ProbeModel& model, const std::vector<double>& x) {
  return probe_score(model, x) >= 0.0;
}

std::vector<std::vector<std::string>> assign_folds(
    const std::vector<UtteranceExample>& examples, int folds,
    std::uint64_t seed) {
  if (folds < 2) throw ConfigError("folds: need at least 2, got " +
                                   std::to_string(folds));
  std::vector<std::pair<std::string, Group>> speakers;
  std::unordered_map<std::string, Group> seen;
  for (const auto& ex : examples) {
    auto [it, inserted] = seen.try_emplace(ex.speaker, ex.group);
    if (inserted) {
      speakers.emplace_back(ex.speaker, ex.group);
    } else if (it->second != ex.group) {
      throw DataError("folds: speaker '" + ex.speaker +
                      "' appears in both groups");
    }
  }
  if (speakers.size() < static_cast<std::size_t>(folds)) {
    throw DataError("folds: " + std::to_string(speakers.size()) +
                    " speakers for " + std::to_string(folds) + " folds");
  }

  // One mixed draw per speaker; the raw content hash alone reacts too
  // weakly to the seed to reorder anything.
  std::vector<std::uint64_t> keys(speakers.size());
  for (std::size_t i = 0; i < speakers.size(); ++i) {
    keys[i] = Rng(derived_seed(seed, speakers[i].first)).next_u64();
  }
  std::vector<std::size_t> order(speakers.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return keys[a] != keys[b] ? keys[a] < keys[b]
                              : speakers[a].first < speakers[b].first;
  });
  std::vector<std::pair<std::string, Group>> shuffled;
  shuffled.reserve(speakers.size());
  for (std::size_t i : order) shuffled.push_back(std::move(speakers[i]));
  speakers = std::move(shuffled);

  std::vector<std::vector<std::string>> assignment(folds);
  std::vector<std::array<std::size_t, 2>> group_counts(
      folds, std::array<std::size_t, 2>{0, 0});
  for (const auto& [name, group] : speakers) {
    const std::size_t g = group == Group::kParkinson ? 1 : 0;
    int best = 0;
    for (int f = 1; f < folds; ++f) {
      if (group_counts[f][g] < group_counts[best][g] ||
          (group_counts[f][g] == group_counts[best][g] &&
           assignment[f].size() < assignment[best].size())) {
        best = f;
      }
    }
    assignment[best].push_back(name);
    group_counts[best][g] += 1;
  }
  return assignment;
}

namespace {

const std::vector<double>& require_embedding(const EmbeddingMap& embeddings,
                                             const std::string& id,
                                             const std::string& condition) {
  auto it = embeddings.find(id);
  if (it == embeddings.end()) {
    throw DataError("cv: utterance '" + id + "' missing from condition '" +
                    condition + "'");
  }
  return it->second;
}

}  // namespace

CVReport cross_validate(const std::vector<UtteranceExample>& examples,
                        const EmbeddingMap& train_embeddings,
                        const EmbeddingMap& eval_embeddings,
                        const std::string& train_condition,
                        const std::string& eval_condition,
                        const CVConfig& cfg) {
  if (examples.empty()) throw DataError("cv: no examples");
  for (const auto& ex : examples) {
    require_embedding(train_embeddings, ex.id, train_condition);
    require_embedding(eval_embeddings, ex.id, eval_condition);
  }

  CVReport report;
  report.train_condition = train_condition;
  report.eval_condition = eval_condition;

  for (std::uint64_t seed : cfg.seeds) {
    const auto folds = assign_folds(examples, cfg.folds, seed);
    for (int f = 0; f < cfg.folds; ++f) {
      const std::unordered_set<std::string> test_speakers(folds[f].begin(),
                                                          folds[f].end());
      std::vector<std::vector<double>> train_x;
      std::vector<int> train_y;
      std::vector<bool> eval_labels;
      std::vector<const UtteranceExample*> eval_examples;
      for (const auto& ex : examples) {
        if (test_speakers.count(ex.speaker)) {
          eval_examples.push_back(&ex);
          eval_labels.push_back(ex.group == Group::kParkinson);
        } else {
          train_x.push_back(
              require_embedding(train_embeddings, ex.id, train_condition));
          train_y.push_back(ex.group == Group::kParkinson ? 1 : 0);
        }
      }
      if (eval_examples.empty()) {
        throw DataError("cv: fold " + std::to_string(f) + " seed " +
                        std::to_string(seed) + " has no test utterances");
      }
      const bool eval_both =
          std::count(eval_labels.begin(), eval_labels.end(), true) > 0 &&
          std::count(eval_labels.begin(), eval_labels.end(), false) > 0;
      if (!eval_both) {
        throw DataError("cv: fold " + std::to_string(f) + " seed " +
                        std::to_string(seed) + " has a single class");
      }

      const ProbeModel model = train_probe(train_x, train_y, cfg.probe);
      std::vector<bool> predictions;
      predictions.reserve(eval_examples.size());
      for (const auto* ex : eval_examples) {
        predictions.push_back(probe_predict(
            model, require_embedding(eval_embeddings, ex->id, eval_condition)));
      }
      report.cells.push_back({f, seed, f1_score(predictions, eval_labels).f1});
    }
  }

  double mean = 0.0;
  for (const auto& cell : report.cells) mean += cell.f1;
  mean /= report.cells.size();
  double var = 0.0;
  for (const auto& cell : report.cells) {
    var += (cell.f1 - mean) * (cell.f1 - mean);
  }
  report.mean_f1 = mean;
  report.std_f1 = std::sqrt(var / report.cells.size());
  return report;
}

void write_cv_csv(const std::string& path,
                  const std::vector<CVReport>& reports) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cv csv: cannot open " + path);
  out << csv::join_row({"train_cond", "eval_cond", "fold", "seed", "f1"});
  for (const auto& report : reports) {
    for (const auto& cell : report.cells) {
      out << csv::join_row({report.train_condition, report.eval_condition,
                            std::to_string(cell.fold),
                            std::to_string(cell.seed),
                            csv::format_double(cell.f1)});
    }
    out << csv::join_row({report.train_condition, report.eval_condition,
                          "all", "all", csv::format_double(report.mean_f1)});
  }
  if (!out) throw DataError("cv csv: write failed for " + path);
}

namespace {

// Decodes UTF-8; malformed sequences are an input error.
std::vector<char32_t> decode_utf8(const std::string& text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = text[i];
    char32_t cp = 0;
    std::size_t len = 0;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      len = 3;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      len = 4;
    } else {
      throw DataError("text: malformed UTF-8 at byte " + std::to_string(i));
    }
    if (i + len > text.size()) {
      throw DataError("text: truncated UTF-8 at byte " + std::to_string(i));
    }
    for (std::size_t j = 1; j < len; ++j) {
      const unsigned char cc = text[i + j];
      if ((cc & 0xC0) != 0x80) {
        throw DataError("text: malformed UTF-8 at byte " +
                        std::to_string(i + j));
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void encode_utf8(char32_t cp, std::string* out) {
  if (cp < 0x80) {
    out->push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out->push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out->push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out->push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Canonical composition for the Latin repertoire: base letter followed by
// a combining grave, acute, tilde, or diaeresis.
char32_t compose(char32_t base, char32_t mark) {
  struct Entry {
    char32_t base;
    char32_t mark;
    char32_t composed;
  };
  static constexpr Entry kTable[] = {
      {U'a', 0x0300, 0xE0}, {U'a', 0x0301, 0xE1}, {U'a', 0x0303, 0xE3},
      {U'a', 0x0308, 0xE4}, {U'e', 0x0300, 0xE8}, {U'e', 0x0301, 0xE9},
      {U'e', 0x0308, 0xEB}, {U'i', 0x0300, 0xEC}, {U'i', 0x0301, 0xED},
      {U'i', 0x0308, 0xEF}, {U'o', 0x0300, 0xF2}, {U'o', 0x0301, 0xF3},
      {U'o', 0x0303, 0xF5}, {U'o', 0x0308, 0xF6}, {U'u', 0x0300, 0xF9},
      {U'u', 0x0301, 0xFA}, {U'u', 0x0308, 0xFC}, {U'n', 0x0303, 0xF1},
      {U'A', 0x0300, 0xC0}, {U'A', 0x0301, 0xC1}, {U'A', 0x0303, 0xC3},
      {U'A', 0x0308, 0xC4}, {U'E', 0x0300, 0xC8}, {U'E', 0x0301, 0xC9},
      {U'E', 0x0308, 0xCB}, {U'I', 0x0300, 0xCC}, {U'I', 0x0301, 0xCD},
      {U'I', 0x0308, 0xCF}, {U'O', 0x0300, 0xD2}, {U'O', 0x0301, 0xD3},
      {U'O', 0x0303, 0xD5}, {U'O', 0x0308, 0xD6}, {U'U', 0x0300, 0xD9},
      {U'U', 0x0301, 0xDA}, {U'U', 0x0308, 0xDC}, {U'N', 0x0303, 0xD1},
  };
  for (const auto& e : kTable) {
    if (e.base == base && e.mark == mark) return e.composed;
  }
  return 0;
}

char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  return cp;
}

bool is_whitespace(char32_t cp) {
  return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0xA0 ||
         cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 ||
         cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

// Unicode categories P and S over the Latin repertoire plus the general
// punctuation, currency, and symbol blocks.
bool is_punct_or_symbol(char32_t cp) {
  if ((cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
      (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E)) {
    return true;
  }
  if (cp >= 0xA1 && cp <= 0xBF) {
    // Exceptions in Latin-1: ordinal letters, micro, superscripts, fractions.
    switch (cp) {
      case 0xAA:
      case 0xB2:
      case 0xB3:
      case 0xB5:
      case 0xB9:
      case 0xBC:
      case 0xBD:
      case 0xBE:
        return false;
      default:
        return true;
    }
  }
  if (cp == 0xD7 || cp == 0xF7) return true;
  if (cp >= 0x2000 && cp <= 0x206F) return !is_whitespace(cp);
  if (cp >= 0x20A0 && cp <= 0x20CF) return true;
  if (cp >= 0x2100 && cp <= 0x2BFF) return true;
  return false;
}

bool is_combining_mark(char32_t cp) { return cp >= 0x0300 && cp <= 0x036F; }

}  // namespace

std::vector<std::string> normalize_tokens(const std::string& text) {
  const std::vector<char32_t> raw = decode_utf8(text);
  std::vector<char32_t> composed;
  composed.reserve(raw.size());
  for (char32_t cp : raw) {
    if (is_combining_mark(cp) && !composed.empty()) {
      if (const char32_t c = compose(composed.back(), cp); c != 0) {
        composed.back() = c;
        continue;
      }
      continue;
    }
    if (is_combining_mark(cp)) continue;
    composed.push_back(cp);
  }

  std::vector<std::string> tokens;
  std::string current;
  for (char32_t cp : composed) {
    const char32_t lower = to_lower(cp);
    if (is_whitespace(lower)) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
      continue;
    }
    if (is_punct_or_symbol(lower)) continue;
    encode_utf8(lower, &current);
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double wer(const std::string& reference, const std::string& hypothesis) {
  const std::vector<std::string> ref = normalize_tokens(reference);
  const std::vector<std::string> hyp = normalize_tokens(hypothesis);
  if (ref.empty()) {
    throw DataError("wer: reference is empty after normalization");
  }

  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] != hyp[j - 1] ? 1 : 0);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[m]) / n;
}

void write_wer_csv(const std::string& path,
                   const std::vector<WerRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("wer csv: cannot open " + path);
  out << csv::join_row({"id", "wer", "n_ref_tokens"});
  for (const auto& row : rows) {
    out << csv::join_row({row.id, csv::format_double(row.wer),
                          std::to_string(row.n_ref_tokens)});
  }
  if (!out) throw DataError("wer csv: write failed for " + path);
}

}  // namespace spane
