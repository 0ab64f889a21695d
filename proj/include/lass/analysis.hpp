/* Copyright 2026 The LaSS Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "lass/corpus.hpp"
#include "lass/mask.hpp"

namespace lass {

enum class Grouping { kFromPivot, kToPivot, kCross };
std::string_view to_string(Grouping g);

struct SimilarityMatrix {
  Grouping grouping = Grouping::kFromPivot;
  std::vector<LangPair> rows;
  std::vector<LangPair> cols;
  std::vector<std::vector<double>> values;  // values[i][j] = Sim(rows[i], cols[j])

  std::string to_csv() const;
};

// kFromPivot: pivot->x masks against each other; kToPivot: x->pivot masks;
// kCross: pivot->x rows against x->pivot columns.
SimilarityMatrix similarity_matrix(const MaskSet& masks, const std::string& pivot,
                                   Grouping grouping);

struct ProfileRow {
  std::string stack;  // "enc" or "dec"
  int layer = 0;
  std::string component;  // q, k, v, o, ffn_1, ffn_2
  double similarity = 0.0;
};

// For every (stack, layer, component class), the mean over unordered mask
// pairs {i, j} of Sim(M_i, M_j) restricted to that class's tensors, each
// unordered pair contributing the mean of its two directions.
std::vector<ProfileRow> layer_component_profile(const MaskSet& masks);
std::string profile_csv(const std::vector<ProfileRow>& rows);

// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

struct RelatednessCorrelation {
  std::vector<double> similarity;
  std::vector<double> relatedness;
  double spearman = 0.0;
};

// Off-diagonal entries of the pivot->x and x->pivot matrices paired with the
// generated relatedness of the two non-pivot languages.
RelatednessCorrelation relatedness_correlation(const MaskSet& masks,
                                               const CorpusSet& corpus);

struct SweepRow {
  double alpha = 0.0;
  std::string tier;
  double bleu = 0.0;
  double accuracy = 0.0;
};

std::string sweep_csv(const std::vector<SweepRow>& rows);
// Alpha with the highest score; the lowest alpha wins ties.
double sweep_argmax(const std::map<double, double>& score_by_alpha);

}  // namespace lass
