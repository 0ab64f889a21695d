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
#include "lass/analysis.hpp"

#include <cstdio>
#include <tuple>

#include <gsl/gsl_statistics_double.h>

#include "lass/errors.hpp"
#include "lass/naming.hpp"

namespace lass {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<LangPair> group_pairs(const MaskSet& masks, const std::string& pivot,
                                  bool from_pivot) {
  std::vector<LangPair> out;
  for (const auto& p : masks.pairs()) {
    if (from_pivot ? p.src == pivot : p.tgt == pivot) out.push_back(p);
  }
  return out;
}

const std::string& other_lang(const LangPair& p, const std::string& pivot) {
  return p.src == pivot ? p.tgt : p.src;
}

}  // namespace

std::string_view to_string(Grouping g) {
  switch (g) {
    case Grouping::kFromPivot: return "en->x";
    case Grouping::kToPivot: return "x->en";
    case Grouping::kCross: return "cross";
  }
  return "?";
}

std::string SimilarityMatrix::to_csv() const {
  std::string out = std::string(to_string(grouping));
  for (const auto& c : cols) out += "," + c.str();
  out += "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += rows[i].str();
    for (double v : values[i]) out += "," + fmt(v);
    out += "\n";
  }
  return out;
}

SimilarityMatrix similarity_matrix(const MaskSet& masks, const std::string& pivot,
                                   Grouping grouping) {
  SimilarityMatrix m;
  m.grouping = grouping;
  const auto from = group_pairs(masks, pivot, true);
  const auto to = group_pairs(masks, pivot, false);
  switch (grouping) {
    case Grouping::kFromPivot: m.rows = m.cols = from; break;
    case Grouping::kToPivot: m.rows = m.cols = to; break;
    case Grouping::kCross:
      m.rows = from;
      m.cols = to;
      break;
  }
  if (m.rows.empty() || m.cols.empty()) {
    throw UsageError("similarity matrix " + std::string(to_string(grouping)) +
                     " has no masks in its grouping");
  }
  for (const auto& r : m.rows) {
    std::vector<double> row;
    for (const auto& c : m.cols) row.push_back(similarity(masks.at(r), masks.at(c)));
    m.values.push_back(std::move(row));
  }
  return m;
}

std::vector<ProfileRow> layer_component_profile(const MaskSet& masks) {
  if (masks.size() < 2) throw UsageError("capacity profile needs at least two masks");
  const auto pairs = masks.pairs();
  // (stack, layer, class) -> tensor names
  std::map<std::tuple<std::string, int, std::string>, std::vector<std::string>> groups;
  for (const auto& [name, bits] : masks.at(pairs.front()).tensors) {
    const auto pn = parse_param_name(name);
    if (!pn) throw StructuralError("mask tensor " + name + " is outside the naming scheme");
    groups[{pn->stack, pn->layer, component_class(name)}].push_back(name);
  }
  std::vector<ProfileRow> out;
  for (const auto& [key, names] : groups) {
    auto keep = [&names](std::string_view n) {
      for (const auto& x : names) {
        if (x == n) return true;
      }
      return false;
    };
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      for (std::size_t j = i + 1; j < pairs.size(); ++j) {
        const auto& a = masks.at(pairs[i]);
        const auto& b = masks.at(pairs[j]);
        sum += 0.5 * (similarity(a, b, keep) + similarity(b, a, keep));
        ++count;
      }
    }
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), sum / count});
  }
  return out;
}

std::string profile_csv(const std::vector<ProfileRow>& rows) {
  std::string out = "stack,layer,component,similarity\n";
  for (const auto& r : rows) {
    out += r.stack + "," + std::to_string(r.layer) + "," + r.component + "," +
           fmt(r.similarity) + "\n";
  }
  return out;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw UsageError("spearman needs two equal-length samples of size >= 2");
  }
  std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
  std::vector<double> work(2 * a.size());
  return gsl_stats_spearman(a.data(), 1, b.data(), 1, a.size(), work.data());
}

RelatednessCorrelation relatedness_correlation(const MaskSet& masks,
                                               const CorpusSet& corpus) {
  RelatednessCorrelation out;
  for (Grouping g : {Grouping::kFromPivot, Grouping::kToPivot}) {
    const auto m = similarity_matrix(masks, corpus.pivot, g);
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
      for (std::size_t j = 0; j < m.cols.size(); ++j) {
        if (i == j) continue;
        out.similarity.push_back(m.values[i][j]);
        out.relatedness.push_back(
            corpus.relatedness.at(other_lang(m.rows[i], corpus.pivot),
                                  other_lang(m.cols[j], corpus.pivot)));
      }
    }
  }
  out.spearman = spearman(out.similarity, out.relatedness);
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "alpha,tier,bleu,accuracy\n";
  for (const auto& r : rows) {
    out += fmt(r.alpha) + "," + r.tier + "," + fmt(r.bleu) + "," + fmt(r.accuracy) + "\n";
  }
  return out;
}

double sweep_argmax(const std::map<double, double>& score_by_alpha) {
  if (score_by_alpha.empty()) throw UsageError("sweep has no completed arms");
  auto best = score_by_alpha.begin();
  for (auto it = score_by_alpha.begin(); it != score_by_alpha.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

}  // namespace lass
