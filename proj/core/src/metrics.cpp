// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "pclft/metrics.hpp"

#include <sstream>

#include "pclft/error.hpp"

namespace pclft {

namespace {

double ratio(long num, long den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string format(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::string short_name(int c) {
  std::string s(kCategoryAbbrev[static_cast<std::size_t>(c)]);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> golds) {
  if (preds.size() != golds.size()) {
    throw ContractError("metrics: " + std::to_string(preds.size()) + " predictions for " +
                        std::to_string(golds.size()) + " gold labels");
  }
  if (preds.empty()) throw ContractError("metrics: no examples");
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] != 0, g = golds[i] != 0;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_from(double precision, double recall) {
  const double s = precision + recall;
  return s == 0.0 ? 0.0 : 2.0 * precision * recall / s;
}

PrecisionRecallF1 prf1(const ConfusionCounts& counts) {
  PrecisionRecallF1 m;
  m.precision = ratio(counts.tp, counts.tp + counts.fp);
  m.recall = ratio(counts.tp, counts.tp + counts.fn);
  m.f1 = f1_from(m.precision, m.recall);
  return m;
}

PrecisionRecallF1 prf1_positive(std::span<const int> preds, std::span<const int> golds) {
  return prf1(confusion(preds, golds));
}

double macro_average(std::span<const double> per_class) {
  if (per_class.empty()) throw ContractError("macro_average: no classes");
  double total = 0.0;
  for (double v : per_class) total += v;
  return total / static_cast<double>(per_class.size());
}

MacroF1 macro_f1(const std::vector<std::vector<int>>& preds,
                 const std::vector<std::vector<int>>& golds) {
  if (preds.size() != golds.size()) {
    throw ContractError("macro_f1: " + std::to_string(preds.size()) + " predictions for " +
                        std::to_string(golds.size()) + " gold vectors");
  }
  if (preds.empty()) throw ContractError("macro_f1: no examples");
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].size() != kNumCategories || golds[i].size() != kNumCategories) {
      throw ContractError("macro_f1: label vectors must have " + std::to_string(kNumCategories) +
                          " entries (row " + std::to_string(i) + ")");
    }
  }
  MacroF1 out;
  std::vector<int> p(preds.size()), g(golds.size());
  for (int c = 0; c < kNumCategories; ++c) {
    for (std::size_t i = 0; i < preds.size(); ++i) {
      p[i] = preds[i][static_cast<std::size_t>(c)];
      g[i] = golds[i][static_cast<std::size_t>(c)];
    }
    out.per_class[static_cast<std::size_t>(c)] = prf1_positive(p, g).f1;
  }
  out.macro = macro_average(out.per_class);
  return out;
}

std::string to_key_value(const PrecisionRecallF1& m) {
  return "precision=" + format(m.precision) + "\nrecall=" + format(m.recall) +
         "\nf1=" + format(m.f1) + "\n";
}

std::string to_key_value(const MacroF1& m) {
  std::string out;
  for (int c = 0; c < kNumCategories; ++c) {
    out += "f1." + short_name(c) + "=" + format(m.per_class[static_cast<std::size_t>(c)]) + "\n";
  }
  out += "macro_f1=" + format(m.macro) + "\n";
  return out;
}

std::string tsv_header(const PrecisionRecallF1&) { return "precision\trecall\tf1"; }

std::string tsv_row(const PrecisionRecallF1& m) {
  return format(m.precision) + "\t" + format(m.recall) + "\t" + format(m.f1);
}

std::string tsv_header(const MacroF1&) {
  std::string out;
  for (int c = 0; c < kNumCategories; ++c) out += "f1_" + short_name(c) + "\t";
  return out + "macro_f1";
}

std::string tsv_row(const MacroF1& m) {
  std::string out;
  for (double v : m.per_class) out += format(v) + "\t";
  return out + format(m.macro);
}

}  // namespace pclft
