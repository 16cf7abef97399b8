// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "pclft/ensemble.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "pclft/error.hpp"
#include "pclft/labels.hpp"

namespace pclft {

namespace {

void check_voter_count(std::size_t n) {
  if (n == 0) throw ConfigError("vote: no voters");
  if (n % 2 == 0) {
    throw ConfigError("vote: need an odd number of voters, got " + std::to_string(n));
  }
}

int majority(int ones, std::size_t voters) {
  return static_cast<std::size_t>(ones) * 2 > voters ? 1 : 0;
}

int parse_bit(std::string_view s, std::size_t line) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw ParseError("expected 0 or 1, got '" + std::string(s) + "'", line);
}

}  // namespace

RunReport RunReport::from_folds(std::uint64_t seed, std::vector<double> fold_metrics,
                                std::string checkpoint) {
  if (fold_metrics.empty()) throw ContractError("run report: no fold metrics");
  RunReport r;
  r.seed = seed;
  r.mean_val = std::accumulate(fold_metrics.begin(), fold_metrics.end(), 0.0) /
               static_cast<double>(fold_metrics.size());
  r.fold_metrics = std::move(fold_metrics);
  r.checkpoint = std::move(checkpoint);
  return r;
}

std::vector<RunReport> select_top_k(std::vector<RunReport> reports, int k) {
  if (k < 1 || reports.size() < static_cast<std::size_t>(k)) {
    throw ConfigError("select_top_k: cannot pick " + std::to_string(k) + " of " +
                      std::to_string(reports.size()) + " runs");
  }
  std::sort(reports.begin(), reports.end(), [](const RunReport& a, const RunReport& b) {
    return a.mean_val != b.mean_val ? a.mean_val > b.mean_val : a.seed < b.seed;
  });
  reports.resize(static_cast<std::size_t>(k));
  return reports;
}

std::vector<int> vote_binary(const std::vector<std::vector<int>>& voters) {
  check_voter_count(voters.size());
  const std::size_t n = voters.front().size();
  for (const auto& v : voters) {
    if (v.size() != n) throw ContractError("vote_binary: voters disagree on length");
  }
  std::vector<int> fused(n);
  for (std::size_t i = 0; i < n; ++i) {
    int ones = 0;
    for (const auto& v : voters) ones += v[i] != 0;
    fused[i] = majority(ones, voters.size());
  }
  return fused;
}

std::vector<std::vector<int>> vote_multilabel(
    const std::vector<std::vector<std::vector<int>>>& voters) {
  check_voter_count(voters.size());
  const std::size_t n = voters.front().size();
  for (const auto& v : voters) {
    if (v.size() != n) throw ContractError("vote_multilabel: voters disagree on length");
  }
  std::vector<std::vector<int>> fused(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t width = voters.front()[i].size();
    fused[i].assign(width, 0);
    for (std::size_t c = 0; c < width; ++c) {
      int ones = 0;
      for (const auto& v : voters) {
        if (v[i].size() != width) {
          throw ContractError("vote_multilabel: label vectors disagree on width");
        }
        ones += v[i][c] != 0;
      }
      fused[i][c] = majority(ones, voters.size());
    }
  }
  return fused;
}

std::vector<int> PredictionSet::binary_labels() const {
  if (multilabel) throw ContractError("binary_labels on a multi-label prediction set");
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(l.at(0));
  return out;
}

PredictionSet read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open predictions " + path.string(), 0);
  PredictionSet set;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError("expected `par_id<TAB>label`", line_no);
    }
    const std::string_view value = std::string_view(line).substr(tab + 1);
    const bool multi = value.find(',') != std::string_view::npos;
    if (first) {
      set.multilabel = multi;
      first = false;
    } else if (multi != set.multilabel) {
      throw ParseError("mixes binary and multi-label rows", line_no);
    }
    std::vector<int> bits;
    if (multi) {
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = value.find(',', start);
        bits.push_back(parse_bit(value.substr(start, comma - start), line_no));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      if (bits.size() != kNumCategories) {
        throw ParseError("expected " + std::to_string(kNumCategories) + " bits", line_no);
      }
    } else {
      bits.push_back(parse_bit(value, line_no));
    }
    set.ids.emplace_back(line.substr(0, tab));
    set.labels.push_back(std::move(bits));
  }
  return set;
}

void write_predictions(std::ostream& out, const PredictionSet& set) {
  for (std::size_t i = 0; i < set.ids.size(); ++i) {
    out << set.ids[i] << '\t';
    for (std::size_t c = 0; c < set.labels[i].size(); ++c) {
      if (c) out << ',';
      out << set.labels[i][c];
    }
    out << '\n';
  }
}

void write_predictions(const std::filesystem::path& path, const PredictionSet& set) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write predictions " + path.string());
  write_predictions(out, set);
}

PredictionSet fuse_predictions(std::span<const PredictionSet> sets) {
  check_voter_count(sets.size());
  const PredictionSet& head = sets.front();
  for (const PredictionSet& s : sets) {
    if (s.multilabel != head.multilabel) {
      throw ContractError("fuse_predictions: mixes binary and multi-label files");
    }
    if (s.ids != head.ids) {
      throw ContractError("fuse_predictions: files list different paragraphs or orders");
    }
  }
  PredictionSet fused;
  fused.multilabel = head.multilabel;
  fused.ids = head.ids;
  if (head.multilabel) {
    std::vector<std::vector<std::vector<int>>> voters;
    for (const PredictionSet& s : sets) voters.push_back(s.labels);
    fused.labels = vote_multilabel(voters);
  } else {
    std::vector<std::vector<int>> voters;
    for (const PredictionSet& s : sets) voters.push_back(s.binary_labels());
    for (int v : vote_binary(voters)) fused.labels.push_back({v});
  }
  return fused;
}

}  // namespace pclft
