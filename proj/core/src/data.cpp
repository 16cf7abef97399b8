// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "pclft/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <random>

#include "pclft/error.hpp"

namespace pclft {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// Calls fn(fields, line_number) for every non-blank data row.
template <class Fn>
void for_each_row(const std::filesystem::path& path, const TsvOptions& options, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && options.header) continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    fn(split_tabs(line), line_no);
  }
}

std::string_view field(const std::vector<std::string_view>& fields, int column, std::size_t line) {
  if (column < 0 || static_cast<std::size_t>(column) >= fields.size()) {
    throw ParseError("expected column " + std::to_string(column + 1) + ", row has " +
                     std::to_string(fields.size()) + " columns", line);
  }
  return fields[static_cast<std::size_t>(column)];
}

void check_column_count(const std::vector<std::string_view>& fields, std::size_t expected,
                        std::size_t line) {
  if (fields.size() != expected) {
    throw ParseError("expected " + std::to_string(expected) + " tab-separated columns, got " +
                     std::to_string(fields.size()), line);
  }
}

int parse_int(std::string_view s, std::size_t line) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("not an integer label: '" + std::string(s) + "'", line);
  }
  return value;
}

bool is_word_char(unsigned char c) { return !std::isspace(c) && !std::ispunct(c); }

}  // namespace

bool is_positive(const ParagraphRecord& record) {
  if (record.raw_label) return binarize_label(*record.raw_label) == Polarity::positive;
  if (record.categories) {
    return std::any_of(record.categories->begin(), record.categories->end(),
                       [](int b) { return b != 0; });
  }
  return false;
}

std::string compose_input(const ParagraphRecord& record) {
  return "<e> " + record.keyword + " </e> <e> " + record.country + " </e> " + record.text;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
  for (std::string_view t : kReservedTokens) add(std::string(t));
}

TokenId Vocabulary::add(std::string token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw IndexError("vocabulary id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const std::string& text : texts) {
    for (std::string& w : split_words(text)) ++counts[std::move(w)];
  }
  std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary vocab;
  for (auto& [word, count] : entries) {
    if (count >= min_count) vocab.add(std::move(word));
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open vocabulary " + path.string(), 0);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.size() < kReservedTokens.size()) {
    throw ParseError("vocabulary shorter than the reserved token block", lines.size());
  }
  for (std::size_t i = 0; i < kReservedTokens.size(); ++i) {
    if (lines[i] != kReservedTokens[i]) {
      throw ParseError("expected reserved token " + std::string(kReservedTokens[i]), i + 1);
    }
  }
  Vocabulary vocab;
  for (std::size_t i = kReservedTokens.size(); i < lines.size(); ++i) {
    if (vocab.contains(lines[i])) throw ParseError("duplicate token '" + lines[i] + "'", i + 1);
    vocab.add(lines[i]);
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocabulary " + path.string());
  for (const std::string& t : tokens_) out << t << '\n';
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == '<') {
      const std::string_view rest = text.substr(i);
      if (rest.starts_with("<e>") || rest.starts_with("<E>")) {
        flush();
        out.emplace_back("<e>");
        i += 2;
        continue;
      }
      if (rest.starts_with("</e>") || rest.starts_with("</E>")) {
        flush();
        out.emplace_back("</e>");
        i += 3;
        continue;
      }
    }
    if (is_word_char(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      if (std::ispunct(c)) out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab, int max_len) {
  if (max_len < 2) throw ConfigError("tokenize: max_len must leave room for [CLS] and [SEP]");
  std::vector<std::string> words = split_words(text);
  const std::size_t budget = static_cast<std::size_t>(max_len) - 2;
  // Terms lead the sequence, so cutting from the right removes paragraph
  // words first and reaches the terms only when they alone overflow.
  if (words.size() > budget) words.resize(budget);
  std::vector<TokenId> ids;
  ids.reserve(words.size() + 2);
  ids.push_back(kClsId);
  for (const std::string& w : words) ids.push_back(vocab.id(w));
  ids.push_back(kSepId);
  return ids;
}

std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(vocab.token(id));
  return out;
}

std::vector<std::vector<TokenId>> pad_batch(std::vector<std::vector<TokenId>> batch) {
  std::size_t longest = 0;
  for (const auto& s : batch) longest = std::max(longest, s.size());
  for (auto& s : batch) s.resize(longest, kPadId);
  return batch;
}

// ---------------------------------------------------------------------------
// Loaders
// ---------------------------------------------------------------------------

std::vector<ParagraphRecord> load_subtask1_tsv(const std::filesystem::path& path,
                                               const TsvOptions& options,
                                               const Subtask1Columns& columns) {
  const Subtask1Columns canonical;
  const bool is_canonical = columns.par_id == canonical.par_id &&
                            columns.art_id == canonical.art_id &&
                            columns.keyword == canonical.keyword &&
                            columns.country == canonical.country &&
                            columns.text == canonical.text && columns.label == canonical.label;
  std::vector<ParagraphRecord> records;
  for_each_row(path, options, [&](const std::vector<std::string_view>& f, std::size_t line) {
    if (is_canonical) check_column_count(f, 6, line);
    ParagraphRecord r;
    r.par_id = field(f, columns.par_id, line);
    r.art_id = field(f, columns.art_id, line);
    r.keyword = field(f, columns.keyword, line);
    r.country = field(f, columns.country, line);
    r.text = field(f, columns.text, line);
    const int label = parse_int(field(f, columns.label, line), line);
    binarize_label(label, line);
    r.raw_label = label;
    records.push_back(std::move(r));
  });
  return records;
}

std::vector<ParagraphRecord> load_subtask2_labels(const std::filesystem::path& path,
                                                  const TsvOptions& options,
                                                  const Subtask2Columns& columns) {
  const Subtask2Columns canonical;
  const bool is_canonical = columns.par_id == canonical.par_id &&
                            columns.art_id == canonical.art_id &&
                            columns.text == canonical.text &&
                            columns.keyword == canonical.keyword &&
                            columns.country == canonical.country &&
                            columns.category == canonical.category;
  std::vector<ParagraphRecord> records;
  std::unordered_map<std::string, std::size_t> position;
  for_each_row(path, options, [&](const std::vector<std::string_view>& f, std::size_t line) {
    if (is_canonical) check_column_count(f, 6, line);
    const std::string_view category = field(f, columns.category, line);
    const std::optional<int> c = category_index(category);
    if (!c) throw ParseError("unknown category '" + std::string(category) + "'", line);
    std::string par_id(field(f, columns.par_id, line));
    auto it = position.find(par_id);
    if (it == position.end()) {
      ParagraphRecord r;
      r.par_id = par_id;
      r.art_id = field(f, columns.art_id, line);
      r.text = field(f, columns.text, line);
      r.keyword = field(f, columns.keyword, line);
      r.country = field(f, columns.country, line);
      r.categories = std::vector<int>(kNumCategories, 0);
      it = position.emplace(std::move(par_id), records.size()).first;
      records.push_back(std::move(r));
    }
    (*records[it->second].categories)[static_cast<std::size_t>(*c)] = 1;
  });
  return records;
}

std::vector<ParagraphRecord> attach_categories(std::vector<ParagraphRecord> subtask1,
                                               const std::vector<ParagraphRecord>& categorized) {
  std::unordered_map<std::string, const ParagraphRecord*> by_id;
  for (const ParagraphRecord& r : categorized) by_id.emplace(r.par_id, &r);
  for (ParagraphRecord& r : subtask1) {
    auto it = by_id.find(r.par_id);
    r.categories = it != by_id.end() && it->second->categories
                       ? *it->second->categories
                       : std::vector<int>(kNumCategories, 0);
  }
  return subtask1;
}

// ---------------------------------------------------------------------------
// Folds
// ---------------------------------------------------------------------------

std::vector<std::size_t> FoldAssignment::validation(int f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] == f) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::training(int f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] != f) out.push_back(i);
  return out;
}

FoldAssignment stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified k-fold: k must be at least 2, got " + std::to_string(k));
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(k)) {
      throw ConfigError("stratified k-fold: class " + std::to_string(label) + " has " +
                        std::to_string(members.size()) + " examples, fewer than k = " +
                        std::to_string(k));
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<int> fold_ids(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) fold_ids[static_cast<std::size_t>(f)] = f;
  std::shuffle(fold_ids.begin(), fold_ids.end(), rng);

  FoldAssignment out;
  out.k = k;
  out.fold.assign(labels.size(), -1);
  out.strata.assign(labels.begin(), labels.end());
  // Classes laid end to end and dealt round-robin: each class spans a
  // contiguous run of positions, so it splits as evenly as the whole.
  std::size_t position = 0;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) {
      out.fold[i] = fold_ids[position % static_cast<std::size_t>(k)];
      ++position;
    }
  }
  return out;
}

std::vector<int> multilabel_strata(const std::vector<ParagraphRecord>& records, int k) {
  const bool has_negatives =
      std::any_of(records.begin(), records.end(), [](const auto& r) { return !is_positive(r); });
  std::vector<int> strata(records.size(), 0);
  if (has_negatives) {
    for (std::size_t i = 0; i < records.size(); ++i) strata[i] = is_positive(records[i]) ? 1 : 0;
    return strata;
  }
  std::vector<std::size_t> frequency(kNumCategories, 0);
  for (const auto& r : records) {
    if (!r.categories) continue;
    for (int c = 0; c < kNumCategories; ++c) frequency[c] += (*r.categories)[c] != 0;
  }
  auto more_frequent = [&](int a, int b) {
    return frequency[a] != frequency[b] ? frequency[a] > frequency[b] : a < b;
  };
  int most_common = 0;
  for (int c = 1; c < kNumCategories; ++c)
    if (more_frequent(c, most_common)) most_common = c;
  for (std::size_t i = 0; i < records.size(); ++i) {
    int best = -1;
    if (records[i].categories) {
      for (int c = 0; c < kNumCategories; ++c) {
        if ((*records[i].categories)[c] != 0 && (best < 0 || more_frequent(c, best))) best = c;
      }
    }
    strata[i] = best < 0 ? most_common : best;
  }
  std::map<int, std::size_t> counts;
  for (int s : strata) ++counts[s];
  for (int& s : strata) {
    if (counts[s] < static_cast<std::size_t>(k)) s = most_common;
  }
  return strata;
}

}  // namespace pclft
