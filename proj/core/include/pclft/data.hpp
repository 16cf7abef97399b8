// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

// Corpus loading, input composition, tokenization and stratified folds.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pclft/labels.hpp"
#include "pclft/tensor.hpp"

namespace pclft {

struct ParagraphRecord {
  std::string par_id;
  std::string art_id;
  std::string keyword;
  std::string country;
  std::string text;
  std::optional<int> raw_label;
  std::optional<std::vector<int>> categories;
};

/// Contains-PCL flag: the binarized raw label when present, otherwise
/// whether any category bit is set.
bool is_positive(const ParagraphRecord& record);

/// "<e> keyword </e> <e> country </e> text"
std::string compose_input(const ParagraphRecord& record);

// Reserved vocabulary entries; their ids never change.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kClsId = 1;
inline constexpr TokenId kSepId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kTermOpenId = 4;
inline constexpr TokenId kTermCloseId = 5;
inline constexpr std::array<std::string_view, 6> kReservedTokens = {
    "[PAD]", "[CLS]", "[SEP]", "[UNK]", "<e>", "</e>"};

class Vocabulary {
 public:
  /// Reserved tokens only.
  Vocabulary();

  /// Reserved tokens followed by corpus words with at least `min_count`
  /// occurrences, most frequent first (ties alphabetical).
  static Vocabulary build(std::span<const std::string> texts, std::size_t min_count = 1);

  /// One token per line; the line index is the id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  TokenId add(std::string token);
  /// kUnkId for unknown tokens.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const noexcept { return tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Lowercases and splits on whitespace and ASCII punctuation; each
/// punctuation character becomes its own token and "<e>"/"</e>" stay whole.
std::vector<std::string> split_words(std::string_view text);

/// [CLS] words [SEP], at most max_len ids, truncated from the right. Term
/// groups composed in front of the paragraph therefore survive truncation.
std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab, int max_len = 250);

std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab);

/// Right-pads every sequence with kPadId to the longest length.
std::vector<std::vector<TokenId>> pad_batch(std::vector<std::vector<TokenId>> batch);

/// Maps canonical columns onto file columns (0-based). Defaults are the
/// canonical layout.
struct Subtask1Columns {
  int par_id = 0, art_id = 1, keyword = 2, country = 3, text = 4, label = 5;
};
struct Subtask2Columns {
  int par_id = 0, art_id = 1, text = 2, keyword = 3, country = 4, category = 5;
};

struct TsvOptions {
  bool header = false;
};

/// One record per row: par_id, art_id, keyword, country, text, label.
std::vector<ParagraphRecord> load_subtask1_tsv(const std::filesystem::path& path,
                                               const TsvOptions& options = {},
                                               const Subtask1Columns& columns = {});

/// One row per (paragraph, category); rows of the same paragraph are OR-ed
/// into a 7-bit vector. Records keep first-appearance order.
std::vector<ParagraphRecord> load_subtask2_labels(const std::filesystem::path& path,
                                                  const TsvOptions& options = {},
                                                  const Subtask2Columns& columns = {});

/// Subtask-1 records with category vectors attached: the aggregated vector
/// for paragraphs present in `categorized`, all zeros otherwise.
std::vector<ParagraphRecord> attach_categories(std::vector<ParagraphRecord> subtask1,
                                               const std::vector<ParagraphRecord>& categorized);

struct FoldAssignment {
  int k = 5;
  /// Fold index per example.
  std::vector<int> fold;
  /// Label the split was stratified on, per example.
  std::vector<int> strata;

  std::vector<std::size_t> validation(int f) const;
  std::vector<std::size_t> training(int f) const;
};

/// Per-class shuffles dealt round-robin, so fold sizes and per-class counts
/// per fold each differ by at most one.
FoldAssignment stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

/// Stratification labels for the multi-label task. With negatives present
/// this is the contains-PCL flag; otherwise each paragraph takes the
/// corpus-wide most frequent of its own categories, and categories with
/// fewer than k paragraphs fold into the most common one.
std::vector<int> multilabel_strata(const std::vector<ParagraphRecord>& records, int k);

}  // namespace pclft
