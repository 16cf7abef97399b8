// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

// Label scheme of the PCL corpus: raw annotations 0-4 collapse to a binary
// contains-PCL flag, and positive paragraphs carry a 7-category vector.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace pclft {

inline constexpr int kNumCategories = 7;

/// Category order used by every 7-bit vector in the project.
inline constexpr std::array<std::string_view, kNumCategories> kCategoryNames = {
    "Unbalanced power relations", "Shallow solution", "Presupposition", "Authority voice",
    "Metaphor",                   "Compassion",       "The poorer, the merrier"};

inline constexpr std::array<std::string_view, kNumCategories> kCategoryAbbrev = {
    "unb.", "shal.", "pres.", "auth.", "met.", "comp.", "merr."};

enum class Polarity { negative = 0, positive = 1 };

/// Labels 2, 3 and 4 are positive; 0 and 1 negative. Anything else is a
/// ParseError tagged with `line`.
Polarity binarize_label(int raw_label, std::size_t line = 0);

/// Index of a category from its full name, underscore form or abbreviation
/// (case- and punctuation-insensitive); nullopt when unknown.
std::optional<int> category_index(std::string_view name);

}  // namespace pclft
