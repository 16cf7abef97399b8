// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "pclft/labels.hpp"

#include <cctype>
#include <string>

#include "pclft/error.hpp"

namespace pclft {

namespace {

std::string normalize(std::string_view s) {
  std::string out;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

}  // namespace

Polarity binarize_label(int raw_label, std::size_t line) {
  if (raw_label < 0 || raw_label > 4) {
    throw ParseError("label " + std::to_string(raw_label) + " outside 0..4", line);
  }
  return raw_label >= 2 ? Polarity::positive : Polarity::negative;
}

std::optional<int> category_index(std::string_view name) {
  const std::string key = normalize(name);
  if (key.empty()) return std::nullopt;
  for (int c = 0; c < kNumCategories; ++c) {
    if (key == normalize(kCategoryNames[static_cast<std::size_t>(c)]) ||
        key == normalize(kCategoryAbbrev[static_cast<std::size_t>(c)])) {
      return c;
    }
  }
  return std::nullopt;
}

}  // namespace pclft
