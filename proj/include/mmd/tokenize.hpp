// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mmd {

using Sentence = std::vector<std::string>;
using TokenizedReview = std::vector<Sentence>;

/// Lowercases, splits sentences on `.`, `!` and `?`, splits words on
/// whitespace and strips remaining punctuation. Empty sentences are dropped.
TokenizedReview tokenize(std::string_view text);

std::size_t token_count(const TokenizedReview& review);

}  // namespace mmd
