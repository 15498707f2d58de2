// SPDX-License-Identifier: Apache-2.0
#include "mmd/tokenize.hpp"

#include <cctype>

namespace mmd {

namespace {

void flush_word(std::string& word, Sentence& sentence) {
  if (!word.empty()) {
    sentence.push_back(std::move(word));
    word.clear();
  }
}

void flush_sentence(Sentence& sentence, TokenizedReview& out) {
  if (!sentence.empty()) {
    out.push_back(std::move(sentence));
    sentence.clear();
  }
}

}  // namespace

TokenizedReview tokenize(std::string_view text) {
  TokenizedReview out;
  Sentence sentence;
  std::string word;
  for (char raw : text) {
    const auto ch = static_cast<unsigned char>(raw);
    if (raw == '.' || raw == '!' || raw == '?') {
      flush_word(word, sentence);
      flush_sentence(sentence, out);
    } else if (std::isspace(ch)) {
      flush_word(word, sentence);
    } else if (std::isalnum(ch) || ch >= 0x80) {
      word.push_back(static_cast<char>(std::tolower(ch)));
    }
    // other punctuation is stripped
  }
  flush_word(word, sentence);
  flush_sentence(sentence, out);
  return out;
}

std::size_t token_count(const TokenizedReview& review) {
  std::size_t n = 0;
  for (const auto& s : review) n += s.size();
  return n;
}

}  // namespace mmd
