// Copyright 2026 The confcorrect Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CONFCORRECT_NORMALIZE_HPP
#define CONFCORRECT_NORMALIZE_HPP

#include <cctype>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confcorrect/types.hpp"

namespace confcorrect {

/// Splits `raw` into normalized words. Non-ASCII bytes are dropped along with
/// any punctuation not listed in `cfg.keep`; a word that loses every
/// character disappears.
inline std::vector<std::string> normalize_text(std::string_view raw, const NormalizationConfig& cfg = {}) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
      continue;
    }
    if (c >= 0x80) continue;
    if (std::isalpha(c)) {
      current.push_back(cfg.uppercase ? static_cast<char>(std::toupper(c)) : ch);
    } else if (std::isdigit(c) || cfg.keep.find(ch) != std::string::npos) {
      current.push_back(ch);
    }
  }
  flush();
  return words;
}

inline std::string join_words(std::span<const std::string> words, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

}  // namespace confcorrect

#endif  // CONFCORRECT_NORMALIZE_HPP
