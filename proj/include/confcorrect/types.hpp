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

#ifndef CONFCORRECT_TYPES_HPP
#define CONFCORRECT_TYPES_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "confcorrect/error.hpp"

namespace confcorrect {

namespace detail {

// Maps between an enum and its wire names. Each enum below provides a
// `kNames` table; parsing is exact and case-sensitive.
template <typename E, std::size_t N>
std::string_view enum_name(E value, const std::array<std::pair<E, std::string_view>, N>& names) {
  for (const auto& [e, name] : names) {
    if (e == value) return name;
  }
  return "?";
}

template <typename E, std::size_t N>
E parse_enum(std::string_view text, const std::array<std::pair<E, std::string_view>, N>& names,
             std::string_view what) {
  for (const auto& [e, name] : names) {
    if (name == text) return e;
  }
  std::string valid;
  for (const auto& [e, name] : names) {
    if (!valid.empty()) valid += ", ";
    valid += name;
  }
  throw ParameterError("unknown " + std::string(what) + " '" + std::string(text) +
                       "' (expected one of: " + valid + ")");
}

}  // namespace detail

enum class Measure { kGibbs, kTsallis };
enum class Aggregation { kMean, kMin, kProduct };

inline constexpr std::array<std::pair<Measure, std::string_view>, 2> kMeasureNames{{
    {Measure::kGibbs, "gibbs"},
    {Measure::kTsallis, "tsallis"},
}};
inline constexpr std::array<std::pair<Aggregation, std::string_view>, 3> kAggregationNames{{
    {Aggregation::kMean, "mean"},
    {Aggregation::kMin, "min"},
    {Aggregation::kProduct, "product"},
}};

inline std::string_view to_string(Measure m) { return detail::enum_name(m, kMeasureNames); }
inline std::string_view to_string(Aggregation a) { return detail::enum_name(a, kAggregationNames); }
inline Measure parse_measure(std::string_view s) { return detail::parse_enum(s, kMeasureNames, "measure"); }
inline Aggregation parse_aggregation(std::string_view s) {
  return detail::parse_enum(s, kAggregationNames, "aggregation");
}

/// One decoder frame's posterior over the token vocabulary. The vocabulary
/// size is the length of the vector; validation lives in the manifest loader.
struct FrameDistribution {
  std::vector<double> probs;

  std::size_t vocab_size() const noexcept { return probs.size(); }
  bool operator==(const FrameDistribution&) const = default;
};

/// A hypothesized word with the frames the decoder aligned to it.
struct WordHypothesis {
  std::string text;
  std::vector<FrameDistribution> frames;
  std::optional<double> word_confidence;

  bool operator==(const WordHypothesis&) const = default;
};

struct Utterance {
  std::string id;
  std::string dataset;
  std::vector<std::string> reference;
  std::vector<WordHypothesis> hypothesis;
  std::optional<double> sentence_confidence;

  std::vector<std::string> hypothesis_words() const {
    std::vector<std::string> words;
    words.reserve(hypothesis.size());
    for (const auto& w : hypothesis) words.push_back(w.text);
    return words;
  }

  bool operator==(const Utterance&) const = default;
};

/// Frame scoring and aggregation settings.
struct ConfidenceConfig {
  Measure measure = Measure::kTsallis;
  double alpha = 0.9;
  Aggregation aggregation = Aggregation::kProduct;
  /// Tsallis falls back to Gibbs when |alpha - 1| is below this.
  double alpha_gibbs_switch_epsilon = 1e-6;
  /// Product aggregation as exp(mean log) instead of the plain product.
  bool length_normalized_product = false;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw ParameterError("alpha must lie in (0, 1], got " + std::to_string(alpha));
    }
    if (!(alpha_gibbs_switch_epsilon >= 0.0)) {
      throw ParameterError("alpha_gibbs_switch_epsilon must be non-negative");
    }
  }
};

/// Text normalization applied to references, hypotheses and corrector output.
/// Letters are uppercased, characters outside [A-Z0-9] plus `keep` are
/// dropped, whitespace splits words.
struct NormalizationConfig {
  bool uppercase = true;
  std::string keep = "'";

  /// Named presets accepted by `--normalizer`.
  static NormalizationConfig preset(std::string_view name) {
    if (name == "default") return {};
    if (name == "no-apostrophe") return {true, ""};
    if (name == "keep-hyphen") return {true, "'-"};
    throw ParameterError("unknown normalizer preset '" + std::string(name) +
                         "' (expected default, no-apostrophe, keep-hyphen)");
  }

  std::string describe() const {
    return std::string("uppercase=") + (uppercase ? "true" : "false") + " keep=\"" + keep + "\"";
  }

  bool operator==(const NormalizationConfig&) const = default;
};

}  // namespace confcorrect

#endif  // CONFCORRECT_TYPES_HPP
