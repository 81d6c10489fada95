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

#ifndef CONFCORRECT_CONFIDENCE_HPP
#define CONFCORRECT_CONFIDENCE_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "confcorrect/error.hpp"
#include "confcorrect/types.hpp"

namespace confcorrect {

/// Frame-level confidence in [0, 1]; 1 means a one-hot posterior.
struct FrameConfidence {
  double value = 0.0;
  bool operator==(const FrameConfidence&) const = default;
};

namespace detail {
inline double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }
}  // namespace detail

/// Normalized negentropy: 1 + (1 / ln V) * sum p ln p, with 0 ln 0 = 0.
inline FrameConfidence gibbs_confidence(const FrameDistribution& dist) {
  const auto vocab = static_cast<double>(dist.vocab_size());
  double plogp = 0.0;
  for (double p : dist.probs) {
    if (p > 0.0) plogp += p * std::log(p);
  }
  return {detail::clamp_unit(1.0 + plogp / std::log(vocab))};
}

/// Tsallis confidence with entropic index `alpha`:
///   (V^(1-a) - sum p^a) / (V^(1-a) - 1)
/// The expression is 0/0 at alpha = 1, so inputs within
/// `gibbs_switch_epsilon` of 1 use the Gibbs limit instead.
inline FrameConfidence tsallis_confidence(const FrameDistribution& dist, double alpha,
                                          double gibbs_switch_epsilon = 1e-6) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ParameterError("tsallis alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
  if (std::abs(alpha - 1.0) < gibbs_switch_epsilon) return gibbs_confidence(dist);
  const double vpow = std::pow(static_cast<double>(dist.vocab_size()), 1.0 - alpha);
  double sum = 0.0;
  for (double p : dist.probs) {
    if (p > 0.0) sum += std::pow(p, alpha);
  }
  return {detail::clamp_unit((vpow - sum) / (vpow - 1.0))};
}

inline FrameConfidence frame_confidence(const FrameDistribution& dist, const ConfidenceConfig& cfg) {
  return cfg.measure == Measure::kGibbs ? gibbs_confidence(dist)
                                        : tsallis_confidence(dist, cfg.alpha, cfg.alpha_gibbs_switch_epsilon);
}

/// Collapses a word's frame scores. The product runs in log space; any
/// zero frame makes the product exactly zero and a single frame is returned
/// unchanged.
inline double aggregate_word(std::span<const FrameConfidence> frames, Aggregation method,
                             bool length_normalized_product = false) {
  if (frames.empty()) throw ParameterError("aggregate_word: no frame scores");
  switch (method) {
    case Aggregation::kMean: {
      double sum = 0.0;
      for (const auto& f : frames) sum += f.value;
      return detail::clamp_unit(sum / static_cast<double>(frames.size()));
    }
    case Aggregation::kMin:
      return std::min_element(frames.begin(), frames.end(),
                              [](const auto& a, const auto& b) { return a.value < b.value; })
          ->value;
    case Aggregation::kProduct: {
      if (frames.size() == 1) return detail::clamp_unit(frames.front().value);
      double log_sum = 0.0;
      double lowest = 1.0;
      for (const auto& f : frames) {
        if (f.value <= 0.0) return 0.0;
        log_sum += std::log(f.value);
        lowest = std::min(lowest, f.value);
      }
      if (length_normalized_product) return detail::clamp_unit(std::exp(log_sum / static_cast<double>(frames.size())));
      // exp(log x) can land one ulp above x; the product never exceeds its smallest factor.
      return detail::clamp_unit(std::min(std::exp(log_sum), lowest));
    }
  }
  return 0.0;
}

/// Geometric mean of word confidences.
inline double sentence_confidence(std::span<const double> word_scores) {
  if (word_scores.empty()) throw ParameterError("sentence_confidence: no word scores");
  double log_sum = 0.0;
  for (double w : word_scores) {
    if (w <= 0.0) return 0.0;
    log_sum += std::log(w);
  }
  return detail::clamp_unit(std::exp(log_sum / static_cast<double>(word_scores.size())));
}

/// Returns a copy of `u` with every word and the sentence scored. An empty
/// hypothesis gets sentence confidence 0.
inline Utterance score_utterance(Utterance u, const ConfidenceConfig& cfg) {
  cfg.validate();
  std::vector<double> word_scores;
  word_scores.reserve(u.hypothesis.size());
  std::vector<FrameConfidence> frames;
  for (auto& w : u.hypothesis) {
    frames.clear();
    for (const auto& f : w.frames) frames.push_back(frame_confidence(f, cfg));
    w.word_confidence = aggregate_word(frames, cfg.aggregation, cfg.length_normalized_product);
    word_scores.push_back(*w.word_confidence);
  }
  u.sentence_confidence = word_scores.empty() ? 0.0 : sentence_confidence(word_scores);
  return u;
}

inline std::vector<Utterance> score_utterances(const std::vector<Utterance>& utterances,
                                               const ConfidenceConfig& cfg) {
  std::vector<Utterance> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) out.push_back(score_utterance(u, cfg));
  return out;
}

}  // namespace confcorrect

#endif  // CONFCORRECT_CONFIDENCE_HPP
