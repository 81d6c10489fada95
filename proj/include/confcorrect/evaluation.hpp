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

#ifndef CONFCORRECT_EVALUATION_HPP
#define CONFCORRECT_EVALUATION_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "confcorrect/alignment.hpp"
#include "confcorrect/corrector.hpp"
#include "confcorrect/error.hpp"
#include "confcorrect/strategy.hpp"
#include "confcorrect/types.hpp"

namespace confcorrect {

enum class Outcome { kHelp, kHarm, kNeutral, kUntouched };
enum class Bucket { kLow, kHigh };

inline constexpr std::array<std::pair<Outcome, std::string_view>, 4> kOutcomeNames{{
    {Outcome::kHelp, "help"},
    {Outcome::kHarm, "harm"},
    {Outcome::kNeutral, "neutral"},
    {Outcome::kUntouched, "untouched"},
}};
inline constexpr std::array<std::pair<Bucket, std::string_view>, 2> kBucketNames{{
    {Bucket::kLow, "low"},
    {Bucket::kHigh, "high"},
}};
inline std::string_view to_string(Outcome o) { return detail::enum_name(o, kOutcomeNames); }
inline std::string_view to_string(Bucket b) { return detail::enum_name(b, kBucketNames); }
inline Outcome parse_outcome(std::string_view s) { return detail::parse_enum(s, kOutcomeNames, "outcome"); }
inline Bucket parse_bucket(std::string_view s) { return detail::parse_enum(s, kBucketNames, "bucket"); }

struct UtteranceResult {
  std::string id;
  std::string dataset;
  std::size_t ref_words = 0;
  std::size_t edits_before = 0;
  std::size_t edits_after = 0;
  double wer_before = 0.0;
  double wer_after = 0.0;
  /// Normalized output differs from the hypothesis.
  bool attempted = false;
  Outcome outcome = Outcome::kUntouched;
  double sentence_confidence = 0.0;
  Bucket bucket = Bucket::kHigh;
  bool backend_failed = false;
  bool parse_salvaged = false;
  bool empty_correction = false;

  bool operator==(const UtteranceResult&) const = default;
};

inline Outcome classify(bool attempted, double wer_before, double wer_after) {
  if (!attempted) return Outcome::kUntouched;
  if (wer_after < wer_before) return Outcome::kHelp;
  if (wer_after > wer_before) return Outcome::kHarm;
  return Outcome::kNeutral;
}

struct RunSummary {
  std::size_t n_utts = 0;
  std::size_t ref_words = 0;
  std::size_t edits_before = 0;
  std::size_t edits_after = 0;
  std::size_t backend_failures = 0;
  std::size_t empty_ref_excluded = 0;
  std::size_t parse_salvaged = 0;
  std::size_t empty_corrections = 0;

  double wer_before() const { return ref_words ? static_cast<double>(edits_before) / ref_words : 0.0; }
  double wer_after() const { return ref_words ? static_cast<double>(edits_after) / ref_words : 0.0; }
  bool operator==(const RunSummary&) const = default;
};

struct BucketStats {
  Bucket bucket = Bucket::kLow;
  std::size_t n = 0;
  std::size_t attempts = 0;
  std::size_t helps = 0;
  std::size_t harms = 0;
  std::size_t neutrals = 0;
  double avg_conf = 0.0;
  double attempt_pct = 0.0;
  double help_pct = 0.0;
  double harm_pct = 0.0;
  double neutral_pct = 0.0;

  bool operator==(const BucketStats&) const = default;
};

/// Low/high split at the mean sentence confidence of one dataset.
struct BucketAnalysis {
  double threshold = 0.0;
  BucketStats low{Bucket::kLow};
  BucketStats high{Bucket::kHigh};

  bool operator==(const BucketAnalysis&) const = default;
};

/// Splits `results` at their mean sentence confidence (low iff strictly
/// below) and reports per-bucket percentages with per-bucket denominators.
inline BucketAnalysis bucket_analysis(std::span<const UtteranceResult> results) {
  if (results.empty()) throw ParameterError("bucket_analysis: no results");
  for (const auto& r : results) {
    if (r.dataset != results.front().dataset) {
      throw ParameterError("bucket_analysis: results mix datasets '" + results.front().dataset + "' and '" +
                           r.dataset + "'");
    }
  }
  BucketAnalysis out;
  double sum = 0.0;
  for (const auto& r : results) sum += r.sentence_confidence;
  out.threshold = sum / static_cast<double>(results.size());

  double conf_low = 0.0;
  double conf_high = 0.0;
  for (const auto& r : results) {
    const bool low = r.sentence_confidence < out.threshold;
    auto& b = low ? out.low : out.high;
    (low ? conf_low : conf_high) += r.sentence_confidence;
    ++b.n;
    if (r.attempted) ++b.attempts;
    switch (r.outcome) {
      case Outcome::kHelp: ++b.helps; break;
      case Outcome::kHarm: ++b.harms; break;
      case Outcome::kNeutral: ++b.neutrals; break;
      case Outcome::kUntouched: break;
    }
  }
  auto finish = [](BucketStats& b, double conf_sum) {
    if (b.n == 0) return;
    const double n = static_cast<double>(b.n);
    b.avg_conf = conf_sum / n;
    b.attempt_pct = 100.0 * static_cast<double>(b.attempts) / n;
    b.help_pct = 100.0 * static_cast<double>(b.helps) / n;
    b.harm_pct = 100.0 * static_cast<double>(b.harms) / n;
    b.neutral_pct = 100.0 * static_cast<double>(b.neutrals) / n;
  };
  finish(out.low, conf_low);
  finish(out.high, conf_high);
  return out;
}

/// Writes each result's bucket using the mean sentence confidence of its
/// own dataset.
inline void assign_buckets(std::vector<UtteranceResult>& results) {
  std::map<std::string, std::pair<double, std::size_t>> totals;
  for (const auto& r : results) {
    auto& [sum, n] = totals[r.dataset];
    sum += r.sentence_confidence;
    ++n;
  }
  for (auto& r : results) {
    const auto& [sum, n] = totals[r.dataset];
    r.bucket = r.sentence_confidence < sum / static_cast<double>(n) ? Bucket::kLow : Bucket::kHigh;
  }
}

struct RunResult {
  std::vector<UtteranceResult> results;
  RunSummary summary;
};

/// Scores one strategy run. Untriggered and failed utterances keep their
/// hypothesis; utterances without a reference are counted and skipped.
inline RunResult evaluate_run(std::span<const Utterance> utterances, std::span<const CorrectionDecision> decisions,
                              const std::map<std::string, BatchOutput>& corrections,
                              const NormalizationConfig& normalizer = {}) {
  if (utterances.size() != decisions.size()) {
    throw ParameterError("evaluate_run: utterance and decision counts differ");
  }
  RunResult run;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const auto& u = utterances[i];
    if (u.reference.empty()) {
      ++run.summary.empty_ref_excluded;
      continue;
    }
    UtteranceResult r;
    r.id = u.id;
    r.dataset = u.dataset;
    r.sentence_confidence = u.sentence_confidence.value_or(0.0);
    const auto hyp = u.hypothesis_words();
    auto after = hyp;
    if (decisions[i].should_correct) {
      const auto it = corrections.find(u.id);
      if (it == corrections.end()) {
        throw ValidationError("no correction output for triggered utterance '" + u.id + "'");
      }
      if (it->second.status == BatchStatus::kFailed) {
        r.backend_failed = true;
        ++run.summary.backend_failures;
      } else {
        auto parsed = parse_correction(it->second.raw_output, normalizer);
        after = std::move(parsed.words);
        r.parse_salvaged = parsed.salvaged;
        r.empty_correction = after.empty();
        run.summary.parse_salvaged += parsed.salvaged;
        run.summary.empty_corrections += r.empty_correction;
      }
    }
    r.ref_words = u.reference.size();
    r.edits_before = align(u.reference, hyp).distance();
    r.edits_after = align(u.reference, after).distance();
    r.wer_before = static_cast<double>(r.edits_before) / static_cast<double>(r.ref_words);
    r.wer_after = static_cast<double>(r.edits_after) / static_cast<double>(r.ref_words);
    r.attempted = after != hyp;
    r.outcome = classify(r.attempted, r.wer_before, r.wer_after);

    ++run.summary.n_utts;
    run.summary.ref_words += r.ref_words;
    run.summary.edits_before += r.edits_before;
    run.summary.edits_after += r.edits_after;
    run.results.push_back(std::move(r));
  }
  assign_buckets(run.results);
  return run;
}

}  // namespace confcorrect

#endif  // CONFCORRECT_EVALUATION_HPP
