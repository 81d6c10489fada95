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

#ifndef CONFCORRECT_ALIGNMENT_HPP
#define CONFCORRECT_ALIGNMENT_HPP

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "confcorrect/error.hpp"

namespace confcorrect {

enum class EditOp { kMatch, kSubstitute, kInsert, kDelete };

/// One step of an alignment. Insertions have no reference word, deletions
/// no hypothesis word.
struct AlignedPair {
  EditOp op;
  std::string ref;
  std::string hyp;

  bool operator==(const AlignedPair&) const = default;
};

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t matches = 0;

  std::size_t errors() const noexcept { return substitutions + insertions + deletions; }
  std::size_t ref_length() const noexcept { return substitutions + deletions + matches; }
  std::size_t hyp_length() const noexcept { return substitutions + insertions + matches; }
  bool operator==(const EditCounts&) const = default;
};

struct Alignment {
  std::vector<AlignedPair> ops;
  EditCounts counts;

  std::size_t distance() const noexcept { return counts.errors(); }

  /// Recounts `ops`; equal to `counts` for every alignment built by align().
  EditCounts recount() const {
    EditCounts c;
    for (const auto& p : ops) {
      switch (p.op) {
        case EditOp::kMatch: ++c.matches; break;
        case EditOp::kSubstitute: ++c.substitutions; break;
        case EditOp::kInsert: ++c.insertions; break;
        case EditOp::kDelete: ++c.deletions; break;
      }
    }
    return c;
  }
};

/// Unit-cost Levenshtein alignment of word sequences. When several
/// predecessors tie during backtrace the preference is
/// match > substitute > delete > insert.
inline Alignment align(std::span<const std::string> ref, std::span<const std::string> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  const std::size_t cols = m + 1;
  std::vector<std::size_t> cost((n + 1) * cols);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * cols + j]; };

  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  Alignment result;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const std::size_t here = at(i, j);
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && at(i - 1, j - 1) == here) {
      result.ops.push_back({EditOp::kMatch, ref[i - 1], hyp[j - 1]});
      ++result.counts.matches;
      --i, --j;
    } else if (i > 0 && j > 0 && ref[i - 1] != hyp[j - 1] && at(i - 1, j - 1) + 1 == here) {
      result.ops.push_back({EditOp::kSubstitute, ref[i - 1], hyp[j - 1]});
      ++result.counts.substitutions;
      --i, --j;
    } else if (i > 0 && at(i - 1, j) + 1 == here) {
      result.ops.push_back({EditOp::kDelete, ref[i - 1], {}});
      ++result.counts.deletions;
      --i;
    } else {
      result.ops.push_back({EditOp::kInsert, {}, hyp[j - 1]});
      ++result.counts.insertions;
      --j;
    }
  }
  std::reverse(result.ops.begin(), result.ops.end());
  return result;
}

/// (S + I + D) / |ref|. Undefined for an empty reference.
inline double utterance_wer(std::span<const std::string> ref, std::span<const std::string> hyp) {
  if (ref.empty()) throw ValidationError("WER is undefined for an empty reference");
  return static_cast<double>(align(ref, hyp).distance()) / static_cast<double>(ref.size());
}

struct WordPair {
  std::string id;
  std::vector<std::string> reference;
  std::vector<std::string> hypothesis;
};

/// Pooled WER: total edits over total reference words.
inline double corpus_wer(std::span<const WordPair> pairs) {
  std::size_t edits = 0;
  std::size_t words = 0;
  for (const auto& p : pairs) {
    if (p.reference.empty()) {
      throw ValidationError("empty reference for utterance '" + p.id + "'; WER is undefined");
    }
    edits += align(p.reference, p.hypothesis).distance();
    words += p.reference.size();
  }
  return words == 0 ? 0.0 : static_cast<double>(edits) / static_cast<double>(words);
}

inline char op_code(EditOp op) {
  switch (op) {
    case EditOp::kMatch: return 'M';
    case EditOp::kSubstitute: return 'S';
    case EditOp::kInsert: return 'I';
    case EditOp::kDelete: return 'D';
  }
  return '?';
}

/// Renders an alignment as space-separated `op:ref→hyp` tokens where op is
/// one of M/S/I/D and a missing side is written `*`.
inline std::string format_alignment(const Alignment& a) {
  std::string out;
  for (const auto& p : a.ops) {
    if (!out.empty()) out += ' ';
    out += op_code(p.op);
    out += ':';
    out += p.op == EditOp::kInsert ? "*" : p.ref;
    out += "→";
    out += p.op == EditOp::kDelete ? "*" : p.hyp;
  }
  return out;
}

}  // namespace confcorrect

#endif  // CONFCORRECT_ALIGNMENT_HPP
