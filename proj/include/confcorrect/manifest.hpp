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

#ifndef CONFCORRECT_MANIFEST_HPP
#define CONFCORRECT_MANIFEST_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "confcorrect/error.hpp"
#include "confcorrect/normalize.hpp"
#include "confcorrect/types.hpp"

namespace confcorrect {

inline constexpr double kProbSumTolerance = 1e-6;
inline constexpr double kProbClipTolerance = 1e-9;

namespace detail {

inline std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

// Clips float noise at the [0,1] boundary and checks the simplex constraint.
inline void validate_distribution(FrameDistribution& dist, const std::string& context) {
  if (dist.probs.size() < 2) {
    throw ValidationError(context + ": vocabulary size must be >= 2, got " + std::to_string(dist.probs.size()));
  }
  double sum = 0.0;
  for (std::size_t v = 0; v < dist.probs.size(); ++v) {
    double& p = dist.probs[v];
    if (std::isnan(p)) throw ValidationError(context + ": probability " + std::to_string(v) + " is NaN");
    if (p < 0.0) {
      if (p < -kProbClipTolerance) {
        throw ValidationError(context + ": negative probability at entry " + std::to_string(v));
      }
      p = 0.0;
    } else if (p > 1.0) {
      if (p > 1.0 + kProbClipTolerance) {
        throw ValidationError(context + ": probability above 1 at entry " + std::to_string(v));
      }
      p = 1.0;
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    std::ostringstream msg;
    msg.precision(10);
    msg << context << ": probabilities sum to " << sum << ", expected 1 +- " << kProbSumTolerance;
    throw ValidationError(msg.str());
  }
}

inline double unit_interval(const nlohmann::json& v, const std::string& context) {
  if (!v.is_number()) throw ValidationError(context + " must be a number");
  const double x = v.get<double>();
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError(context + " must lie in [0, 1]");
  return x;
}

}  // namespace detail

/// Parses one manifest record. `source` and `line` only decorate messages.
inline Utterance parse_manifest_record(const std::string& text, const NormalizationConfig& normalizer,
                                       const std::string& source = "<record>", std::size_t line = 1) {
  const auto at = detail::where(source, line);
  nlohmann::json rec;
  try {
    rec = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(at + "malformed record: " + e.what());
  }
  if (!rec.is_object()) throw ValidationError(at + "malformed record: expected a JSON object");
  if (!rec.contains("id") || !rec["id"].is_string() || rec["id"].get<std::string>().empty()) {
    throw ValidationError(at + "malformed record: missing string field 'id'");
  }
  Utterance u;
  u.id = rec["id"].get<std::string>();
  const auto ctx = at + "utterance '" + u.id + "'";
  if (!rec.contains("dataset") || !rec["dataset"].is_string()) {
    throw ValidationError(ctx + ": missing string field 'dataset'");
  }
  u.dataset = rec["dataset"].get<std::string>();
  if (rec.contains("reference") && !rec["reference"].is_null()) {
    if (!rec["reference"].is_string()) throw ValidationError(ctx + ": 'reference' must be a string");
    u.reference = normalize_text(rec["reference"].get<std::string>(), normalizer);
  }
  if (!rec.contains("words") || !rec["words"].is_array()) {
    throw ValidationError(ctx + ": missing array field 'words'");
  }
  const auto& words = rec["words"];
  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    const auto& w = words[wi];
    const auto wctx = ctx + " word " + std::to_string(wi);
    if (!w.is_object() || !w.contains("text") || !w["text"].is_string()) {
      throw ValidationError(wctx + ": missing string field 'text'");
    }
    auto tokens = normalize_text(w["text"].get<std::string>(), normalizer);
    if (tokens.size() != 1) {
      throw ValidationError(wctx + ": text '" + w["text"].get<std::string>() +
                            "' must normalize to exactly one word");
    }
    WordHypothesis hyp;
    hyp.text = std::move(tokens.front());
    if (!w.contains("frames") || !w["frames"].is_array() || w["frames"].empty()) {
      throw ValidationError(wctx + ": 'frames' must be a non-empty array");
    }
    for (std::size_t fi = 0; fi < w["frames"].size(); ++fi) {
      const auto& f = w["frames"][fi];
      const auto fctx = wctx + " frame " + std::to_string(fi);
      if (!f.is_array()) throw ValidationError(fctx + ": frame must be an array of numbers");
      FrameDistribution dist;
      dist.probs.reserve(f.size());
      for (const auto& p : f) {
        if (!p.is_number()) throw ValidationError(fctx + ": frame must be an array of numbers");
        dist.probs.push_back(p.get<double>());
      }
      detail::validate_distribution(dist, fctx);
      if (!hyp.frames.empty() && hyp.frames.front().vocab_size() != dist.vocab_size()) {
        throw ValidationError(fctx + ": vocabulary size " + std::to_string(dist.vocab_size()) +
                              " differs from the word's first frame (" +
                              std::to_string(hyp.frames.front().vocab_size()) + ")");
      }
      hyp.frames.push_back(std::move(dist));
    }
    if (w.contains("word_confidence") && !w["word_confidence"].is_null()) {
      hyp.word_confidence = detail::unit_interval(w["word_confidence"], wctx + ": word_confidence");
    }
    u.hypothesis.push_back(std::move(hyp));
  }
  if (rec.contains("sentence_confidence") && !rec["sentence_confidence"].is_null()) {
    u.sentence_confidence = detail::unit_interval(rec["sentence_confidence"], ctx + ": sentence_confidence");
  }
  return u;
}

/// Reads a line-delimited manifest. Blank lines are skipped.
inline std::vector<Utterance> read_manifest(std::istream& in, const NormalizationConfig& normalizer,
                                            const std::string& source = "<stream>") {
  std::vector<Utterance> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto u = parse_manifest_record(line, normalizer, source, lineno);
    if (!seen.insert(u.id).second) {
      throw ValidationError(detail::where(source, lineno) + "duplicate utterance id '" + u.id + "'");
    }
    out.push_back(std::move(u));
  }
  return out;
}

inline std::vector<Utterance> load_manifest(const std::filesystem::path& path,
                                            const NormalizationConfig& normalizer = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return read_manifest(in, normalizer, path.string());
}

inline nlohmann::ordered_json to_json(const Utterance& u) {
  nlohmann::ordered_json rec;
  rec["id"] = u.id;
  rec["dataset"] = u.dataset;
  if (!u.reference.empty()) rec["reference"] = join_words(u.reference);
  rec["words"] = nlohmann::ordered_json::array();
  for (const auto& w : u.hypothesis) {
    nlohmann::ordered_json jw;
    jw["text"] = w.text;
    jw["frames"] = nlohmann::ordered_json::array();
    for (const auto& f : w.frames) jw["frames"].push_back(f.probs);
    if (w.word_confidence) jw["word_confidence"] = *w.word_confidence;
    rec["words"].push_back(std::move(jw));
  }
  if (u.sentence_confidence) rec["sentence_confidence"] = *u.sentence_confidence;
  return rec;
}

inline void write_manifest(std::ostream& out, const std::vector<Utterance>& utterances) {
  for (const auto& u : utterances) out << to_json(u).dump() << '\n';
}

inline void save_manifest(const std::filesystem::path& path, const std::vector<Utterance>& utterances) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  write_manifest(out, utterances);
  if (!out) throw IoError("error writing manifest " + path.string());
}

/// Reads `id<TAB>transcript` lines.
inline std::map<std::string, std::string> load_references(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open reference file " + path.string());
  std::map<std::string, std::string> refs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ValidationError(detail::where(path.string(), lineno) + "expected id<TAB>transcript");
    }
    auto id = line.substr(0, tab);
    if (!refs.emplace(id, line.substr(tab + 1)).second) {
      throw ValidationError(detail::where(path.string(), lineno) + "duplicate reference id '" + id + "'");
    }
  }
  return refs;
}

/// Overwrites utterance references from `refs`. Reference ids with no
/// matching utterance are orphans and abort the join.
inline void join_references(std::vector<Utterance>& utterances, const std::map<std::string, std::string>& refs,
                            const NormalizationConfig& normalizer = {}) {
  std::set<std::string> used;
  for (auto& u : utterances) {
    if (auto it = refs.find(u.id); it != refs.end()) {
      u.reference = normalize_text(it->second, normalizer);
      used.insert(u.id);
    }
  }
  std::vector<std::string> orphans;
  for (const auto& [id, text] : refs) {
    if (!used.count(id)) orphans.push_back(id);
  }
  if (!orphans.empty()) {
    throw ValidationError("reference ids with no matching utterance: " + join_words(orphans, ", "));
  }
}

}  // namespace confcorrect

#endif  // CONFCORRECT_MANIFEST_HPP
