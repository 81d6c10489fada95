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

#ifndef CONFCORRECT_STRATEGY_HPP
#define CONFCORRECT_STRATEGY_HPP

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "confcorrect/error.hpp"
#include "confcorrect/normalize.hpp"
#include "confcorrect/types.hpp"

namespace confcorrect {

enum class StrategyKind { kNaive, kSentenceFilter, kWordFilter, kConfidencePrompt };
enum class Trigger { kAlways, kSentenceBelowThreshold, kWordBelowThreshold, kNotTriggered };

inline constexpr std::array<std::pair<StrategyKind, std::string_view>, 4> kStrategyNames{{
    {StrategyKind::kNaive, "naive"},
    {StrategyKind::kSentenceFilter, "sentence_filter"},
    {StrategyKind::kWordFilter, "word_filter"},
    {StrategyKind::kConfidencePrompt, "confidence_prompt"},
}};
inline constexpr std::array<std::pair<Trigger, std::string_view>, 4> kTriggerNames{{
    {Trigger::kAlways, "always"},
    {Trigger::kSentenceBelowThreshold, "sentence_below_threshold"},
    {Trigger::kWordBelowThreshold, "word_below_threshold"},
    {Trigger::kNotTriggered, "not_triggered"},
}};

inline std::string_view to_string(StrategyKind k) { return detail::enum_name(k, kStrategyNames); }
inline std::string_view to_string(Trigger t) { return detail::enum_name(t, kTriggerNames); }
inline StrategyKind parse_strategy(std::string_view s) { return detail::parse_enum(s, kStrategyNames, "strategy"); }
inline Trigger parse_trigger(std::string_view s) { return detail::parse_enum(s, kTriggerNames, "trigger"); }

inline bool is_filter(StrategyKind k) {
  return k == StrategyKind::kSentenceFilter || k == StrategyKind::kWordFilter;
}

inline constexpr std::string_view kConfidenceTemplate = "confidence_v1";
inline constexpr std::string_view kNaiveTemplate = "naive_v1";
inline constexpr std::string_view kWordsPlaceholder = "{{WORDS}}";
inline constexpr std::string_view kWordsWithConfPlaceholder = "{{WORDS_WITH_CONF}}";
inline constexpr std::string_view kEmptyHypothesisToken = "<EMPTY>";
inline constexpr std::string_view kCorrectionMarker = "Correction:";
/// Start of the line that precedes the hypothesis in the shipped templates.
inline constexpr std::string_view kQuestionLead = "Correct the following sentence";

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kConfidencePrompt;
  std::optional<double> threshold;
  /// Empty selects the default for `kind`: confidence_v1 for confidence
  /// prompting, naive_v1 otherwise.
  std::string prompt_template;
  int confidence_decimals = 2;

  std::string template_id() const {
    if (!prompt_template.empty()) return prompt_template;
    return std::string(kind == StrategyKind::kConfidencePrompt ? kConfidenceTemplate : kNaiveTemplate);
  }

  // Thresholds above 1 are accepted: with strict "<" they are the only way
  // to trigger on words scored exactly 1.
  void validate() const {
    if (is_filter(kind)) {
      if (!threshold) throw ParameterError(std::string(to_string(kind)) + " requires a threshold");
      if (!(*threshold >= 0.0) || !std::isfinite(*threshold)) {
        throw ParameterError("threshold must be a finite value >= 0");
      }
    } else if (threshold) {
      throw ParameterError(std::string(to_string(kind)) + " does not take a threshold");
    }
    if (confidence_decimals < 1) throw ParameterError("confidence_decimals must be >= 1");
  }
};

struct CorrectionDecision {
  bool should_correct = false;
  Trigger trigger = Trigger::kNotTriggered;
  std::optional<std::string> prompt;

  bool operator==(const CorrectionDecision&) const = default;
};

/// Immutable set of prompt templates keyed by id (file stem).
class TemplateRegistry {
 public:
  TemplateRegistry() = default;

  /// Loads every `*.txt` in `dir`. A single trailing newline is dropped so
  /// editors that append one do not change the rendered bytes.
  static TemplateRegistry from_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
      throw TemplateError("template directory not found: " + dir.string());
    }
    TemplateRegistry reg;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
      std::ifstream in(entry.path(), std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      auto text = buf.str();
      if (!text.empty() && text.back() == '\n') text.pop_back();
      if (!text.empty() && text.back() == '\r') text.pop_back();
      reg.add(entry.path().stem().string(), std::move(text));
    }
    return reg;
  }

  void add(std::string id, std::string text) {
    check_placeholders(id, text);
    templates_[std::move(id)] = std::move(text);
  }

  const std::string& get(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw TemplateError("prompt template not found: " + id);
    return it->second;
  }

  bool contains(const std::string& id) const { return templates_.count(id) != 0; }

 private:
  static void check_placeholders(const std::string& id, const std::string& text) {
    std::size_t pos = 0;
    while ((pos = text.find("{{", pos)) != std::string::npos) {
      const auto end = text.find("}}", pos);
      if (end == std::string::npos) throw TemplateError("template " + id + ": unterminated placeholder");
      const auto name = std::string_view(text).substr(pos, end + 2 - pos);
      if (name != kWordsPlaceholder && name != kWordsWithConfPlaceholder) {
        throw TemplateError("template " + id + ": unknown placeholder " + std::string(name));
      }
      pos = end + 2;
    }
  }

  std::map<std::string, std::string, std::less<>> templates_;
};

/// Formats `value` (expected in [0,1]) with `decimals` digits, rounding half
/// up on the shortest decimal representation of the double, so 0.855
/// renders as 0.86 even though its binary value is slightly below.
inline std::string format_confidence(double value, int decimals = 2) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  std::string s(buf, end);
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    s += '.';
    dot = s.size() - 1;
  }
  const std::size_t want = dot + 1 + static_cast<std::size_t>(decimals);
  if (s.size() <= want) return s + std::string(want - s.size(), '0');

  const bool round_up = s[want] >= '5';
  s.resize(want);
  if (round_up) {
    std::size_t i = s.size();
    while (i-- > 0) {
      if (s[i] == '.') continue;
      if (s[i] == '-') break;
      if (s[i] != '9') {
        ++s[i];
        return s;
      }
      s[i] = '0';
    }
    s.insert(s[0] == '-' ? 1 : 0, "1");
  }
  return s;
}

namespace detail {

inline void replace_all(std::string& text, std::string_view from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace detail

/// Instantiates the strategy's template for `u`.
inline std::string render_prompt(const Utterance& u, const StrategyConfig& cfg, const TemplateRegistry& templates) {
  std::string text = templates.get(cfg.template_id());
  std::string plain;
  std::string annotated;
  const bool needs_conf = text.find(kWordsWithConfPlaceholder) != std::string::npos;
  if (u.hypothesis.empty()) {
    plain = annotated = std::string(kEmptyHypothesisToken);
  }
  for (const auto& w : u.hypothesis) {
    if (!plain.empty()) {
      plain += ' ';
      annotated += ' ';
    }
    plain += w.text;
    if (needs_conf) {
      if (!w.word_confidence) {
        throw TemplateError("utterance '" + u.id + "': word '" + w.text + "' has no confidence to render");
      }
      annotated += w.text + "[" + format_confidence(*w.word_confidence, cfg.confidence_decimals) + "]";
    }
  }
  detail::replace_all(text, kWordsWithConfPlaceholder, annotated);
  detail::replace_all(text, kWordsPlaceholder, plain);
  return text;
}

namespace detail {

inline std::optional<double> min_word_confidence(const Utterance& u) {
  std::optional<double> lowest;
  for (const auto& w : u.hypothesis) {
    if (!w.word_confidence) {
      throw ParameterError("utterance '" + u.id + "': word '" + w.text + "' is not scored");
    }
    if (!lowest || *w.word_confidence < *lowest) lowest = *w.word_confidence;
  }
  return lowest;
}

}  // namespace detail

/// Applies one of the four correction strategies. Thresholds are strict:
/// a score equal to the threshold does not trigger. An empty hypothesis
/// counts as confidence 0 under both filters.
inline CorrectionDecision decide(const Utterance& u, const StrategyConfig& cfg, const TemplateRegistry& templates) {
  cfg.validate();
  CorrectionDecision d;
  switch (cfg.kind) {
    case StrategyKind::kNaive:
    case StrategyKind::kConfidencePrompt:
      d.should_correct = true;
      d.trigger = Trigger::kAlways;
      break;
    case StrategyKind::kSentenceFilter:
      if (!u.sentence_confidence) {
        throw ParameterError("utterance '" + u.id + "' has no sentence confidence; run scoring first");
      }
      d.should_correct = *u.sentence_confidence < *cfg.threshold;
      d.trigger = d.should_correct ? Trigger::kSentenceBelowThreshold : Trigger::kNotTriggered;
      break;
    case StrategyKind::kWordFilter:
      d.should_correct = detail::min_word_confidence(u).value_or(0.0) < *cfg.threshold;
      d.trigger = d.should_correct ? Trigger::kWordBelowThreshold : Trigger::kNotTriggered;
      break;
  }
  if (d.should_correct) d.prompt = render_prompt(u, cfg, templates);
  return d;
}

struct ParsedCorrection {
  std::vector<std::string> words;
  /// Prompt scaffolding or confidence annotations had to be removed.
  bool salvaged = false;
};

/// Extracts the corrected sentence from raw model output: drops everything
/// through the last `Correction:` marker, strips echoed `[0.85]`-style
/// annotations and the empty-hypothesis token, then normalizes.
inline ParsedCorrection parse_correction(std::string_view raw, const NormalizationConfig& normalizer = {}) {
  ParsedCorrection out;
  std::string text(raw);
  if (const auto pos = text.rfind(kCorrectionMarker); pos != std::string::npos) {
    text.erase(0, pos + kCorrectionMarker.size());
    out.salvaged = true;
  }
  static const std::regex kBracket(R"(\[[^\]\n]*\])");
  if (std::regex_search(text, kBracket)) {
    text = std::regex_replace(text, kBracket, "");
    out.salvaged = true;
  }
  detail::replace_all(text, kEmptyHypothesisToken, "");
  out.words = normalize_text(text, normalizer);
  return out;
}

/// Pulls the hypothesis line back out of a prompt rendered from a shipped
/// template: the first non-empty line after the last line starting with
/// "Correct the following sentence". Returns the whole prompt when the
/// lead line is absent.
inline std::string extract_question_text(std::string_view prompt) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= prompt.size()) {
    auto nl = prompt.find('\n', start);
    if (nl == std::string_view::npos) nl = prompt.size();
    lines.push_back(prompt.substr(start, nl - start));
    start = nl + 1;
  }
  for (std::size_t i = lines.size(); i-- > 0;) {
    if (lines[i].substr(0, kQuestionLead.size()) != kQuestionLead) continue;
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      if (lines[j].find_first_not_of(" \t\r") != std::string_view::npos) return std::string(lines[j]);
    }
    return {};
  }
  return std::string(prompt);
}

/// Writes `{prompt, completion}` lines for fine-tuning. All references are
/// checked before the file is touched.
inline std::size_t export_training_pairs(const std::vector<Utterance>& utterances, const StrategyConfig& cfg,
                                         const TemplateRegistry& templates, const std::filesystem::path& out) {
  std::vector<std::string> lines;
  lines.reserve(utterances.size());
  for (const auto& u : utterances) {
    if (u.reference.empty()) {
      throw ValidationError("utterance '" + u.id + "' has no reference; cannot export a training pair");
    }
    nlohmann::ordered_json rec;
    rec["prompt"] = render_prompt(u, cfg, templates);
    rec["completion"] = join_words(u.reference);
    lines.push_back(rec.dump());
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) throw IoError("cannot write training pairs to " + out.string());
  for (const auto& l : lines) file << l << '\n';
  if (!file) throw IoError("error writing training pairs to " + out.string());
  return lines.size();
}

}  // namespace confcorrect

#endif  // CONFCORRECT_STRATEGY_HPP
