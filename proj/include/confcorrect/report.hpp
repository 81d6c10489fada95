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

#ifndef CONFCORRECT_REPORT_HPP
#define CONFCORRECT_REPORT_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "confcorrect/confidence.hpp"
#include "confcorrect/corrector.hpp"
#include "confcorrect/evaluation.hpp"
#include "confcorrect/strategy.hpp"

namespace confcorrect {

/// One grid point of a sweep with everything needed to recompute it.
struct SweepRow {
  std::string dataset;
  std::string system;
  /// Empty for Gibbs scoring, which has no entropic index.
  std::optional<double> alpha;
  Aggregation aggregation = Aggregation::kProduct;
  StrategyKind strategy = StrategyKind::kNaive;
  std::optional<double> threshold;
  RunSummary summary;
  BucketAnalysis buckets;
  std::vector<UtteranceResult> results;

  bool operator==(const SweepRow&) const = default;
};

struct SweepReport {
  std::vector<std::pair<std::string, std::string>> provenance;
  std::vector<SweepRow> rows;

  bool operator==(const SweepReport&) const = default;
};

struct SweepGrid {
  Measure measure = Measure::kTsallis;
  std::vector<double> alphas{0.9, 0.7, 0.5, 0.3};
  std::vector<Aggregation> aggregations{Aggregation::kProduct, Aggregation::kMean, Aggregation::kMin};
  std::vector<StrategyKind> strategies{StrategyKind::kConfidencePrompt};
  /// Applied to the filter strategies only.
  std::vector<double> thresholds{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::string system = "asr";
  double alpha_gibbs_switch_epsilon = 1e-6;
  bool length_normalized_product = false;
  int confidence_decimals = 2;
  /// Template overrides; empty keeps the per-strategy default.
  std::string naive_template;
  std::string confidence_template;

  void validate() const {
    if (measure == Measure::kTsallis && alphas.empty()) throw ParameterError("sweep grid: no alpha values");
    if (aggregations.empty()) throw ParameterError("sweep grid: no aggregations");
    if (strategies.empty()) throw ParameterError("sweep grid: no strategies");
    for (auto k : strategies) {
      if (is_filter(k) && thresholds.empty()) throw ParameterError("sweep grid: filter strategy without thresholds");
    }
  }
};

inline std::string format_number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

inline std::string format_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

inline std::string describe_grid(const SweepGrid& g) {
  std::ostringstream s;
  s << "measure=" << to_string(g.measure);
  if (g.measure == Measure::kTsallis) {
    s << " alphas=";
    for (std::size_t i = 0; i < g.alphas.size(); ++i) s << (i ? "," : "") << format_number(g.alphas[i]);
  }
  s << " aggregations=";
  for (std::size_t i = 0; i < g.aggregations.size(); ++i) s << (i ? "," : "") << to_string(g.aggregations[i]);
  s << " strategies=";
  for (std::size_t i = 0; i < g.strategies.size(); ++i) s << (i ? "," : "") << to_string(g.strategies[i]);
  s << " thresholds=";
  for (std::size_t i = 0; i < g.thresholds.size(); ++i) s << (i ? "," : "") << format_number(g.thresholds[i]);
  s << " product=" << (g.length_normalized_product ? "length_normalized" : "plain");
  return s.str();
}

/// Conventions every report carries regardless of how it was produced.
inline std::vector<std::pair<std::string, std::string>> standard_provenance() {
  return {
      {"wer", "pooled edits / pooled reference words, unit edit costs"},
      {"threshold_rule", "strict: triggered iff confidence < threshold"},
      {"buckets", "low iff sentence confidence < dataset mean; percentages use per-bucket denominators"},
      {"attempt", "normalized correction differs from hypothesis; help+harm+neutral = attempt"},
  };
}

namespace detail {

inline std::vector<std::string> datasets_in_order(std::span<const Utterance> utterances) {
  std::vector<std::string> out;
  for (const auto& u : utterances) {
    if (std::find(out.begin(), out.end(), u.dataset) == out.end()) out.push_back(u.dataset);
  }
  return out;
}

}  // namespace detail

/// Evaluates every (alpha, aggregation, strategy, threshold) grid point on
/// every dataset in `utterances`. Rows are ordered dataset, strategy,
/// threshold, alpha, aggregation (each in grid order). The corrector's
/// cache means a prompt that recurs across grid points is sent once.
inline SweepReport sweep(std::span<const Utterance> utterances, const SweepGrid& grid,
                         const TemplateRegistry& templates, Corrector& corrector,
                         const NormalizationConfig& normalizer = {}) {
  grid.validate();
  SweepReport report;
  report.provenance = standard_provenance();
  report.provenance.emplace_back("normalization", normalizer.describe());
  report.provenance.emplace_back("backend", corrector.config().describe());
  report.provenance.emplace_back("grid", describe_grid(grid));
  report.provenance.emplace_back(
      "templates", "naive=" + (grid.naive_template.empty() ? std::string(kNaiveTemplate) : grid.naive_template) +
                       " confidence=" +
                       (grid.confidence_template.empty() ? std::string(kConfidenceTemplate) : grid.confidence_template));

  const std::vector<std::optional<double>> alphas = [&] {
    std::vector<std::optional<double>> a;
    if (grid.measure == Measure::kGibbs) {
      a.emplace_back(std::nullopt);
    } else {
      for (double x : grid.alphas) a.emplace_back(x);
    }
    return a;
  }();

  // Scored copies per (alpha index, aggregation index).
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Utterance>> scored;
  for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
    for (std::size_t gi = 0; gi < grid.aggregations.size(); ++gi) {
      ConfidenceConfig cc;
      cc.measure = grid.measure;
      cc.alpha = alphas[ai].value_or(1.0);
      cc.aggregation = grid.aggregations[gi];
      cc.alpha_gibbs_switch_epsilon = grid.alpha_gibbs_switch_epsilon;
      cc.length_normalized_product = grid.length_normalized_product;
      scored.emplace(std::pair{ai, gi}, score_utterances({utterances.begin(), utterances.end()}, cc));
    }
  }

  for (const auto& dataset : detail::datasets_in_order(utterances)) {
    for (auto kind : grid.strategies) {
      std::vector<std::optional<double>> thresholds;
      if (is_filter(kind)) {
        for (double t : grid.thresholds) thresholds.emplace_back(t);
      } else {
        thresholds.emplace_back(std::nullopt);
      }
      StrategyConfig sc;
      sc.kind = kind;
      sc.confidence_decimals = grid.confidence_decimals;
      sc.prompt_template = kind == StrategyKind::kConfidencePrompt ? grid.confidence_template : grid.naive_template;
      for (const auto& threshold : thresholds) {
        sc.threshold = threshold;
        for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
          for (std::size_t gi = 0; gi < grid.aggregations.size(); ++gi) {
            std::vector<Utterance> subset;
            for (const auto& u : scored.at({ai, gi})) {
              if (u.dataset == dataset) subset.push_back(u);
            }
            std::vector<CorrectionDecision> decisions;
            decisions.reserve(subset.size());
            for (const auto& u : subset) decisions.push_back(decide(u, sc, templates));
            const auto outputs = correct_batch(subset, decisions, corrector);
            auto run = evaluate_run(subset, decisions, outputs, normalizer);

            SweepRow row;
            row.dataset = dataset;
            row.system = grid.system;
            row.alpha = alphas[ai];
            row.aggregation = grid.aggregations[gi];
            row.strategy = kind;
            row.threshold = threshold;
            row.summary = run.summary;
            if (!run.results.empty()) row.buckets = bucket_analysis(run.results);
            row.results = std::move(run.results);
            report.rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return report;
}

// --- output formats -------------------------------------------------------

enum class ReportFormat { kCsv, kMarkdown, kJson };

inline constexpr std::array<std::pair<ReportFormat, std::string_view>, 3> kReportFormatNames{{
    {ReportFormat::kCsv, "csv"},
    {ReportFormat::kMarkdown, "markdown"},
    {ReportFormat::kJson, "json"},
}};
inline std::string_view to_string(ReportFormat f) { return detail::enum_name(f, kReportFormatNames); }
inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "md") return ReportFormat::kMarkdown;
  return detail::parse_enum(s, kReportFormatNames, "report format");
}

inline constexpr std::array<std::string_view, 17> kCsvColumns{
    "dataset",         "system",         "alpha",         "aggregation",      "strategy",     "threshold",
    "n_utts",          "wer_before_pct", "wer_after_pct", "attempt_pct_low",  "help_pct_low", "harm_pct_low",
    "attempt_pct_high", "help_pct_high", "harm_pct_high", "backend_failures", "empty_ref_excluded",
};

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string opt_number(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }
inline std::string pct(double fraction) { return format_fixed(100.0 * fraction, 2); }

inline void write_provenance(std::ostream& out, const SweepReport& report) {
  for (const auto& [k, v] : report.provenance) out << "# " << k << ": " << v << '\n';
}

}  // namespace detail

inline void write_csv(std::ostream& out, const SweepReport& report) {
  detail::write_provenance(out, report);
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out << (i ? "," : "") << kCsvColumns[i];
  out << '\n';
  for (const auto& r : report.rows) {
    const auto& lo = r.buckets.low;
    const auto& hi = r.buckets.high;
    out << detail::csv_field(r.dataset) << ',' << detail::csv_field(r.system) << ',' << detail::opt_number(r.alpha)
        << ',' << to_string(r.aggregation) << ',' << to_string(r.strategy) << ','
        << detail::opt_number(r.threshold) << ',' << r.summary.n_utts << ',' << detail::pct(r.summary.wer_before())
        << ',' << detail::pct(r.summary.wer_after()) << ',' << format_fixed(lo.attempt_pct, 2) << ','
        << format_fixed(lo.help_pct, 2) << ',' << format_fixed(lo.harm_pct, 2) << ','
        << format_fixed(hi.attempt_pct, 2) << ',' << format_fixed(hi.help_pct, 2) << ','
        << format_fixed(hi.harm_pct, 2) << ',' << r.summary.backend_failures << ','
        << r.summary.empty_ref_excluded << '\n';
  }
}

/// Two tables: corrected WER laid out system -> test set -> alpha with one
/// column per aggregation, then the low/high confidence bucket breakdown.
inline void write_markdown(std::ostream& out, const SweepReport& report) {
  detail::write_provenance(out, report);
  out << "\n## WER (%) after correction by aggregation\n\n";
  out << "| System | Test Set (ASR WER) | Strategy | Threshold | Alpha | Product | Mean | Min |\n";
  out << "|---|---|---|---|---|---|---|---|\n";

  using Key = std::tuple<std::string, std::string, std::string, std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::map<Aggregation, std::string>> cells;
  std::map<Key, std::string> asr_wer;
  for (const auto& r : report.rows) {
    Key key{r.system, r.dataset, std::string(to_string(r.strategy)), detail::opt_number(r.threshold),
            detail::opt_number(r.alpha)};
    if (!cells.count(key)) order.push_back(key);
    cells[key][r.aggregation] = detail::pct(r.summary.wer_after());
    asr_wer.emplace(key, detail::pct(r.summary.wer_before()));
  }
  for (const auto& key : order) {
    const auto& [system, dataset, strategy, threshold, alpha] = key;
    const auto& row = cells[key];
    auto cell = [&](Aggregation a) {
      auto it = row.find(a);
      return it == row.end() ? std::string("-") : it->second;
    };
    out << "| " << system << " | " << dataset << " (" << asr_wer[key] << ") | " << strategy << " | "
        << (threshold.empty() ? "-" : threshold) << " | " << (alpha.empty() ? "-" : alpha) << " | "
        << cell(Aggregation::kProduct) << " | " << cell(Aggregation::kMean) << " | " << cell(Aggregation::kMin)
        << " |\n";
  }

  out << "\n## Confidence buckets (dataset mean threshold)\n\n";
  out << "| Test Set | Strategy | Threshold | Alpha | Aggregation | Conf | N | Avg Conf | Attempt (%) | Help (%) "
         "| Harm (%) | Neutral (%) |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : report.rows) {
    for (const auto* b : {&r.buckets.low, &r.buckets.high}) {
      out << "| " << r.dataset << " | " << to_string(r.strategy) << " | "
          << (r.threshold ? format_number(*r.threshold) : "-") << " | " << (r.alpha ? format_number(*r.alpha) : "-")
          << " | " << to_string(r.aggregation) << " | " << (b->bucket == Bucket::kLow ? "Low" : "High") << " | "
          << b->n << " | " << format_fixed(b->avg_conf, 3) << " | " << format_fixed(b->attempt_pct, 2) << " | "
          << format_fixed(b->help_pct, 2) << " | " << format_fixed(b->harm_pct, 2) << " | "
          << format_fixed(b->neutral_pct, 2) << " |\n";
    }
  }
}

// --- JSON (lossless) ---------------------------------------------------------

inline nlohmann::ordered_json to_json(const UtteranceResult& r) {
  return {{"id", r.id},
          {"dataset", r.dataset},
          {"ref_words", r.ref_words},
          {"edits_before", r.edits_before},
          {"edits_after", r.edits_after},
          {"wer_before", r.wer_before},
          {"wer_after", r.wer_after},
          {"attempted", r.attempted},
          {"outcome", to_string(r.outcome)},
          {"sentence_confidence", r.sentence_confidence},
          {"bucket", to_string(r.bucket)},
          {"backend_failed", r.backend_failed},
          {"parse_salvaged", r.parse_salvaged},
          {"empty_correction", r.empty_correction}};
}

inline UtteranceResult utterance_result_from_json(const nlohmann::json& j) {
  UtteranceResult r;
  r.id = j.at("id").get<std::string>();
  r.dataset = j.at("dataset").get<std::string>();
  r.ref_words = j.at("ref_words").get<std::size_t>();
  r.edits_before = j.at("edits_before").get<std::size_t>();
  r.edits_after = j.at("edits_after").get<std::size_t>();
  r.wer_before = j.at("wer_before").get<double>();
  r.wer_after = j.at("wer_after").get<double>();
  r.attempted = j.at("attempted").get<bool>();
  r.outcome = parse_outcome(j.at("outcome").get<std::string>());
  r.sentence_confidence = j.at("sentence_confidence").get<double>();
  r.bucket = parse_bucket(j.at("bucket").get<std::string>());
  r.backend_failed = j.at("backend_failed").get<bool>();
  r.parse_salvaged = j.at("parse_salvaged").get<bool>();
  r.empty_correction = j.at("empty_correction").get<bool>();
  return r;
}

inline nlohmann::ordered_json to_json(const BucketStats& b) {
  return {{"bucket", to_string(b.bucket)}, {"n", b.n},
          {"attempts", b.attempts},       {"helps", b.helps},
          {"harms", b.harms},             {"neutrals", b.neutrals},
          {"avg_conf", b.avg_conf},       {"attempt_pct", b.attempt_pct},
          {"help_pct", b.help_pct},       {"harm_pct", b.harm_pct},
          {"neutral_pct", b.neutral_pct}};
}

inline BucketStats bucket_stats_from_json(const nlohmann::json& j) {
  BucketStats b;
  b.bucket = parse_bucket(j.at("bucket").get<std::string>());
  b.n = j.at("n").get<std::size_t>();
  b.attempts = j.at("attempts").get<std::size_t>();
  b.helps = j.at("helps").get<std::size_t>();
  b.harms = j.at("harms").get<std::size_t>();
  b.neutrals = j.at("neutrals").get<std::size_t>();
  b.avg_conf = j.at("avg_conf").get<double>();
  b.attempt_pct = j.at("attempt_pct").get<double>();
  b.help_pct = j.at("help_pct").get<double>();
  b.harm_pct = j.at("harm_pct").get<double>();
  b.neutral_pct = j.at("neutral_pct").get<double>();
  return b;
}

inline nlohmann::ordered_json to_json(const SweepReport& report) {
  nlohmann::ordered_json j;
  j["provenance"] = nlohmann::ordered_json::array();
  for (const auto& [k, v] : report.provenance) j["provenance"].push_back({k, v});
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["dataset"] = r.dataset;
    row["system"] = r.system;
    row["alpha"] = r.alpha ? nlohmann::ordered_json(*r.alpha) : nlohmann::ordered_json(nullptr);
    row["aggregation"] = to_string(r.aggregation);
    row["strategy"] = to_string(r.strategy);
    row["threshold"] = r.threshold ? nlohmann::ordered_json(*r.threshold) : nlohmann::ordered_json(nullptr);
    const auto& s = r.summary;
    row["summary"] = {{"n_utts", s.n_utts},
                      {"ref_words", s.ref_words},
                      {"edits_before", s.edits_before},
                      {"edits_after", s.edits_after},
                      {"wer_before", s.wer_before()},
                      {"wer_after", s.wer_after()},
                      {"backend_failures", s.backend_failures},
                      {"empty_ref_excluded", s.empty_ref_excluded},
                      {"parse_salvaged", s.parse_salvaged},
                      {"empty_corrections", s.empty_corrections}};
    row["buckets"] = {{"threshold", r.buckets.threshold},
                      {"low", to_json(r.buckets.low)},
                      {"high", to_json(r.buckets.high)}};
    row["results"] = nlohmann::ordered_json::array();
    for (const auto& u : r.results) row["results"].push_back(to_json(u));
    j["rows"].push_back(std::move(row));
  }
  return j;
}

inline SweepReport sweep_report_from_json(const nlohmann::json& j) {
  SweepReport report;
  try {
    for (const auto& p : j.at("provenance")) {
      report.provenance.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    }
    for (const auto& row : j.at("rows")) {
      SweepRow r;
      r.dataset = row.at("dataset").get<std::string>();
      r.system = row.at("system").get<std::string>();
      if (!row.at("alpha").is_null()) r.alpha = row["alpha"].get<double>();
      r.aggregation = parse_aggregation(row.at("aggregation").get<std::string>());
      r.strategy = parse_strategy(row.at("strategy").get<std::string>());
      if (!row.at("threshold").is_null()) r.threshold = row["threshold"].get<double>();
      const auto& s = row.at("summary");
      r.summary.n_utts = s.at("n_utts").get<std::size_t>();
      r.summary.ref_words = s.at("ref_words").get<std::size_t>();
      r.summary.edits_before = s.at("edits_before").get<std::size_t>();
      r.summary.edits_after = s.at("edits_after").get<std::size_t>();
      r.summary.backend_failures = s.at("backend_failures").get<std::size_t>();
      r.summary.empty_ref_excluded = s.at("empty_ref_excluded").get<std::size_t>();
      r.summary.parse_salvaged = s.at("parse_salvaged").get<std::size_t>();
      r.summary.empty_corrections = s.at("empty_corrections").get<std::size_t>();
      const auto& b = row.at("buckets");
      r.buckets.threshold = b.at("threshold").get<double>();
      r.buckets.low = bucket_stats_from_json(b.at("low"));
      r.buckets.high = bucket_stats_from_json(b.at("high"));
      for (const auto& u : row.at("results")) r.results.push_back(utterance_result_from_json(u));
      report.rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report JSON: ") + e.what());
  }
  return report;
}

inline void write_report(std::ostream& out, const SweepReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kCsv: write_csv(out, report); break;
    case ReportFormat::kMarkdown: write_markdown(out, report); break;
    case ReportFormat::kJson: out << to_json(report).dump(2) << '\n'; break;
  }
}

inline void emit_report(const SweepReport& report, ReportFormat format, const std::filesystem::path& out) {
  std::ofstream file(out, std::ios::binary);
  if (!file) throw IoError("cannot write report to " + out.string());
  write_report(file, report, format);
  if (!file) throw IoError("error writing report to " + out.string());
}

}  // namespace confcorrect

#endif  // CONFCORRECT_REPORT_HPP
