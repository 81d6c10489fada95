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

// confcorrect: score ASR hypotheses, gate LLM correction on confidence,
// and evaluate the outcome.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "confcorrect/confcorrect.hpp"

namespace cc = confcorrect;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

constexpr const char* kFormatsHelp = R"(File formats:
  Hypothesis manifest (JSON lines, one utterance per line):
    id (string), dataset (string), reference (string, optional),
    words (array of {text: string, frames: array of arrays of numbers}).
    Scored manifests add words[].word_confidence and sentence_confidence.
  Reference file: id<TAB>transcript per line.
  Corrections file (JSON lines): id, dataset, strategy, threshold,
    should_correct, trigger, prompt_hash, status (passthrough|corrected|failed),
    raw_output, correction, parse_salvaged, error.
  Training pairs (JSON lines): prompt, completion.
  Cache file (JSON lines, append-only): prompt_hash, raw_output, latency_ms,
    backend, timestamp.
  Mock script: JSON object {"HYP WORDS": "OUTPUT", ...} or JSON lines
    {"input": ..., "output": ...}.
  Alignment dump: id<TAB>op:ref→hyp ... with op in M/S/I/D and * for a
    missing side.
  Report CSV columns: dataset, system, alpha, aggregation, strategy,
    threshold, n_utts, wer_before_pct, wer_after_pct, attempt_pct_low,
    help_pct_low, harm_pct_low, attempt_pct_high, help_pct_high,
    harm_pct_high, backend_failures, empty_ref_excluded.
    Provenance lines start with '#'.
  Prompt templates: <id>.txt in the template directory with placeholders
    {{WORDS}} and {{WORDS_WITH_CONF}}.

Config file (INI) sections and keys:
  [confidence] measure alpha aggregation switch_epsilon length_normalized_product
  [strategy]   kind threshold template decimals template_dir
  [backend]    kind endpoint model timeout max_retries concurrency cache script
               backoff temperature
  [normalization] preset uppercase keep
  [run]        seed
  Precedence: command-line flag > environment > config file > default.

Environment: CONFCORRECT_API_KEY, CONFCORRECT_ENDPOINT, CONFCORRECT_TEMPLATE_DIR.
Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.)";

// Everything a flag can set. Unset optionals fall back to env, config file,
// then defaults.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> normalizer;
  std::optional<long long> seed;
  std::optional<std::string> out;
  std::optional<std::string> template_dir;

  std::optional<std::string> input;
  std::optional<std::string> references;
  std::optional<std::string> corrections;
  std::optional<std::string> format;
  std::optional<std::string> system;
  std::optional<std::string> stage;

  std::optional<std::string> measure;
  std::optional<double> alpha;
  std::optional<std::string> aggregation;
  std::optional<double> switch_epsilon;
  std::optional<bool> length_normalized_product;

  std::optional<std::string> strategy;
  std::optional<double> threshold;
  std::optional<std::string> prompt_template;
  std::optional<int> decimals;

  std::optional<std::string> backend;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::optional<double> timeout;
  std::optional<int> max_retries;
  std::optional<int> concurrency;
  std::optional<std::string> cache;
  std::optional<std::string> script;
  std::optional<double> backoff;

  std::vector<std::string> alphas;
  std::vector<std::string> aggregations;
  std::vector<std::string> strategies;
  std::vector<std::string> thresholds;
};

struct RunConfig {
  cc::ConfidenceConfig confidence;
  cc::StrategyConfig strategy;
  cc::BackendConfig backend;
  cc::NormalizationConfig normalization;
  std::string normalizer_name = "default";
  std::filesystem::path template_dir;
  std::optional<long long> seed;
  std::optional<std::string> config_file;

  std::vector<std::pair<std::string, std::string>> provenance() const {
    std::ostringstream conf;
    conf << "measure=" << cc::to_string(confidence.measure) << " alpha=" << cc::format_number(confidence.alpha)
         << " aggregation=" << cc::to_string(confidence.aggregation)
         << " switch_epsilon=" << cc::format_number(confidence.alpha_gibbs_switch_epsilon)
         << " product=" << (confidence.length_normalized_product ? "length_normalized" : "plain");
    std::ostringstream strat;
    strat << "kind=" << cc::to_string(strategy.kind);
    if (strategy.threshold) strat << " threshold=" << cc::format_number(*strategy.threshold);
    strat << " template=" << strategy.template_id() << " decimals=" << strategy.confidence_decimals;
    std::vector<std::pair<std::string, std::string>> p{
        {"confidence", conf.str()},
        {"strategy", strat.str()},
        {"normalization", normalizer_name + " (" + normalization.describe() + ")"},
        {"backend", backend.describe()},
        {"seed", seed ? std::to_string(*seed) : "unset"},
    };
    if (config_file) p.emplace_back("config_file", *config_file);
    return p;
  }
};

std::optional<std::string> env(const char* name) {
  if (const char* v = std::getenv(name); v && *v) return std::string(v);
  return std::nullopt;
}

template <typename T>
T resolve(const std::optional<T>& flag, const std::optional<T>& from_env, const boost::property_tree::ptree& file,
          const std::string& key, T fallback) {
  if (flag) return *flag;
  if (from_env) return *from_env;
  if (auto v = file.get_optional<T>(key)) return *v;
  return fallback;
}

template <typename T>
std::optional<T> resolve_optional(const std::optional<T>& flag, const boost::property_tree::ptree& file,
                                  const std::string& key) {
  if (flag) return flag;
  if (auto v = file.get_optional<T>(key)) return *v;
  return std::nullopt;
}

RunConfig resolve_config(const Flags& f) {
  boost::property_tree::ptree file;
  RunConfig rc;
  if (f.config) {
    try {
      boost::property_tree::ini_parser::read_ini(*f.config, file);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw cc::ValidationError(std::string("config file: ") + e.what());
    }
    rc.config_file = *f.config;
  }
  const std::optional<std::string> none;
  try {
    rc.normalizer_name = resolve(f.normalizer, none, file, "normalization.preset", std::string("default"));
    rc.normalization = cc::NormalizationConfig::preset(rc.normalizer_name);
    if (!f.normalizer) {
      if (auto v = file.get_optional<bool>("normalization.uppercase")) rc.normalization.uppercase = *v;
      if (auto v = file.get_optional<std::string>("normalization.keep")) rc.normalization.keep = *v;
    }

    auto& c = rc.confidence;
    c.measure = cc::parse_measure(resolve(f.measure, none, file, "confidence.measure", std::string("tsallis")));
    c.alpha = resolve(f.alpha, std::optional<double>{}, file, "confidence.alpha", 0.9);
    c.aggregation =
        cc::parse_aggregation(resolve(f.aggregation, none, file, "confidence.aggregation", std::string("product")));
    c.alpha_gibbs_switch_epsilon =
        resolve(f.switch_epsilon, std::optional<double>{}, file, "confidence.switch_epsilon", 1e-6);
    c.length_normalized_product = resolve(f.length_normalized_product, std::optional<bool>{}, file,
                                          "confidence.length_normalized_product", false);
    c.validate();

    auto& s = rc.strategy;
    s.kind = cc::parse_strategy(resolve(f.strategy, none, file, "strategy.kind", std::string("confidence_prompt")));
    s.threshold = resolve_optional(f.threshold, file, "strategy.threshold");
    if (!cc::is_filter(s.kind) && !f.threshold) s.threshold.reset();
    s.prompt_template = resolve(f.prompt_template, none, file, "strategy.template", std::string());
    s.confidence_decimals = resolve(f.decimals, std::optional<int>{}, file, "strategy.decimals", 2);

    rc.template_dir = resolve(f.template_dir, env("CONFCORRECT_TEMPLATE_DIR"), file, "strategy.template_dir",
                              std::string(CONFCORRECT_DEFAULT_TEMPLATE_DIR));

    auto& b = rc.backend;
    b.kind = cc::parse_backend(resolve(f.backend, none, file, "backend.kind", std::string("mock_identity")));
    b.endpoint = resolve(f.endpoint, env(cc::kEndpointEnv), file, "backend.endpoint", std::string());
    b.model_name = resolve(f.model, none, file, "backend.model", std::string("default"));
    b.timeout_seconds = resolve(f.timeout, std::optional<double>{}, file, "backend.timeout", 60.0);
    b.max_retries = resolve(f.max_retries, std::optional<int>{}, file, "backend.max_retries", 3);
    b.concurrency_limit = resolve(f.concurrency, std::optional<int>{}, file, "backend.concurrency", 4);
    b.backoff_seconds = resolve(f.backoff, std::optional<double>{}, file, "backend.backoff", 0.5);
    b.temperature = file.get<double>("backend.temperature", 0.0);
    if (auto v = resolve_optional(f.cache, file, "backend.cache")) b.cache_path = *v;
    if (auto v = resolve_optional(f.script, file, "backend.script")) b.script_path = *v;
    b.api_key = env(cc::kApiKeyEnv).value_or("");
    rc.seed = resolve_optional(f.seed, file, "run.seed");
    b.seed = rc.seed;
  } catch (const boost::property_tree::ptree_bad_data& e) {
    throw cc::ValidationError(std::string("config file: ") + e.what());
  }
  return rc;
}

// Output goes to --out or stdout.
class Output {
 public:
  explicit Output(const std::optional<std::string>& path) {
    if (path && *path != "-") {
      file_.open(*path, std::ios::binary);
      if (!file_) throw cc::IoError("cannot write " + *path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<cc::Utterance> load_input(const Flags& f, const RunConfig& rc) {
  if (!f.input) throw cc::ParameterError("--in is required");
  auto utts = cc::load_manifest(*f.input, rc.normalization);
  if (f.references) cc::join_references(utts, cc::load_references(*f.references), rc.normalization);
  return utts;
}

cc::TemplateRegistry load_templates(const RunConfig& rc) {
  return cc::TemplateRegistry::from_directory(rc.template_dir);
}

cc::ReportFormat report_format(const Flags& f) {
  if (f.format) return cc::parse_report_format(*f.format);
  if (f.out) {
    const auto ext = std::filesystem::path(*f.out).extension();
    if (ext == ".md") return cc::ReportFormat::kMarkdown;
    if (ext == ".json") return cc::ReportFormat::kJson;
  }
  return cc::ReportFormat::kCsv;
}

// --- corrections file -------------------------------------------------------

struct CorrectionLine {
  std::string id;
  std::string dataset;
  cc::StrategyKind strategy = cc::StrategyKind::kNaive;
  std::optional<double> threshold;
  cc::CorrectionDecision decision;
  cc::BatchOutput output;
};

std::vector<CorrectionLine> load_corrections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cc::IoError("cannot open corrections file " + path);
  std::vector<CorrectionLine> lines;
  std::set<std::string> seen;
  std::string text;
  std::size_t lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(text);
      CorrectionLine c;
      c.id = j.at("id").get<std::string>();
      c.dataset = j.value("dataset", "");
      c.strategy = cc::parse_strategy(j.at("strategy").get<std::string>());
      if (j.contains("threshold") && !j["threshold"].is_null()) c.threshold = j["threshold"].get<double>();
      c.decision.should_correct = j.at("should_correct").get<bool>();
      c.decision.trigger = cc::parse_trigger(j.at("trigger").get<std::string>());
      c.output.status = cc::parse_batch_status(j.at("status").get<std::string>());
      c.output.raw_output = j.at("raw_output").get<std::string>();
      c.output.prompt_hash = j.value("prompt_hash", "");
      c.output.error = j.value("error", "");
      if (!seen.insert(c.id).second) throw cc::ValidationError("duplicate id '" + c.id + "'");
      lines.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw cc::ValidationError(path + ":" + std::to_string(lineno) + ": malformed correction record: " + e.what());
    } catch (const cc::Error& e) {
      throw cc::ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return lines;
}

// Matches corrections to manifest order; any id present on only one side is
// an orphan.
std::vector<const CorrectionLine*> join_corrections(const std::vector<cc::Utterance>& utts,
                                                    const std::vector<CorrectionLine>& lines) {
  std::map<std::string, const CorrectionLine*> by_id;
  for (const auto& l : lines) by_id.emplace(l.id, &l);
  std::vector<const CorrectionLine*> joined;
  std::vector<std::string> orphans;
  std::set<std::string> manifest_ids;
  for (const auto& u : utts) {
    manifest_ids.insert(u.id);
    auto it = by_id.find(u.id);
    if (it == by_id.end()) {
      orphans.push_back(u.id + " (manifest only)");
      continue;
    }
    joined.push_back(it->second);
  }
  for (const auto& l : lines) {
    if (!manifest_ids.count(l.id)) orphans.push_back(l.id + " (corrections only)");
  }
  if (!orphans.empty()) throw cc::ValidationError("id mismatch: " + cc::join_words(orphans, ", "));
  return joined;
}

// --- subcommands ------------------------------------------------------------

int cmd_score(const Flags& f) {
  const auto rc = resolve_config(f);
  const auto scored = cc::score_utterances(load_input(f, rc), rc.confidence);
  Output out(f.out);
  cc::write_manifest(out.stream(), scored);
  std::cerr << "scored " << scored.size() << " utterances\n";
  return kExitOk;
}

int cmd_correct(const Flags& f) {
  const auto rc = resolve_config(f);
  rc.strategy.validate();
  const auto utts = load_input(f, rc);
  const auto templates = load_templates(rc);
  std::vector<cc::CorrectionDecision> decisions;
  decisions.reserve(utts.size());
  for (const auto& u : utts) decisions.push_back(cc::decide(u, rc.strategy, templates));

  cc::Corrector corrector(rc.backend);
  const auto outputs = cc::correct_batch(utts, decisions, corrector);

  Output out(f.out);
  std::size_t triggered = 0;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const auto& u = utts[i];
    const auto& o = outputs.at(u.id);
    nlohmann::ordered_json rec;
    rec["id"] = u.id;
    rec["dataset"] = u.dataset;
    rec["strategy"] = cc::to_string(rc.strategy.kind);
    rec["threshold"] = rc.strategy.threshold ? nlohmann::ordered_json(*rc.strategy.threshold) : nullptr;
    rec["should_correct"] = decisions[i].should_correct;
    rec["trigger"] = cc::to_string(decisions[i].trigger);
    rec["prompt_hash"] = o.prompt_hash;
    rec["status"] = cc::to_string(o.status);
    rec["raw_output"] = o.raw_output;
    const auto parsed = cc::parse_correction(o.raw_output, rc.normalization);
    rec["correction"] = cc::join_words(parsed.words);
    rec["parse_salvaged"] = o.status == cc::BatchStatus::kCorrected && parsed.salvaged;
    rec["error"] = o.error;
    out.stream() << rec.dump() << '\n';
    triggered += decisions[i].should_correct;
    if (o.status == cc::BatchStatus::kFailed) {
      ++failed;
      std::cerr << "correction failed for " << u.id << ": " << o.error << '\n';
    }
  }
  std::cerr << "triggered " << triggered << "/" << utts.size() << ", backend calls " << corrector.backend_calls()
            << ", failures " << failed << '\n';
  return triggered > 0 && failed == triggered ? kExitRuntime : kExitOk;
}

int cmd_evaluate(const Flags& f) {
  const auto rc = resolve_config(f);
  if (!f.corrections) throw cc::ParameterError("--corrections is required");
  const auto utts = load_input(f, rc);
  const auto lines = load_corrections(*f.corrections);
  const auto joined = join_corrections(utts, lines);

  cc::SweepReport report;
  report.provenance = cc::standard_provenance();
  for (auto& p : rc.provenance()) report.provenance.push_back(std::move(p));
  report.provenance.emplace_back("corrections", std::filesystem::path(*f.corrections).filename().string());

  std::vector<std::string> datasets;
  for (const auto& u : utts) {
    if (std::find(datasets.begin(), datasets.end(), u.dataset) == datasets.end()) datasets.push_back(u.dataset);
  }
  for (const auto& dataset : datasets) {
    std::vector<cc::Utterance> subset;
    std::vector<cc::CorrectionDecision> decisions;
    std::map<std::string, cc::BatchOutput> outputs;
    std::optional<cc::StrategyKind> kind;
    std::optional<double> threshold;
    for (std::size_t i = 0; i < utts.size(); ++i) {
      if (utts[i].dataset != dataset) continue;
      const auto* line = joined[i];
      if (kind && (*kind != line->strategy || threshold != line->threshold)) {
        throw cc::ValidationError("corrections file mixes strategies within dataset '" + dataset + "'");
      }
      kind = line->strategy;
      threshold = line->threshold;
      subset.push_back(utts[i]);
      decisions.push_back(line->decision);
      outputs.emplace(line->id, line->output);
    }
    auto run = cc::evaluate_run(subset, decisions, outputs, rc.normalization);
    cc::SweepRow row;
    row.dataset = dataset;
    row.system = f.system.value_or("asr");
    if (rc.confidence.measure == cc::Measure::kTsallis) row.alpha = rc.confidence.alpha;
    row.aggregation = rc.confidence.aggregation;
    row.strategy = kind.value_or(rc.strategy.kind);
    row.threshold = threshold;
    row.summary = run.summary;
    if (!run.results.empty()) row.buckets = cc::bucket_analysis(run.results);
    row.results = std::move(run.results);
    report.rows.push_back(std::move(row));
  }
  Output out(f.out);
  cc::write_report(out.stream(), report, report_format(f));
  return kExitOk;
}

std::vector<double> parse_doubles(const std::vector<std::string>& items, const char* what) {
  std::vector<double> out;
  for (const auto& s : items) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::logic_error&) {
      throw cc::ParameterError(std::string("bad ") + what + " value '" + s + "'");
    }
  }
  return out;
}

int cmd_sweep(const Flags& f) {
  const auto rc = resolve_config(f);
  const auto utts = load_input(f, rc);
  const auto templates = load_templates(rc);

  cc::SweepGrid grid;
  grid.measure = rc.confidence.measure;
  if (!f.alphas.empty()) grid.alphas = parse_doubles(f.alphas, "alpha");
  for (double a : grid.alphas) {
    cc::ConfidenceConfig probe;
    probe.alpha = a;
    probe.validate();
  }
  if (!f.aggregations.empty()) {
    grid.aggregations.clear();
    for (const auto& a : f.aggregations) grid.aggregations.push_back(cc::parse_aggregation(a));
  }
  if (!f.strategies.empty()) {
    grid.strategies.clear();
    for (const auto& s : f.strategies) grid.strategies.push_back(cc::parse_strategy(s));
  }
  if (!f.thresholds.empty()) grid.thresholds = parse_doubles(f.thresholds, "threshold");
  grid.system = f.system.value_or("asr");
  grid.alpha_gibbs_switch_epsilon = rc.confidence.alpha_gibbs_switch_epsilon;
  grid.length_normalized_product = rc.confidence.length_normalized_product;
  grid.confidence_decimals = rc.strategy.confidence_decimals;
  if (!rc.strategy.prompt_template.empty()) {
    if (rc.strategy.kind == cc::StrategyKind::kConfidencePrompt) {
      grid.confidence_template = rc.strategy.prompt_template;
    } else {
      grid.naive_template = rc.strategy.prompt_template;
    }
  }

  cc::Corrector corrector(rc.backend);
  auto report = cc::sweep(utts, grid, templates, corrector, rc.normalization);
  report.provenance.emplace_back("normalizer", rc.normalizer_name);
  report.provenance.emplace_back("seed", rc.seed ? std::to_string(*rc.seed) : "unset");
  if (rc.config_file) report.provenance.emplace_back("config_file", *rc.config_file);
  Output out(f.out);
  cc::write_report(out.stream(), report, report_format(f));
  std::cerr << report.rows.size() << " rows, backend calls " << corrector.backend_calls() << '\n';
  return kExitOk;
}

int cmd_analyze(const Flags& f) {
  const auto rc = resolve_config(f);
  if (!f.corrections) throw cc::ParameterError("--corrections is required");
  const auto utts = load_input(f, rc);
  const auto lines = load_corrections(*f.corrections);
  const auto joined = join_corrections(utts, lines);
  const auto stage = f.stage.value_or("after");
  if (stage != "before" && stage != "after") throw cc::ParameterError("--stage must be before or after");

  Output out(f.out);
  std::vector<cc::CorrectionDecision> decisions;
  std::map<std::string, cc::BatchOutput> outputs;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const auto& u = utts[i];
    decisions.push_back(joined[i]->decision);
    outputs.emplace(u.id, joined[i]->output);
    if (u.reference.empty()) continue;
    auto words = u.hypothesis_words();
    if (stage == "after" && joined[i]->decision.should_correct && joined[i]->output.status != cc::BatchStatus::kFailed) {
      words = cc::parse_correction(joined[i]->output.raw_output, rc.normalization).words;
    }
    out.stream() << u.id << '\t' << cc::format_alignment(cc::align(u.reference, words)) << '\n';
  }

  auto run = cc::evaluate_run(utts, decisions, outputs, rc.normalization);
  std::map<std::string, std::vector<cc::UtteranceResult>> by_dataset;
  for (auto& r : run.results) by_dataset[r.dataset].push_back(r);
  std::cerr << "dataset\tconf\tn\tavg_conf\tattempt%\thelp%\tharm%\tneutral%\n";
  for (const auto& [dataset, results] : by_dataset) {
    const auto b = cc::bucket_analysis(results);
    for (const auto* s : {&b.low, &b.high}) {
      std::cerr << dataset << '\t' << cc::to_string(s->bucket) << '\t' << s->n << '\t'
                << cc::format_fixed(s->avg_conf, 3) << '\t' << cc::format_fixed(s->attempt_pct, 1) << '\t'
                << cc::format_fixed(s->help_pct, 1) << '\t' << cc::format_fixed(s->harm_pct, 1) << '\t'
                << cc::format_fixed(s->neutral_pct, 1) << '\n';
    }
  }
  return kExitOk;
}

int cmd_prepare(const Flags& f) {
  const auto rc = resolve_config(f);
  rc.strategy.validate();
  if (!f.out) throw cc::ParameterError("--out is required for prepare");
  const auto utts = load_input(f, rc);
  const auto n = cc::export_training_pairs(utts, rc.strategy, load_templates(rc), *f.out);
  std::cerr << "wrote " << n << " training pairs\n";
  return kExitOk;
}

void add_confidence_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--measure", f.measure, "gibbs or tsallis");
  sub->add_option("--alpha", f.alpha, "Tsallis entropic index in (0, 1]");
  sub->add_option("--agg", f.aggregation, "frame-to-word aggregation: mean, min, product");
  sub->add_option("--switch-epsilon", f.switch_epsilon, "use Gibbs when |alpha - 1| is below this");
  sub->add_flag("--length-normalized-product", f.length_normalized_product,
                "product aggregation as geometric mean over frames");
}

void add_strategy_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--strategy", f.strategy, "naive, sentence_filter, word_filter, confidence_prompt");
  sub->add_option("--threshold", f.threshold, "filter threshold (strict <)");
  sub->add_option("--template", f.prompt_template, "prompt template id (default per strategy)");
  sub->add_option("--decimals", f.decimals, "decimals for rendered confidences");
}

void add_backend_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--backend", f.backend, "http, mock_identity, mock_scripted, replay");
  sub->add_option("--endpoint", f.endpoint, "chat-completions base URL (env CONFCORRECT_ENDPOINT)");
  sub->add_option("--model", f.model, "model name sent to the server; part of the cache key");
  sub->add_option("--timeout", f.timeout, "request timeout in seconds");
  sub->add_option("--max-retries", f.max_retries, "retries on transient failures");
  sub->add_option("--concurrency", f.concurrency, "maximum requests in flight");
  sub->add_option("--cache", f.cache, "response cache file (JSON lines)");
  sub->add_option("--script", f.script, "mock_scripted input/output table");
  sub->add_option("--backoff", f.backoff, "first retry delay in seconds");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Confidence-guided LLM correction of ASR hypotheses", "confcorrect"};
  app.footer(kFormatsHelp);
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config, "INI config file");
  app.add_option("--normalizer", f.normalizer, "normalization preset: default, no-apostrophe, keep-hyphen");
  app.add_option("--seed", f.seed, "recorded in reports and sent to the server when supported");
  app.add_option("--out", f.out, "output path (default stdout)");
  app.add_option("--template-dir", f.template_dir, "prompt template directory");

  auto* score = app.add_subcommand("score", "compute word and sentence confidences");
  score->add_option("--in", f.input, "hypothesis manifest")->required();
  score->add_option("--references", f.references, "id<TAB>transcript file joined onto the manifest");
  add_confidence_flags(score, f);

  auto* correct = app.add_subcommand("correct", "apply a correction strategy through a backend");
  correct->add_option("--in", f.input, "scored manifest")->required();
  correct->add_option("--references", f.references, "id<TAB>transcript file");
  add_strategy_flags(correct, f);
  add_backend_flags(correct, f);

  auto* evaluate = app.add_subcommand("evaluate", "WER and bucket statistics for a corrections file");
  evaluate->add_option("--in", f.input, "scored manifest")->required();
  evaluate->add_option("--corrections", f.corrections, "output of `correct`")->required();
  evaluate->add_option("--references", f.references, "id<TAB>transcript file");
  evaluate->add_option("--format", f.format, "csv, markdown, json (default from --out extension)");
  evaluate->add_option("--system", f.system, "ASR system label for the report");
  add_confidence_flags(evaluate, f);

  auto* sweep = app.add_subcommand("sweep", "evaluate an alpha x aggregation x strategy x threshold grid");
  sweep->add_option("--in", f.input, "hypothesis manifest")->required();
  sweep->add_option("--references", f.references, "id<TAB>transcript file");
  sweep->add_option("--alphas", f.alphas, "comma-separated alphas (default 0.9,0.7,0.5,0.3)")->delimiter(',');
  sweep->add_option("--aggs", f.aggregations, "comma-separated aggregations (default product,mean,min)")
      ->delimiter(',');
  sweep->add_option("--strategies", f.strategies, "comma-separated strategies (default confidence_prompt)")
      ->delimiter(',');
  sweep->add_option("--thresholds", f.thresholds, "comma-separated filter thresholds (default 0.1..0.9)")
      ->delimiter(',');
  sweep->add_option("--format", f.format, "csv, markdown, json (default from --out extension)");
  sweep->add_option("--system", f.system, "ASR system label for the report");
  sweep->add_option("--measure", f.measure, "gibbs or tsallis");
  sweep->add_option("--switch-epsilon", f.switch_epsilon, "use Gibbs when |alpha - 1| is below this");
  sweep->add_flag("--length-normalized-product", f.length_normalized_product,
                  "product aggregation as geometric mean over frames");
  sweep->add_option("--template", f.prompt_template, "prompt template id override");
  sweep->add_option("--decimals", f.decimals, "decimals for rendered confidences");
  add_backend_flags(sweep, f);

  auto* analyze = app.add_subcommand("analyze", "dump alignments and print the confidence-bucket analysis");
  analyze->add_option("--in", f.input, "scored manifest")->required();
  analyze->add_option("--corrections", f.corrections, "output of `correct`")->required();
  analyze->add_option("--references", f.references, "id<TAB>transcript file");
  analyze->add_option("--stage", f.stage, "align the hypothesis (before) or the correction (after, default)");

  auto* prepare = app.add_subcommand("prepare", "export prompt/completion training pairs");
  prepare->add_option("--in", f.input, "scored manifest with references")->required();
  prepare->add_option("--references", f.references, "id<TAB>transcript file");
  add_strategy_flags(prepare, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*score) return cmd_score(f);
    if (*correct) return cmd_correct(f);
    if (*evaluate) return cmd_evaluate(f);
    if (*sweep) return cmd_sweep(f);
    if (*analyze) return cmd_analyze(f);
    if (*prepare) return cmd_prepare(f);
  } catch (const cc::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const cc::ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const cc::TemplateError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
