#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CONFCORRECT_FIXTURE_DIR;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "confcorrect_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the CLI with `args` under `env_prefix` (e.g. "VAR=x").
Result run(const std::string& args, const std::string& env_prefix = "") {
  const auto out = workdir() / "stdout.txt";
  const auto err = workdir() / "stderr.txt";
  const auto cmd = "env -u CONFCORRECT_ENDPOINT -u CONFCORRECT_API_KEY " + env_prefix + " " +
                   quote(CONFCORRECT_CLI) + " " + args + " >" + quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string fixture(const std::string& name) { return quote((kFixtures / name).string()); }
std::string tmp(const std::string& name) { return quote((workdir() / name).string()); }

std::vector<nlohmann::json> jsonl(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

std::vector<std::string> csv_rows(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

std::string provenance(const std::string& csv, const std::string& key) {
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) {
    if (line.starts_with("# " + key + ": ")) return line.substr(key.size() + 4);
  }
  return {};
}

// Scores refills into the work dir once.
const std::string& scored_refills() {
  static const std::string path = [] {
    const auto r = run("score --in " + fixture("refills.jsonl") + " --out " + tmp("refills_scored.jsonl"));
    EXPECT_EQ(r.code, 0) << r.err;
    return (workdir() / "refills_scored.jsonl").string();
  }();
  return path;
}

}  // namespace

TEST(Cli, ScoreWritesWordAndSentenceConfidences) {
  const auto r = run("score --in " + fixture("refills.jsonl"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto recs = jsonl(r.out);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0]["id"], "refills");
  EXPECT_EQ(recs[0]["reference"], "HOW MANY REFILLS");
  const auto& words = recs[0]["words"];
  ASSERT_EQ(words.size(), 3u);
  EXPECT_NEAR(words[0]["word_confidence"].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(words[1]["word_confidence"].get<double>(), 0.8502, 1e-6);
  EXPECT_NEAR(words[2]["word_confidence"].get<double>(), 0.6102, 1e-6);
  EXPECT_TRUE(recs[0].contains("sentence_confidence"));
}

TEST(Cli, InvalidAlphaIsUsageError) {
  const auto r = run("score --in " + fixture("refills.jsonl") + " --alpha 1.5");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("alpha"), std::string::npos);
}

TEST(Cli, MalformedManifestIsUsageError) {
  std::ofstream(workdir() / "bad.jsonl") << R"({"id": "x", "dataset": "d", "words": [{"text": "A", "frames": [[0.5, 0.6]]}]})"
                                         << "\n";
  const auto r = run("score --in " + tmp("bad.jsonl"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.jsonl:1"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("'x'"), std::string::npos) << r.err;
}

TEST(Cli, UnknownFlagIsUsageError) { EXPECT_EQ(run("score --nope").code, 2); }

TEST(Cli, MissingInputFileIsRuntimeError) { EXPECT_EQ(run("score --in " + tmp("missing.jsonl")).code, 1); }

TEST(Cli, WordFilterBelowAllConfidencesMakesNoCalls) {
  const auto r = run("correct --in " + quote(scored_refills()) +
                     " --strategy word_filter --threshold 0.5 --backend mock_scripted --script " +
                     fixture("refills_script.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("backend calls 0"), std::string::npos) << r.err;
  const auto recs = jsonl(r.out);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0]["status"], "passthrough");
  EXPECT_EQ(recs[0]["trigger"], "not_triggered");
  EXPECT_EQ(recs[0]["correction"], "HOW MANY RAFELLES");
}

TEST(Cli, NaiveIdentityReturnsHypothesis) {
  const auto r = run("correct --in " + quote(scored_refills()) + " --strategy naive");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto recs = jsonl(r.out);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0]["status"], "corrected");
  EXPECT_EQ(recs[0]["trigger"], "always");
  EXPECT_EQ(recs[0]["correction"], "HOW MANY RAFELLES");
  EXPECT_EQ(recs[0]["prompt_hash"].get<std::string>().size(), 64u);
}

TEST(Cli, ReplayReproducesLiveRun) {
  const auto cache = tmp("replay_cache.jsonl");
  const auto live = run("correct --in " + quote(scored_refills()) + " --backend mock_scripted --script " +
                        fixture("refills_script.json") + " --cache " + cache);
  ASSERT_EQ(live.code, 0) << live.err;
  const auto replay = run("correct --in " + quote(scored_refills()) + " --backend replay --cache " + cache);
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_EQ(jsonl(live.out)[0]["correction"], "HOW MANY REFILLS");
  EXPECT_EQ(jsonl(replay.out)[0]["raw_output"], jsonl(live.out)[0]["raw_output"]);
  EXPECT_NE(replay.err.find("backend calls 0"), std::string::npos);

  // A cold cache fails every triggered utterance.
  const auto cold = run("correct --in " + quote(scored_refills()) + " --backend replay --cache " + tmp("cold.jsonl"));
  EXPECT_EQ(cold.code, 1);
  EXPECT_EQ(jsonl(cold.out)[0]["status"], "failed");
}

TEST(Cli, EvaluateIdentityKeepsWer) {
  const auto corrections = tmp("identity_corr.jsonl");
  ASSERT_EQ(run("correct --in " + quote(scored_refills()) + " --strategy naive --out " + corrections).code, 0);
  const auto r = run("evaluate --in " + quote(scored_refills()) + " --corrections " + corrections);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1], "SAP-shared,asr,0.9,product,naive,,1,33.33,33.33,0.00,0.00,0.00,0.00,0.00,0.00,0,0");
}

TEST(Cli, EvaluateScriptedFixReducesWer) {
  const auto corrections = tmp("fixed_corr.jsonl");
  ASSERT_EQ(run("correct --in " + quote(scored_refills()) + " --backend mock_scripted --script " +
                fixture("refills_script.json") + " --out " + corrections)
                .code,
            0);
  const auto r = run("evaluate --in " + quote(scored_refills()) + " --corrections " + corrections + " --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const auto& row = j["rows"][0];
  EXPECT_EQ(row["summary"]["edits_before"], 1);
  EXPECT_EQ(row["summary"]["edits_after"], 0);
}

TEST(Cli, SweepDefaultGridHasTwelveRows) {
  const auto r = run("sweep --in " + fixture("overcorrect.jsonl"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  EXPECT_EQ(rows.size(), 13u);
  EXPECT_FALSE(provenance(r.out, "wer").empty());
  EXPECT_FALSE(provenance(r.out, "threshold_rule").empty());
}

TEST(Cli, SweepMarkdownByExtension) {
  const auto r = run("sweep --in " + fixture("overcorrect.jsonl") + " --alphas 0.9 --aggs product,min --out " + tmp("s.md"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto md = slurp(workdir() / "s.md");
  EXPECT_NE(md.find("| Product | Mean | Min |"), std::string::npos);
}

TEST(Cli, PrepareWritesTrainingPairs) {
  const auto r = run("prepare --in " + quote(scored_refills()) + " --out " + tmp("train.jsonl") +
                     " --references " + fixture("refills_refs.tsv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto recs = jsonl(slurp(workdir() / "train.jsonl"));
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0]["completion"], "HOW MANY REFILLS");
  EXPECT_NE(recs[0]["prompt"].get<std::string>().find("RAFELLES[0.61]"), std::string::npos);
}

TEST(Cli, AnalyzeDumpsAlignment) {
  const auto corrections = tmp("analyze_corr.jsonl");
  ASSERT_EQ(run("correct --in " + quote(scored_refills()) + " --strategy naive --out " + corrections).code, 0);
  const auto r = run("analyze --in " + quote(scored_refills()) + " --corrections " + corrections + " --stage before");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "refills\tM:HOW→HOW M:MANY→MANY S:REFILLS→RAFELLES\n");
  EXPECT_NE(r.err.find("attempt%"), std::string::npos);
}

TEST(Cli, CorrectionIdMismatchIsReported) {
  std::ofstream(workdir() / "orphan.jsonl")
      << R"({"id": "nope", "strategy": "naive", "should_correct": false, "trigger": "not_triggered", )"
      << R"("status": "passthrough", "raw_output": "X"})" << "\n";
  const auto r = run("evaluate --in " + quote(scored_refills()) + " --corrections " + tmp("orphan.jsonl"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("refills (manifest only)"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("nope (corrections only)"), std::string::npos) << r.err;
}

TEST(Cli, HelpDocumentsFileFormats) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* field : {"frames", "word_confidence", "sentence_confidence", "reference", "raw_output",
                            "prompt_hash", "CONFCORRECT_ENDPOINT", "CONFCORRECT_API_KEY"}) {
    EXPECT_NE(r.out.find(field), std::string::npos) << field;
  }
}

TEST(Cli, ConfigPrecedence) {
  std::ofstream(workdir() / "cfg.ini") << "[confidence]\nalpha = 1.5\n[backend]\nendpoint = http://from-config/v1\n";
  const auto cfg = " --config " + tmp("cfg.ini");
  // Config value is used when no flag is given, and a flag overrides it.
  EXPECT_EQ(run("score --in " + fixture("refills.jsonl") + cfg).code, 2);
  EXPECT_EQ(run("score --in " + fixture("refills.jsonl") + cfg + " --alpha 0.5").code, 0);

  // No trigger fires at threshold 0, so the endpoint is never contacted.
  std::ofstream(workdir() / "endpoint.ini") << "[backend]\nendpoint = http://from-config/v1\n";
  const auto base = "sweep --in " + fixture("refills.jsonl") + " --config " + tmp("endpoint.ini") +
                    " --alphas 0.9 --aggs product --strategies word_filter --thresholds 0 --backend http";
  auto endpoint = [&](const Result& r) {
    EXPECT_EQ(r.code, 0) << r.err;
    return provenance(r.out, "backend");
  };
  EXPECT_NE(endpoint(run(base)).find("endpoint=http://from-config/v1"), std::string::npos);
  EXPECT_NE(endpoint(run(base, "CONFCORRECT_ENDPOINT=http://from-env/v1")).find("endpoint=http://from-env/v1"),
            std::string::npos);
  EXPECT_NE(endpoint(run(base + " --endpoint http://from-flag/v1", "CONFCORRECT_ENDPOINT=http://from-env/v1"))
                .find("endpoint=http://from-flag/v1"),
            std::string::npos);
}

TEST(Cli, ApiKeyNeverReachesOutput) {
  const auto r = run("sweep --in " + fixture("refills.jsonl") +
                         " --alphas 0.9 --aggs product --strategies word_filter --thresholds 0 --backend http "
                         "--endpoint http://127.0.0.1:9/v1",
                     "CONFCORRECT_API_KEY=sk-very-secret");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.find("sk-very-secret"), std::string::npos);
  EXPECT_EQ(r.err.find("sk-very-secret"), std::string::npos);
}
