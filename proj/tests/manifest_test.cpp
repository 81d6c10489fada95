#include "confcorrect/manifest.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "confcorrect/confidence.hpp"

namespace cc = confcorrect;

namespace {

std::vector<cc::Utterance> parse(const std::string& text) {
  std::istringstream in(text);
  return cc::read_manifest(in, {}, "test.jsonl");
}

std::string expect_validation_error(const std::string& text) {
  try {
    parse(text);
  } catch (const cc::ValidationError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no ValidationError for: " << text;
  return {};
}

const char* kTwoRecords =
    R"({"id":"u1","dataset":"SAP-shared","reference":"How many refills?","words":[{"text":"how","frames":[[1,0],[0.5,0.5]]},{"text":"many","frames":[[0.25,0.25,0.25,0.25]]}]})"
    "\n"
    R"({"id":"u2","dataset":"TORGO","words":[{"text":"yes","frames":[[0.9,0.1]]}]})"
    "\n";

}  // namespace

TEST(LoadManifest, ReadsValidRecords) {
  const auto utts = parse(kTwoRecords);
  ASSERT_EQ(utts.size(), 2u);
  EXPECT_EQ(utts[0].id, "u1");
  EXPECT_EQ(utts[0].dataset, "SAP-shared");
  EXPECT_EQ(utts[0].reference, (std::vector<std::string>{"HOW", "MANY", "REFILLS"}));
  ASSERT_EQ(utts[0].hypothesis.size(), 2u);
  EXPECT_EQ(utts[0].hypothesis[0].text, "HOW");
  EXPECT_EQ(utts[0].hypothesis[0].frames.size(), 2u);
  EXPECT_EQ(utts[0].hypothesis[1].frames[0].vocab_size(), 4u);
  EXPECT_TRUE(utts[1].reference.empty());
  EXPECT_FALSE(utts[1].sentence_confidence.has_value());
}

TEST(LoadManifest, RejectsBadSumNamingUtteranceAndFrame) {
  const auto msg = expect_validation_error(
      R"({"id":"bad","dataset":"d","words":[{"text":"a","frames":[[1,0],[0.4,0.4]]}]})");
  EXPECT_NE(msg.find("'bad'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("frame 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("test.jsonl:1"), std::string::npos) << msg;
}

TEST(LoadManifest, RejectsDuplicateIds) {
  const auto msg = expect_validation_error(
      R"({"id":"u1","dataset":"d","words":[]})"
      "\n"
      R"({"id":"u1","dataset":"d","words":[]})");
  EXPECT_NE(msg.find("duplicate"), std::string::npos) << msg;
  EXPECT_NE(msg.find("test.jsonl:2"), std::string::npos) << msg;
}

TEST(LoadManifest, ReportsLineOfMalformedRecord) {
  const auto msg = expect_validation_error(std::string(kTwoRecords) + "{not json\n");
  EXPECT_NE(msg.find("test.jsonl:3"), std::string::npos) << msg;
}

TEST(LoadManifest, ProbabilityEdgeCases) {
  // Negative entry beyond clip tolerance.
  expect_validation_error(R"({"id":"n","dataset":"d","words":[{"text":"a","frames":[[1.1,-0.1]]}]})");
  // Float noise at the boundary is clipped.
  const auto ok = parse(R"({"id":"c","dataset":"d","words":[{"text":"a","frames":[[1.0000000001,-1e-10]]}]})");
  EXPECT_EQ(ok[0].hypothesis[0].frames[0].probs, (std::vector<double>{1.0, 0.0}));
  // Sum just inside / outside 1 +- 1e-6.
  parse(R"({"id":"s","dataset":"d","words":[{"text":"a","frames":[[0.5000005,0.5]]}]})");
  expect_validation_error(R"({"id":"s","dataset":"d","words":[{"text":"a","frames":[[0.500002,0.5]]}]})");
  // Vocabulary of one.
  expect_validation_error(R"({"id":"v","dataset":"d","words":[{"text":"a","frames":[[1.0]]}]})");
  // Mixed vocabulary sizes within one word.
  expect_validation_error(R"({"id":"m","dataset":"d","words":[{"text":"a","frames":[[1,0],[1,0,0]]}]})");
}

TEST(LoadManifest, MixedVocabAcrossWordsIsFine) {
  const auto utts = parse(R"({"id":"m","dataset":"d","words":[{"text":"a","frames":[[1,0]]},{"text":"b","frames":[[1,0,0]]}]})");
  EXPECT_EQ(utts[0].hypothesis[1].frames[0].vocab_size(), 3u);
}

TEST(LoadManifest, RejectsStructuralProblems) {
  expect_validation_error(R"({"dataset":"d","words":[]})");
  expect_validation_error(R"({"id":"x","words":[]})");
  expect_validation_error(R"({"id":"x","dataset":"d"})");
  expect_validation_error(R"({"id":"x","dataset":"d","words":[{"text":"a","frames":[]}]})");
  expect_validation_error(R"({"id":"x","dataset":"d","words":[{"text":"two words","frames":[[1,0]]}]})");
  expect_validation_error(R"({"id":"x","dataset":"d","words":[{"text":"?","frames":[[1,0]]}]})");
  expect_validation_error(R"({"id":"x","dataset":"d","words":[],"sentence_confidence":1.5})");
  expect_validation_error(R"([1,2,3])");
}

TEST(LoadManifest, MissingFileIsIoError) {
  EXPECT_THROW(cc::load_manifest("/nonexistent/manifest.jsonl"), cc::IoError);
}

TEST(LoadManifest, RoundTripsScoredUtterances) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<cc::Utterance> utts;
  for (int i = 0; i < 20; ++i) {
    cc::Utterance u;
    u.id = "utt" + std::to_string(i);
    u.dataset = i % 2 ? "TORGO" : "SAP-unshared";
    if (i % 3) u.reference = {"SOME", "WORDS", "HERE"};
    for (int w = 0; w < i % 5; ++w) {
      cc::WordHypothesis wh;
      wh.text = "W" + std::to_string(w);
      for (int fr = 0; fr < 1 + w; ++fr) {
        std::vector<double> p(3 + i % 4);
        double sum = 0;
        for (auto& x : p) sum += x = unit(rng);
        for (auto& x : p) x /= sum;
        wh.frames.push_back({p});
      }
      u.hypothesis.push_back(std::move(wh));
    }
    utts.push_back(cc::score_utterance(u, {}));
  }
  std::stringstream buf;
  cc::write_manifest(buf, utts);
  EXPECT_EQ(cc::read_manifest(buf, {}), utts);
}

TEST(References, JoinsAndReportsOrphans) {
  const auto dir = std::filesystem::temp_directory_path() / "confcorrect_manifest_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "refs.tsv";
  {
    std::ofstream out(path);
    out << "u2\tyes indeed\n";
  }
  auto utts = parse(kTwoRecords);
  cc::join_references(utts, cc::load_references(path));
  EXPECT_EQ(utts[1].reference, (std::vector<std::string>{"YES", "INDEED"}));
  EXPECT_EQ(utts[0].reference.size(), 3u);

  {
    std::ofstream out(path);
    out << "u2\tyes\nghost\tboo\n";
  }
  try {
    cc::join_references(utts, cc::load_references(path));
    FAIL() << "orphan not reported";
  } catch (const cc::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
  {
    std::ofstream out(path);
    out << "no tab here\n";
  }
  EXPECT_THROW(cc::load_references(path), cc::ValidationError);
}
