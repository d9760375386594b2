#include <gtest/gtest.h>

#include <random>

#include "faultlens/error.hpp"
#include "faultlens/scoring.hpp"
#include "test_support.hpp"

using namespace faultlens;
using testing_support::ScriptedTransport;

TEST(LexicalScorer, Tokenize) {
  EXPECT_EQ(LexicalScorer::tokenize("The loop's range(1, n) is OFF-by-one!"),
            (std::vector<std::string>{"the", "loop", "s", "range", "1", "n", "is", "off", "by", "one"}));
  EXPECT_TRUE(LexicalScorer::tokenize(" ,.; ").empty());
}

TEST(LexicalScorer, IdentityDisjointAndEmpty) {
  LexicalScorer s;
  EXPECT_DOUBLE_EQ(s.score("the range starts at 1", "the range starts at 1"), 1.0);
  EXPECT_DOUBLE_EQ(s.score("The Range, starts at 1.", "the range starts at 1"), 1.0);
  EXPECT_DOUBLE_EQ(s.score("alpha beta", "gamma delta"), 0.0);
  EXPECT_DOUBLE_EQ(s.score("", ""), 1.0);
  EXPECT_DOUBLE_EQ(s.score("", "something"), 0.0);
}

TEST(LexicalScorer, F1WithMultiplicity) {
  LexicalScorer s;
  // candidate {a, a, b}, reference {a, c}: overlap 1, P = 1/3, R = 1/2.
  EXPECT_NEAR(s.score("a a b", "a c"), 2.0 * (1.0 / 3) * 0.5 / (1.0 / 3 + 0.5), 1e-12);
}

TEST(LexicalScorer, BoundedAndSymmetric) {
  LexicalScorer s;
  std::mt19937 rng(1);
  const std::vector<std::string> words{"loop", "index", "off", "by", "one", "range", "x", "the"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string a, b;
    for (int i = 0; i < static_cast<int>(rng() % 6); ++i) a += words[rng() % words.size()] + " ";
    for (int i = 0; i < static_cast<int>(rng() % 6); ++i) b += words[rng() % words.size()] + " ";
    const double ab = s.score(a, b);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_DOUBLE_EQ(ab, s.score(b, a));
  }
}

TEST(RemoteScorer, BatchesPairsAndClamps) {
  auto transport = std::make_shared<ScriptedTransport>();
  transport->push({200, R"({"scores": [0.25, 1.7, -0.2]})"});
  RemoteScorer scorer("http://localhost:1/score", transport);
  const auto scores = scorer.score_batch({{"a", "b"}, {"c", "d"}, {"e", "f"}});
  EXPECT_EQ(scores, (std::vector<double>{0.25, 1.0, 0.0}));
  const auto body = nlohmann::json::parse(transport->requests().at(0).body);
  EXPECT_EQ(body["pairs"][1]["candidate"], "c");
  EXPECT_EQ(body["pairs"][1]["reference"], "d");
}

TEST(RemoteScorer, ErrorsSurface) {
  auto transport = std::make_shared<ScriptedTransport>();
  transport->push({200, R"({"scores": [0.5]})"});
  transport->push({500, "down"});
  RemoteScorer scorer("http://localhost:1/score", transport);
  try {
    scorer.score_batch({{"a", "b"}, {"c", "d"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSchemaViolation);
  }
  try {
    scorer.score("a", "b");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNetworkError);
  }
}
