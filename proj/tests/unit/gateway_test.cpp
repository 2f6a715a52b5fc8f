#include <cctype>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hle/lm/gateway.hpp"
#include "hle/lm/mock.hpp"
#include "test_support.hpp"

namespace {

using namespace hle;

// Scans every start position of text for keyword and checks the neighbours
// by hand, independent of contains_word.
bool oracle_has_word(const std::string& text, const std::string& keyword) {
    std::string t;
    for (char c : text) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (std::size_t i = 0; i + keyword.size() <= t.size(); ++i) {
        bool same = true;
        for (std::size_t k = 0; k < keyword.size() && same; ++k) same = t[i + k] == keyword[k];
        if (!same) continue;
        const bool left = i == 0 || !std::isalnum(static_cast<unsigned char>(t[i - 1]));
        const std::size_t j = i + keyword.size();
        const bool right = j == t.size() || !std::isalnum(static_cast<unsigned char>(t[j]));
        if (left && right) return true;
    }
    return false;
}

class ScriptedBackend final : public LmBackend {
public:
    std::string model_id() const override { return "scripted"; }
    std::vector<Completion> complete(const Prompt&, const DecodingParams&) override {
        ++calls;
        if (failures_left > 0) {
            --failures_left;
            throw Error(failure, "scripted failure");
        }
        return next;
    }
    std::vector<Completion> next;
    int failures_left = 0;
    ErrorCode failure = ErrorCode::rate_limited;
    int calls = 0;
};

DecodingParams params(int n = 1) {
    DecodingParams p;
    p.num_completions = n;
    return p;
}

TEST(Blocklist, Examples) {
    CompletionSet c;
    c.completions = {{"a BadWord here", FinishReason::length, false}, {"concatenate", FinishReason::length, false}};
    const auto f = apply_blocklist(c, {"badword", "cat"});
    EXPECT_TRUE(f.completions[0].filtered);
    EXPECT_EQ(f.completions[0].text, kFilteredPlaceholder);
    EXPECT_FALSE(f.completions[1].filtered);
    EXPECT_EQ(f.completions[1].text, "concatenate");
    EXPECT_EQ(apply_blocklist(c, {}), c);
    EXPECT_EQ(f.surfaced().size(), 1u);
}

TEST(Blocklist, NoSurfacedCompletionContainsKeyword) {
    const auto blocklist = load_blocklist(hle::testing::data_config().blocklist.string());
    ASSERT_FALSE(blocklist.empty());
    std::vector<std::string> pieces = {"the", "cat", "shatter", "scatter", "concatenate", "fine", "okay", "x1", "",
                                       "!",   ",",   "-",       "'",       "\n",          "ok."};
    for (const auto& kw : blocklist) {
        std::string upper;
        for (char ch : kw) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        for (const auto& v : {kw, upper, kw + "s", "un" + kw, kw + "ful", kw + "!", "(" + kw + ")", kw + "_x",
                              kw + "-ish", kw + "9"}) {
            pieces.push_back(v);
        }
    }
    std::mt19937_64 rng(606);
    ScriptedBackend backend;
    LiveGateway gateway(backend, blocklist, RetryPolicy{3, 0, nullptr}, [] { return Millis{0}; });
    int filtered = 0, surfaced = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        backend.next.clear();
        for (int c = 0; c < 5; ++c) {
            std::string text;
            const int len = static_cast<int>(rng() % 12);
            for (int w = 0; w < len; ++w) {
                const auto& p = pieces[rng() % pieces.size()];
                const int glue = static_cast<int>(rng() % 4);
                text += glue == 0 ? "" : glue == 1 ? " " : glue == 2 ? "." : " \t";
                text += p;
            }
            backend.next.push_back(Completion{text, FinishReason::length, false});
        }
        const auto out = gateway.query(Prompt{"p", "r"}, params(5));
        ASSERT_EQ(out.completions.size(), 5u);
        for (std::size_t i = 0; i < out.completions.size(); ++i) {
            const auto& c = out.completions[i];
            bool expected = false;
            for (const auto& kw : blocklist) expected = expected || oracle_has_word(backend.next[i].text, kw);
            EXPECT_EQ(c.filtered, expected) << backend.next[i].text;
            if (c.filtered) {
                ++filtered;
                EXPECT_EQ(c.text, kFilteredPlaceholder);
            } else {
                ++surfaced;
                for (const auto& kw : blocklist) EXPECT_FALSE(oracle_has_word(c.text, kw)) << c.text;
            }
        }
    }
    EXPECT_GT(filtered, 100);
    EXPECT_GT(surfaced, 100);
}

TEST(QueryLm, RetriesRateLimitsWithExponentialBackoff) {
    ScriptedBackend backend;
    backend.next = {{"hello", FinishReason::length, false}};
    backend.failures_left = 2;
    std::vector<Millis> sleeps;
    RetryPolicy retry{3, 500, [&](Millis ms) { sleeps.push_back(ms); }};
    const auto out = query_lm(Prompt{"p", "r1"}, params(), backend, retry, [] { return Millis{0}; });
    EXPECT_EQ(backend.calls, 3);
    EXPECT_EQ(sleeps, (std::vector<Millis>{500, 1000}));
    EXPECT_EQ(out.completions.at(0).text, "hello");
    EXPECT_EQ(out.request_id, "r1");
}

TEST(QueryLm, SurfacesRateLimitAfterThreeAttempts) {
    ScriptedBackend backend;
    backend.failures_left = 5;
    RetryPolicy retry{3, 1, [](Millis) {}};
    try {
        query_lm(Prompt{"p", "r"}, params(), backend, retry);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::rate_limited);
    }
    EXPECT_EQ(backend.calls, 3);
}

TEST(QueryLm, BackendFailureIsNotRetried) {
    ScriptedBackend backend;
    backend.failures_left = 1;
    backend.failure = ErrorCode::backend_failure;
    RetryPolicy retry{3, 1, [](Millis) {}};
    EXPECT_THROW(query_lm(Prompt{"p", "r"}, params(), backend, retry), Error);
    EXPECT_EQ(backend.calls, 1);
}

TEST(QueryLm, StripsStopSequencesAndCapsCount) {
    ScriptedBackend backend;
    backend.next = {{"A fine line.\nMetaphor: more", FinishReason::length, false},
                    {"no stop here", FinishReason::length, false},
                    {"extra", FinishReason::length, false}};
    auto p = params(2);
    p.stop_sequences = {"Metaphor:"};
    const auto out = query_lm(Prompt{"p", "r"}, p, backend, RetryPolicy{1, 0, nullptr});
    ASSERT_EQ(out.completions.size(), 2u);
    EXPECT_EQ(out.completions[0].text, "A fine line.");
    EXPECT_EQ(out.completions[0].finish_reason, FinishReason::stop_sequence);
    EXPECT_EQ(out.completions[1].text, "no stop here");
    EXPECT_EQ(out.completions[1].finish_reason, FinishReason::length);
}

TEST(QueryLm, InvalidParamsRejected) {
    ScriptedBackend backend;
    auto p = params(0);
    EXPECT_THROW(query_lm(Prompt{"p", "r"}, p, backend), Error);
    p = params();
    p.temperature = -0.1;
    EXPECT_THROW(query_lm(Prompt{"p", "r"}, p, backend), Error);
    EXPECT_EQ(backend.calls, 0);
}

MockConfig mock_config() {
    MockConfig c;
    c.fixtures = load_mock_fixtures(hle::testing::data_config().mock_fixtures.string());
    return c;
}

TEST(MockBackend, PureFunctionOfPromptParamsAndSeed) {
    const auto cfg = mock_config();
    auto p = params(5);
    const Prompt prompt{"P", "r"};
    const auto a = mock_complete(prompt, p, 7, cfg);
    const auto b = mock_complete(prompt, p, 7, cfg);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.completions.size(), 5u);
    EXPECT_NE(mock_complete(prompt, p, 8, cfg), a);
    p.temperature = 0.3;
    EXPECT_NE(mock_complete(prompt, p, 7, cfg), a);
}

TEST(MockBackend, DistinctSubSeedsGiveDistinctTexts) {
    const auto cfg = mock_config();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto out = mock_complete(Prompt{"Once upon a time", "r"}, params(3), seed, cfg);
        std::set<std::string> texts;
        for (const auto& c : out.completions) texts.insert(c.text);
        EXPECT_EQ(texts.size(), 3u) << seed;
    }
}

TEST(MockBackend, FixtureEcho) {
    MockConfig cfg;
    cfg.fixtures = {{"capital of France", {"Paris is the capital of France."}}};
    const auto out = mock_complete(Prompt{"What is the CAPITAL of France?", "r"}, params(), 1, cfg);
    EXPECT_EQ(out.completions.at(0).text, "Paris is the capital of France.");
}

TEST(MockBackend, MetaphorParamsLeaveNoStopAtTail) {
    MockBackend backend("mock-alpha", 3, mock_config());
    DecodingParams p;
    p.temperature = 0.9;
    p.max_tokens = 30;
    p.stop_sequences = {"Metaphor:"};
    p.num_completions = 5;
    for (int i = 0; i < 30; ++i) {
        const auto out = query_lm(Prompt{"Metaphor: Life is a river\nMetaphorical Sentence: " + std::to_string(i), "r"},
                                  p, backend, RetryPolicy{1, 0, nullptr});
        ASSERT_EQ(out.completions.size(), 5u);
        for (const auto& c : out.completions) EXPECT_EQ(c.text.find("Metaphor:"), std::string::npos) << c.text;
    }
}

TEST(MockBackend, RespectsMaxTokens) {
    auto p = params();
    p.max_tokens = 3;
    const auto out = mock_complete(Prompt{"tell me a long story", "r"}, p, 1, MockConfig{});
    EXPECT_LE(text::split_words(out.completions.at(0).text).size(), 3u);
}

}  // namespace
