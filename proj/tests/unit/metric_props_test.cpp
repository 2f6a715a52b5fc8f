#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hle/metrics/text_metrics.hpp"
#include "hle/metrics/trace_metrics.hpp"

namespace {

using namespace hle;

std::string random_words(std::mt19937_64& rng, const std::vector<std::string>& vocab, int max_len) {
    const int n = static_cast<int>(rng() % static_cast<std::uint64_t>(max_len + 1));
    std::string s;
    for (int i = 0; i < n; ++i) s += (i ? " " : "") + vocab[rng() % vocab.size()];
    return s;
}

TEST(WordEditDistance, MetricAxiomsOnRandomTriples) {
    const std::vector<std::string> vocab = {"a", "b", "c", "d", "the", "cat"};
    std::mt19937_64 rng(77);
    for (int i = 0; i < 3000; ++i) {
        const auto x = random_words(rng, vocab, 9), y = random_words(rng, vocab, 9), z = random_words(rng, vocab, 9);
        const auto xy = word_edit_distance(x, y), yx = word_edit_distance(y, x);
        EXPECT_EQ(xy, yx);
        EXPECT_EQ(xy == 0, text::split_words(x) == text::split_words(y));
        EXPECT_LE(xy, word_edit_distance(x, z) + word_edit_distance(z, y));
        EXPECT_EQ(word_edit_distance(x, x), 0u);
    }
}

TEST(Density, BoundedByLengthAndZeroWithoutOverlap) {
    const std::vector<std::string> vocab = {"storm", "hit", "the", "coast", "on", "monday", "rain", "wind"};
    const std::vector<std::string> other = {"quiet", "sunny", "calm", "day"};
    std::mt19937_64 rng(31);
    for (int i = 0; i < 2000; ++i) {
        const auto doc = random_words(rng, vocab, 30);
        const auto s = random_words(rng, rng() % 2 ? vocab : other, 12);
        const double d = density(s, doc);
        const auto sw = text::split_words(s);
        const auto dw = text::split_words(doc);
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, static_cast<double>(sw.size()) + 1e-12);
        bool shared = false;
        for (const auto& w : sw) shared = shared || std::find(dw.begin(), dw.end(), w) != dw.end();
        EXPECT_EQ(d == 0.0, !shared) << s << " | " << doc;
    }
}

TEST(ClassifyPrompt, ExactTakesPrecedenceOverClose) {
    const std::string q = "Which planet is the largest?";
    EXPECT_EQ(classify_prompt(q, q, {}, TaskKind::qa), PromptCategory::exact);
    // one token changed: similarity stays high, so the close rule is what fires
    EXPECT_EQ(classify_prompt("Which planet is the biggest?", q, {}, TaskKind::qa), PromptCategory::close);
    std::mt19937_64 rng(5);
    const std::vector<std::string> vocab = {"what", "is", "mars", "list", "synonym", "of", "giraffe", "?", "planet"};
    for (int i = 0; i < 500; ++i) {
        const auto in = random_words(rng, vocab, 7);
        const auto c = classify_prompt(in, q, {"Mars", "Venus"}, TaskKind::qa);
        EXPECT_EQ(std::count(kPromptCategories.begin(), kPromptCategories.end(), c), 1);
    }
}

TEST(RollingAverage, ConstantSeriesUnchanged) {
    for (int w = 1; w <= 5; ++w) {
        const std::vector<double> c(9, 2.5);
        for (double v : rolling_average(c, w)) EXPECT_DOUBLE_EQ(v, 2.5);
    }
}

// CAT / ARE / TEN, three across and three down clues.
const std::vector<std::string> kSolution = {"CAT", "ARE", "TEN"};

Json clues() {
    Json c = Json::array();
    for (int i = 0; i < 3; ++i) {
        c.push_back(Json{{"direction", "across"}, {"row", i}, {"col", 0}, {"length", 3}});
        c.push_back(Json{{"direction", "down"}, {"row", 0}, {"col", i}, {"length", 3}});
    }
    return c;
}

TEST(CrosswordAccuracy, SharedWrongLetterLowersBothClues) {
    const auto full = crossword_accuracy(kSolution, kSolution, clues());
    EXPECT_DOUBLE_EQ(full.letter, 100.0);
    EXPECT_DOUBLE_EQ(full.clue, 100.0);
    const auto lower = crossword_accuracy({"cat", "are", "ten"}, kSolution, clues());
    EXPECT_DOUBLE_EQ(lower.clue, 100.0);

    const auto one = crossword_accuracy({"XAT", "ARE", "TEN"}, kSolution, clues());
    EXPECT_DOUBLE_EQ(one.letter, 100.0 * 8 / 9);
    EXPECT_DOUBLE_EQ(one.clue, 100.0 * 4 / 6);

    const auto empty = crossword_accuracy({"...", "...", "..."}, kSolution, clues());
    EXPECT_DOUBLE_EQ(empty.letter, 0.0);
    EXPECT_DOUBLE_EQ(empty.clue, 0.0);
}

TEST(CrosswordAccuracy, AlwaysWithinPercentBounds) {
    std::mt19937_64 rng(8);
    const std::string letters = "CATRENX.";
    for (int i = 0; i < 500; ++i) {
        std::vector<std::string> g(3, std::string(3, '.'));
        for (auto& row : g) {
            for (auto& ch : row) ch = letters[rng() % letters.size()];
        }
        const auto a = crossword_accuracy(g, kSolution, clues());
        EXPECT_GE(a.letter, 0.0);
        EXPECT_LE(a.letter, 100.0);
        EXPECT_GE(a.clue, 0.0);
        EXPECT_LE(a.clue, 100.0);
    }
}

}  // namespace
