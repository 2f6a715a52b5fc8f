#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "hle/core/text.hpp"
#include "hle/core/types.hpp"

namespace hle {

/// Levenshtein distance over arbitrary sequences (unit costs), two-row DP.
template <typename Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// Word-level edit distance; words are whitespace-separated tokens.
inline std::size_t word_edit_distance(std::string_view a, std::string_view b) {
    return levenshtein(text::split_words(a), text::split_words(b));
}

/// 100 * (1 - char_levenshtein / max length); 100 for two empty strings.
inline double normalized_similarity(std::string_view a, std::string_view b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 100.0;
    const auto d = levenshtein(a, b);
    return 100.0 * (1.0 - static_cast<double>(d) / static_cast<double>(longest));
}

struct DensityResult {
    double value = 0.0;
    bool empty_summary = false;
    std::vector<std::vector<std::string>> fragments;
};

/// Greedy extractive fragments between summary S and document A (Newsroom
/// procedure): from each summary position take the longest span shared with
/// the document, skip past it, repeat. Density is sum(|f|^2) / |S|.
inline DensityResult extractive_fragments(std::string_view summary, std::string_view document) {
    const auto S = text::normalized_tokens(summary);
    const auto A = text::normalized_tokens(document);
    DensityResult out;
    if (S.empty()) {
        out.empty_summary = true;
        return out;
    }
    std::size_t i = 0;
    while (i < S.size()) {
        std::size_t best_start = 0, best_len = 0;
        std::size_t j = 0;
        while (j < A.size()) {
            if (S[i] == A[j]) {
                std::size_t ii = i, jj = j;
                while (ii < S.size() && jj < A.size() && S[ii] == A[jj]) {
                    ++ii;
                    ++jj;
                }
                if (ii - i > best_len) {
                    best_start = i;
                    best_len = ii - i;
                }
                j = jj;
            } else {
                ++j;
            }
        }
        if (best_len > 0) {
            out.fragments.emplace_back(S.begin() + static_cast<std::ptrdiff_t>(best_start),
                                       S.begin() + static_cast<std::ptrdiff_t>(best_start + best_len));
        }
        i += std::max<std::size_t>(best_len, 1);
    }
    double sq = 0;
    for (const auto& f : out.fragments) sq += static_cast<double>(f.size() * f.size());
    out.value = sq / static_cast<double>(S.size());
    return out;
}

inline double density(std::string_view summary, std::string_view document) {
    return extractive_fragments(summary, document).value;
}

/// Trailing mean over min(window, index + 1) points.
inline std::vector<double> rolling_average(const std::vector<double>& series, int window) {
    if (window < 1) throw Error(ErrorCode::invalid_argument, "window must be >= 1");
    std::vector<double> out;
    out.reserve(series.size());
    double sum = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        sum += series[i];
        if (i >= static_cast<std::size_t>(window)) sum -= series[i - static_cast<std::size_t>(window)];
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(window), i + 1);
        out.push_back(sum / static_cast<double>(n));
    }
    return out;
}

enum class PromptCategory { exact, close, question, choices, completion, command, meaning, lexical, keyword, others };

inline constexpr std::array<PromptCategory, 10> kPromptCategories = {
    PromptCategory::exact,   PromptCategory::close,   PromptCategory::question, PromptCategory::choices,
    PromptCategory::completion, PromptCategory::command, PromptCategory::meaning, PromptCategory::lexical,
    PromptCategory::keyword, PromptCategory::others};

NLOHMANN_JSON_SERIALIZE_ENUM(PromptCategory, {
    {PromptCategory::exact, "Exact"},
    {PromptCategory::close, "Close"},
    {PromptCategory::question, "Question"},
    {PromptCategory::choices, "Choices"},
    {PromptCategory::completion, "Completion"},
    {PromptCategory::command, "Command"},
    {PromptCategory::meaning, "Meaning"},
    {PromptCategory::lexical, "Lexical"},
    {PromptCategory::keyword, "Keyword"},
    {PromptCategory::others, "Others"},
})

inline std::string to_string(PromptCategory c) { return Json(c).get<std::string>(); }

namespace prompt_detail {

inline const std::vector<std::string> kQuestionWords = {"who",  "what", "where", "how",   "which", "why",  "when",
                                                        "whose", "do",  "does",  "did",   "can",   "could", "has",
                                                        "have", "is",   "was",   "are",   "were",  "should"};
inline const std::vector<std::string> kCompletionWords = {"is",  "was",   "by", "may", "cause", "are",
                                                          "of", "about", "the", "to", "their"};
inline const std::vector<std::string> kCommandVerbs = {"list",  "name",    "give",     "tell",    "explain", "describe",
                                                       "write", "translate", "find",   "complete", "finish", "fill",
                                                       "solve", "provide", "suggest", "generate", "show",   "define"};
inline const std::vector<std::vector<std::string>> kCommandPhrases = {
    {"finish", "the", "sentence"}, {"complete", "the", "sentence"}, {"fill", "in", "the", "blank"}};
inline const std::vector<std::vector<std::string>> kMeaningPhrases = {
    {"synonym"}, {"synonyms"}, {"words", "for"}, {"word", "for"}, {"meaning"}, {"means"},   {"definition"},
    {"antonym"}, {"antonyms"}, {"opposite", "of"}, {"another", "word"}};
inline const std::vector<std::vector<std::string>> kLexicalPhrases = {
    {"letter", "word"}, {"letter"},         {"letters"},        {"begins", "with"},   {"starts", "with"},
    {"starting", "with"}, {"ends", "with"}, {"ending", "with"}, {"ends", "in"},       {"ending", "in"},
    {"rhymes", "with"}, {"spelled"}};

inline bool contains_seq(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

inline bool in_list(const std::string& w, const std::vector<std::string>& list) {
    return std::find(list.begin(), list.end(), w) != list.end();
}

/// Normalized tokens with hyphenated compounds split ("5-letter" -> 5, letter).
inline std::vector<std::string> tokens(std::string_view s) {
    std::string t(s);
    std::replace(t.begin(), t.end(), '-', ' ');
    return text::normalized_tokens(t);
}

}  // namespace prompt_detail

/// Prompt taxonomy for QA and crossword queries. Categories overlap, so the
/// first match in the fixed precedence order wins. `question_text` is the
/// quiz question (or clue); `choices` the answer options, if any.
inline PromptCategory classify_prompt(std::string_view input, std::string_view question_text,
                                      const std::vector<std::string>& choices, TaskKind task) {
    using namespace prompt_detail;
    const std::string in = text::to_lower(text::trim(input));
    const auto toks = tokens(in);

    if (!text::trim(question_text).empty()) {
        const std::string q = text::to_lower(text::trim(question_text));
        if (in == q) return PromptCategory::exact;
        const double sim = normalized_similarity(in, q);
        if (sim > 70.0 && sim < 100.0) return PromptCategory::close;
    }
    if (text::ends_with(in, "?") || (!toks.empty() && in_list(toks.front(), kQuestionWords))) {
        return PromptCategory::question;
    }
    for (const auto& c : choices) {
        const auto ct = tokens(c);
        if (!ct.empty() && contains_seq(toks, ct)) return PromptCategory::choices;
    }
    if (!toks.empty() && in_list(toks.back(), kCompletionWords)) return PromptCategory::completion;
    if (!toks.empty() && in_list(toks.front(), kCommandVerbs)) return PromptCategory::command;
    for (const auto& p : kCommandPhrases) {
        if (contains_seq(toks, p)) return PromptCategory::command;
    }
    for (const auto& p : kMeaningPhrases) {
        if (contains_seq(toks, p)) return PromptCategory::meaning;
    }
    if (task == TaskKind::crossword) {
        for (const auto& p : kLexicalPhrases) {
            if (contains_seq(toks, p)) return PromptCategory::lexical;
        }
    }
    if (!toks.empty() && toks.size() < 5) return PromptCategory::keyword;
    return PromptCategory::others;
}

}  // namespace hle
