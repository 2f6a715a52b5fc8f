#pragma once

#include <array>
#include <fstream>
#include <string>
#include <vector>

#include "hle/core/text.hpp"
#include "hle/core/types.hpp"
#include "hle/lm/gateway.hpp"

namespace hle {

/// Prompt-pattern to response-template entry. The pattern is matched
/// case-insensitively against the last paragraph of the prompt.
struct MockFixture {
    std::string pattern;
    std::vector<std::string> responses;
};

/// Behaviour knobs that make mock model ids distinguishable in reports.
struct MockProfile {
    double fixture_fidelity = 1.0;  // probability a matching fixture is used
    int extractive_span = 8;        // words copied per fragment when summarizing
};

struct MockConfig {
    std::vector<MockFixture> fixtures;
    MockProfile profile;
};

inline void from_json(const Json& j, MockFixture& f) {
    j.at("pattern").get_to(f.pattern);
    j.at("responses").get_to(f.responses);
}

inline void from_json(const Json& j, MockProfile& p) {
    p.fixture_fidelity = j.value("fixture_fidelity", 1.0);
    p.extractive_span = j.value("extractive_span", 8);
}

namespace mock_detail {

inline constexpr std::array<const char*, 64> kVocabulary = {
    "river",  "light",   "quiet",   "garden", "people",  "morning", "story",  "window", "simple", "letter",
    "bright", "travel",  "market",  "winter", "music",   "friend",  "answer", "corner", "gentle", "paper",
    "season", "kitchen", "distant", "signal", "harbor",  "village", "record", "silver", "pattern", "forest",
    "open",   "careful", "evening", "bridge", "number",  "reason",  "steady", "mountain", "color", "voice",
    "school", "station", "orange",  "shadow", "thought", "island",  "weather", "journey", "little", "common",
    "piece",  "engine",  "history", "measure", "circle", "balance", "summer", "wonder", "moment", "table",
    "field",  "street",  "clear",   "small"};

inline std::uint64_t mix(std::string_view text, std::uint64_t seed, std::uint64_t sub) {
    return splitmix64(fnv1a64(text) ^ splitmix64(seed * 0x9E3779B97F4A7C15ULL + sub));
}

inline std::string filler_sentence(std::uint64_t h, int min_words, int max_words) {
    const int span = max_words - min_words + 1;
    const int n = min_words + static_cast<int>(h % static_cast<std::uint64_t>(span));
    std::string out;
    std::uint64_t state = h;
    for (int i = 0; i < n; ++i) {
        state = splitmix64(state);
        std::string w = kVocabulary[state % kVocabulary.size()];
        if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out + ".";
}

/// Text after the last blank line: the part of a few-shot prompt that is
/// specific to this query.
inline std::string last_paragraph(const std::string& prompt) {
    auto pos = prompt.rfind("\n\n");
    return pos == std::string::npos ? prompt : prompt.substr(pos + 2);
}

inline std::string extractive_summary(const std::string& segment, std::uint64_t h, int span) {
    const std::string lowered = text::to_lower(segment);
    auto dpos = lowered.find("document:");
    auto spos = lowered.rfind("summary:");
    if (dpos == std::string::npos || spos == std::string::npos || spos < dpos) return filler_sentence(h, 6, 12);
    auto words = text::split_words(std::string_view(segment).substr(dpos + 9, spos - dpos - 9));
    if (words.empty()) return filler_sentence(h, 6, 12);
    span = std::max(1, span);
    const std::size_t target = 16;
    std::string out;
    std::size_t pos = words.size() > target ? h % (words.size() - target / 2) : 0;
    std::uint64_t state = h;
    std::size_t produced = 0;
    while (produced < target) {
        for (int k = 0; k < span && produced < target; ++k) {
            if (pos >= words.size()) pos = 0;
            std::string w = words[pos++];
            while (!w.empty() && (w.back() == '.' || w.back() == '!' || w.back() == '?')) w.pop_back();
            if (w.empty()) continue;
            if (!out.empty()) out += ' ';
            out += w;
            ++produced;
        }
        if (produced < target) {
            state = splitmix64(state);
            out += ' ';
            out += kVocabulary[state % kVocabulary.size()];
            ++produced;
            pos += 1 + state % 3;
        }
    }
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out + ". " + filler_sentence(splitmix64(state), 4, 8);
}

}  // namespace mock_detail

/// Deterministic stand-in for a hosted model. Output depends only on
/// (prompt text, params, seed, config); unmatched prompts get a hash-derived
/// filler sentence. When stop sequences are configured the raw output runs
/// past the first one so that stop handling is exercised downstream.
inline CompletionSet mock_complete(const Prompt& prompt, const DecodingParams& params, std::uint64_t seed,
                                   const MockConfig& config) {
    params.validate();
    CompletionSet out;
    out.request_id = prompt.request_id;
    const std::string segment = mock_detail::last_paragraph(prompt.text);
    const std::string lowered_segment = text::to_lower(segment);
    const std::string trimmed = std::string(text::trim(lowered_segment));
    const std::string param_key = canonical(Json(params));
    for (int i = 0; i < params.num_completions; ++i) {
        const std::uint64_t h = mock_detail::mix(prompt.text + '\x1f' + param_key, seed, static_cast<std::uint64_t>(i));
        std::string body;
        for (const auto& f : config.fixtures) {
            if (f.responses.empty() || lowered_segment.find(text::to_lower(f.pattern)) == std::string::npos) continue;
            const double roll = static_cast<double>(h % 10000) / 10000.0;
            if (roll < config.profile.fixture_fidelity) body = f.responses[(h >> 20) % f.responses.size()];
            break;
        }
        if (body.empty()) {
            if (text::ends_with(trimmed, "summary:")) {
                body = mock_detail::extractive_summary(segment, h, config.profile.extractive_span);
            } else {
                body = mock_detail::filler_sentence(h, 5, 14);
            }
        }
        Completion c;
        c.finish_reason = FinishReason::backend;
        auto words = text::split_words(body);
        if (static_cast<int>(words.size()) > params.max_tokens) {
            body.clear();
            for (int w = 0; w < params.max_tokens; ++w) body += (w ? " " : "") + words[static_cast<std::size_t>(w)];
            c.finish_reason = FinishReason::length;
        } else if (!params.stop_sequences.empty()) {
            body += "\n" + params.stop_sequences.front() + " " + mock_detail::filler_sentence(splitmix64(h), 3, 6);
        }
        c.text = std::move(body);
        out.completions.push_back(std::move(c));
    }
    return out;
}

class MockBackend final : public LmBackend {
public:
    MockBackend(std::string model_id, std::uint64_t seed, MockConfig config)
        : model_id_(std::move(model_id)), seed_(seed), config_(std::move(config)) {}

    std::string model_id() const override { return model_id_; }

    std::vector<Completion> complete(const Prompt& prompt, const DecodingParams& params) override {
        return mock_complete(prompt, params, seed_, config_).completions;
    }

    const MockConfig& config() const { return config_; }

private:
    std::string model_id_;
    std::uint64_t seed_;
    MockConfig config_;
};

inline std::vector<MockFixture> load_mock_fixtures(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open mock fixtures " + path);
    return Json::parse(in).at("fixtures").get<std::vector<MockFixture>>();
}

}  // namespace hle
