#pragma once

#include <chrono>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hle/core/text.hpp"
#include "hle/core/types.hpp"

namespace hle {

struct DecodingParams {
    double temperature = 1.0;
    std::optional<int> top_k;
    int max_tokens = 16;
    std::vector<std::string> stop_sequences;
    int num_completions = 1;

    void validate() const {
        if (!(temperature >= 0.0)) throw Error(ErrorCode::invalid_argument, "temperature must be >= 0");
        if (top_k && *top_k < 1) throw Error(ErrorCode::invalid_argument, "top_k must be positive");
        if (max_tokens < 1) throw Error(ErrorCode::invalid_argument, "max_tokens must be >= 1");
        if (num_completions < 1) throw Error(ErrorCode::invalid_argument, "num_completions must be >= 1");
    }

    bool operator==(const DecodingParams&) const = default;
};

inline void to_json(Json& j, const DecodingParams& p) {
    j = Json{{"temperature", p.temperature},
             {"max_tokens", p.max_tokens},
             {"stop_sequences", p.stop_sequences},
             {"num_completions", p.num_completions}};
    j["top_k"] = p.top_k ? Json(*p.top_k) : Json(nullptr);
}

inline void from_json(const Json& j, DecodingParams& p) {
    j.at("temperature").get_to(p.temperature);
    j.at("max_tokens").get_to(p.max_tokens);
    j.at("stop_sequences").get_to(p.stop_sequences);
    j.at("num_completions").get_to(p.num_completions);
    if (j.contains("top_k") && !j.at("top_k").is_null()) {
        p.top_k = j.at("top_k").get<int>();
    } else {
        p.top_k.reset();
    }
}

enum class FinishReason { stop_sequence, length, backend };

NLOHMANN_JSON_SERIALIZE_ENUM(FinishReason, {
    {FinishReason::stop_sequence, "stop_sequence"},
    {FinishReason::length, "length"},
    {FinishReason::backend, "backend"},
})

struct Completion {
    std::string text;
    FinishReason finish_reason = FinishReason::backend;
    bool filtered = false;

    bool operator==(const Completion&) const = default;
};

inline void to_json(Json& j, const Completion& c) {
    j = Json{{"text", c.text}, {"finish_reason", c.finish_reason}, {"filtered", c.filtered}};
}
inline void from_json(const Json& j, Completion& c) {
    j.at("text").get_to(c.text);
    j.at("finish_reason").get_to(c.finish_reason);
    j.at("filtered").get_to(c.filtered);
}

struct Prompt {
    std::string text;
    std::string request_id;
};

struct CompletionSet {
    std::string request_id;
    std::vector<Completion> completions;
    Millis latency_ms = 0;

    bool operator==(const CompletionSet&) const = default;

    std::vector<const Completion*> surfaced() const {
        std::vector<const Completion*> out;
        for (const auto& c : completions) {
            if (!c.filtered) out.push_back(&c);
        }
        return out;
    }
};

inline void to_json(Json& j, const CompletionSet& c) {
    j = Json{{"request_id", c.request_id}, {"completions", c.completions}, {"latency_ms", c.latency_ms}};
}
inline void from_json(const Json& j, CompletionSet& c) {
    j.at("request_id").get_to(c.request_id);
    j.at("completions").get_to(c.completions);
    c.latency_ms = j.value("latency_ms", Millis{0});
}

/// A completion provider. Implementations return raw completions (stop
/// sequences possibly still present) and throw Error with backend_failure or
/// rate_limited.
class LmBackend {
public:
    virtual ~LmBackend() = default;
    virtual std::string model_id() const = 0;
    virtual std::vector<Completion> complete(const Prompt& prompt, const DecodingParams& params) = 0;
};

/// Cuts text at the earliest occurrence of any stop sequence. Returns true if
/// a cut happened.
inline bool strip_stop_sequences(std::string& text, const std::vector<std::string>& stops) {
    std::size_t cut = std::string::npos;
    for (const auto& s : stops) {
        if (s.empty()) continue;
        auto pos = text.find(s);
        if (pos != std::string::npos && (cut == std::string::npos || pos < cut)) cut = pos;
    }
    if (cut == std::string::npos) return false;
    text.erase(cut);
    while (!text.empty() && text::is_space(text.back())) text.pop_back();
    return true;
}

struct RetryPolicy {
    int max_attempts = 3;
    Millis initial_backoff_ms = 500;
    std::function<void(Millis)> sleep = [](Millis ms) {
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    };
};

/// Prompt + decoding parameters in, completions out. Retries rate-limited
/// calls with exponential backoff; never returns more than num_completions.
inline CompletionSet query_lm(const Prompt& prompt, const DecodingParams& params, LmBackend& backend,
                              const RetryPolicy& retry = {},
                              const std::function<Millis()>& clock = nullptr) {
    params.validate();
    const auto now = [&]() -> Millis {
        if (clock) return clock();
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now().time_since_epoch())
            .count();
    };
    const Millis started = now();
    std::vector<Completion> raw;
    Millis backoff = retry.initial_backoff_ms;
    for (int attempt = 1;; ++attempt) {
        try {
            raw = backend.complete(prompt, params);
            break;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::rate_limited || attempt >= retry.max_attempts) throw;
            if (retry.sleep) retry.sleep(backoff);
            backoff *= 2;
        }
    }
    CompletionSet out;
    out.request_id = prompt.request_id;
    for (auto& c : raw) {
        if (static_cast<int>(out.completions.size()) >= params.num_completions) break;
        if (strip_stop_sequences(c.text, params.stop_sequences)) c.finish_reason = FinishReason::stop_sequence;
        out.completions.push_back(std::move(c));
    }
    out.latency_ms = now() - started;
    return out;
}

inline constexpr const char* kFilteredPlaceholder = "[response withheld by content filter]";

/// True if keyword occurs in text (both already lowercase) delimited on both
/// sides by a non-alphanumeric character or a text boundary.
inline bool contains_word(std::string_view text, std::string_view keyword) {
    if (keyword.empty()) return false;
    for (auto pos = text.find(keyword); pos != std::string_view::npos; pos = text.find(keyword, pos + 1)) {
        const bool left = pos == 0 || !text::is_alnum(text[pos - 1]);
        const std::size_t end = pos + keyword.size();
        const bool right = end == text.size() || !text::is_alnum(text[end]);
        if (left && right) return true;
    }
    return false;
}

/// Marks completions containing a blocklist keyword as filtered and replaces
/// their text with a fixed placeholder. Matching is case-insensitive on word
/// boundaries.
inline CompletionSet apply_blocklist(CompletionSet completions, const std::vector<std::string>& blocklist) {
    if (blocklist.empty()) return completions;
    for (auto& c : completions.completions) {
        if (c.filtered) continue;
        const std::string lowered = text::to_lower(c.text);
        for (const auto& kw : blocklist) {
            if (contains_word(lowered, text::to_lower(kw))) {
                c.filtered = true;
                c.text = kFilteredPlaceholder;
                break;
            }
        }
    }
    return completions;
}

/// One keyword per line; blank lines and '#' comments skipped; lowercased.
inline std::vector<std::string> parse_blocklist(std::istream& in) {
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        out.push_back(text::to_lower(t));
    }
    return out;
}

inline std::vector<std::string> load_blocklist(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open blocklist " + path);
    return parse_blocklist(in);
}

/// What trace_core talks to: a model-bound query endpoint that already applies
/// stop stripping and the blocklist.
class LmGateway {
public:
    virtual ~LmGateway() = default;
    virtual std::string model_id() const = 0;
    virtual CompletionSet query(const Prompt& prompt, const DecodingParams& params) = 0;
};

class LiveGateway final : public LmGateway {
public:
    LiveGateway(LmBackend& backend, std::vector<std::string> blocklist, RetryPolicy retry = {},
                std::function<Millis()> clock = nullptr)
        : backend_(backend), blocklist_(std::move(blocklist)), retry_(std::move(retry)), clock_(std::move(clock)) {}

    std::string model_id() const override { return backend_.model_id(); }

    CompletionSet query(const Prompt& prompt, const DecodingParams& params) override {
        return apply_blocklist(query_lm(prompt, params, backend_, retry_, clock_), blocklist_);
    }

private:
    LmBackend& backend_;
    std::vector<std::string> blocklist_;
    RetryPolicy retry_;
    std::function<Millis()> clock_;
};

}  // namespace hle
