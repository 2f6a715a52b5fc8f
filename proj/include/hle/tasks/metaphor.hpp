#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hle/core/text.hpp"
#include "hle/tasks/adapter.hpp"
#include "hle/tasks/banks.hpp"

namespace hle {

inline constexpr Millis kMetaphorSessionMs = 10LL * 60 * 1000;
inline constexpr int kMetaphorSuggestions = 5;

/// The three fixed (metaphor, sentence) pairs prepended to every prompt.
inline const std::vector<std::pair<std::string, std::string>>& metaphor_examples() {
    static const std::vector<std::pair<std::string, std::string>> ex = {
        {"Argument is war.", "He attacked every weak point in my argument."},
        {"Time is money.", "Is that worth your while?"},
        {"Love is a journey.", "We'll just have to go our separate ways."},
    };
    return ex;
}

inline constexpr const char* kMetaphorCue = "Metaphorical Sentence:";

struct MetaphorConfig {
    double temperature = 0.9;
    int max_tokens = 30;
    std::string stop = "Metaphor:";
    int num_completions = kMetaphorSuggestions;
    Millis session_ms = kMetaphorSessionMs;
};

class MetaphorAdapter final : public TaskAdapter {
public:
    explicit MetaphorAdapter(const SurveyBank* surveys = nullptr, MetaphorConfig config = {})
        : TaskAdapter(surveys), config_(std::move(config)) {}

    TaskKind kind() const override { return TaskKind::metaphor; }

    std::vector<std::string> visible_schema() const override {
        return {"seed_metaphor", "sentences", "started_at", "suggestions", "user_input"};
    }

    SessionState initial_state(std::string session_id, std::string seed_metaphor, Millis start) const {
        SessionState s;
        s.session_id = std::move(session_id);
        s.task_kind = kind();
        s.clock = start;
        s.visible["seed_metaphor"] = std::move(seed_metaphor);
        s.visible["sentences"] = Json::array();
        s.visible["user_input"] = "";
        s.visible["suggestions"] = nullptr;
        s.visible["started_at"] = start;
        Json ex = Json::array();
        for (const auto& [m, sentence] : metaphor_examples()) ex.push_back(Json{{"metaphor", m}, {"sentence", sentence}});
        s.hidden["in_context_examples"] = ex;
        s.hidden["selected_suggestion"] = nullptr;
        s.hidden["sentence_log"] = Json::array();
        return s;
    }

    bool requires_lm(const SessionState&, const UserAction& a) const override {
        return a.kind == ActionKind::click_button && button(a) == "get_suggestions";
    }

    /// The three example pairs, then the seed metaphor and the sentence cue.
    /// Text already typed by the user continues the cue.
    Prompt create_prompt(const SessionState& s) const override {
        std::string out;
        for (const auto& ex : s.hidden.at("in_context_examples")) {
            out += "Metaphor: " + ex.at("metaphor").get<std::string>() + "\n" + kMetaphorCue + " " +
                   ex.at("sentence").get<std::string>() + "\n\n";
        }
        out += "Metaphor: " + s.visible.at("seed_metaphor").get<std::string>() + "\n" + kMetaphorCue;
        const auto input = s.visible.at("user_input").get<std::string>();
        if (!input.empty()) out += " " + input;
        return {out, {}};
    }

    DecodingParams decoding_params() const override {
        DecodingParams p;
        p.temperature = config_.temperature;
        p.max_tokens = config_.max_tokens;
        p.stop_sequences = {config_.stop};
        p.num_completions = config_.num_completions;
        return p;
    }

    /// Every surfaced completion goes into the suggestion popup.
    SessionState show_completions(SessionState s, const CompletionSet& c) const override {
        Json list = Json::array();
        for (const auto& x : c.completions) {
            if (!x.filtered) list.push_back(std::string(text::trim(x.text)));
        }
        s.visible["suggestions"] = list;
        return s;
    }

    std::optional<std::string> timer_reason(const SessionState& s, Millis now) const override {
        if (now - s.visible.at("started_at").get<Millis>() >= config_.session_ms) return "timer";
        return std::nullopt;
    }

    Json query_unit(const SessionState& s) const override {
        return static_cast<int>(s.visible.at("sentences").size());
    }

protected:
    void validate_task_action(const SessionState& s, const UserAction& a) const override {
        const auto& suggestions = s.visible.at("suggestions");
        switch (a.kind) {
            case ActionKind::type_text:
                if (button(a) != "user_input") reject("metaphor only accepts typing into user_input");
                payload_text(a);
                return;
            case ActionKind::select_option: {
                if (button(a) != "suggestion") reject("metaphor selections target 'suggestion'");
                if (suggestions.is_null()) reject("no suggestions shown");
                const int i = payload_index(a);
                if (i < 0 || i >= static_cast<int>(suggestions.size())) reject("suggestion index out of range");
                return;
            }
            case ActionKind::click_button:
                if (button(a) == "get_suggestions") return;
                if (button(a) == "dismiss") {
                    if (suggestions.is_null()) reject("no suggestions to dismiss");
                    return;
                }
                if (button(a) == "submit") {
                    if (text::trim(s.visible.at("user_input").get<std::string>()).empty()) {
                        throw Error(ErrorCode::empty_input, "empty sentence");
                    }
                    return;
                }
                reject("unknown button '" + button(a) + "'");
            default: reject("action not available in metaphor");
        }
    }

    SessionState apply_task_action(SessionState s, const UserAction& a) const override {
        switch (a.kind) {
            case ActionKind::type_text: s.visible["user_input"] = payload_text(a); break;
            case ActionKind::select_option: {
                const auto chosen = s.visible["suggestions"][static_cast<std::size_t>(payload_index(a))];
                s.visible["user_input"] = chosen;
                s.hidden["selected_suggestion"] = chosen;
                s.visible["suggestions"] = nullptr;
                break;
            }
            case ActionKind::click_button:
                if (button(a) == "dismiss") {
                    // input is kept as typed
                    s.visible["suggestions"] = nullptr;
                } else if (button(a) == "submit") {
                    s.visible["sentences"].push_back(s.visible.at("user_input"));
                    s.hidden["sentence_log"].push_back(Json{{"text", s.visible.at("user_input")},
                                                            {"from_suggestion", s.hidden.at("selected_suggestion")},
                                                            {"submitted_at", a.timestamp}});
                    s.visible["user_input"] = "";
                    s.hidden["selected_suggestion"] = nullptr;
                    s.visible["suggestions"] = nullptr;
                }
                break;
            default: break;
        }
        return s;
    }

private:
    MetaphorConfig config_;
};

}  // namespace hle
