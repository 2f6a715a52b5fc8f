#pragma once

#include <string>
#include <vector>

#include "hle/core/text.hpp"
#include "hle/tasks/adapter.hpp"
#include "hle/tasks/banks.hpp"

namespace hle {

struct DialogueConfig {
    int example_count = 4;
    int max_tokens = 64;
    std::string conversation_tag = "conversation";
    std::string user_tag = "user";
    std::string bot_tag = "bot";
    int min_turns_exclusive = 10;   // finish allowed once turn_count exceeds this
    int min_words_exclusive = 250;  // ... or total words exceed this
};

struct DialogueState {
    std::string scenario;
    std::string dataset;
    std::vector<Turn> dialogue_history;
    std::string user_input;
    std::vector<std::vector<Turn>> in_context_examples;
    int turn_count = 0;
    int total_words = 0;

    static DialogueState from(const SessionState& s) {
        DialogueState d;
        d.scenario = s.visible.at("scenario").get<std::string>();
        d.dialogue_history = s.visible.at("dialogue_history").get<std::vector<Turn>>();
        d.user_input = s.visible.at("user_input").get<std::string>();
        d.turn_count = s.visible.at("turn_count").get<int>();
        d.total_words = s.visible.at("total_words").get<int>();
        d.dataset = s.hidden.at("dataset").get<std::string>();
        d.in_context_examples = s.hidden.at("in_context_examples").get<std::vector<std::vector<Turn>>>();
        return d;
    }

    void store(SessionState& s) const {
        s.visible["scenario"] = scenario;
        s.visible["dialogue_history"] = dialogue_history;
        s.visible["user_input"] = user_input;
        s.visible["turn_count"] = turn_count;
        s.visible["total_words"] = total_words;
        s.hidden["dataset"] = dataset;
        s.hidden["in_context_examples"] = in_context_examples;
    }

    void recount() {
        turn_count = 0;
        total_words = 0;
        for (const auto& t : dialogue_history) {
            if (t.speaker == "user") ++turn_count;
            total_words += static_cast<int>(text::word_count(t.text));
        }
    }
};

class DialogueAdapter final : public TaskAdapter {
public:
    explicit DialogueAdapter(const SurveyBank* surveys = nullptr, DialogueConfig config = {})
        : TaskAdapter(surveys), config_(std::move(config)) {}

    TaskKind kind() const override { return TaskKind::dialogue; }

    std::vector<std::string> visible_schema() const override {
        return {"dialogue_history", "scenario", "total_words", "turn_count", "user_input"};
    }

    SessionState initial_state(std::string session_id, const Scenario& scenario,
                               const std::vector<std::vector<Turn>>& example_bank, Millis start) const {
        DialogueState d;
        d.scenario = scenario.text;
        d.dataset = scenario.dataset;
        const auto n = std::min<std::size_t>(example_bank.size(), static_cast<std::size_t>(config_.example_count));
        d.in_context_examples.assign(example_bank.begin(), example_bank.begin() + static_cast<std::ptrdiff_t>(n));
        SessionState s;
        s.session_id = std::move(session_id);
        s.task_kind = kind();
        s.clock = start;
        d.store(s);
        return s;
    }

    bool requires_lm(const SessionState&, const UserAction& a) const override {
        return a.kind == ActionKind::click_button && button(a) == "send";
    }

    /// Tagged example dialogues, then the current history ending at the
    /// newest user turn. The scenario is never part of the prompt.
    Prompt create_prompt(const SessionState& s) const override {
        const auto d = DialogueState::from(s);
        std::string out;
        for (const auto& ex : d.in_context_examples) {
            out += render(ex, true);
            out += "\n\n";
        }
        out += render(d.dialogue_history, false);
        return {out, {}};
    }

    DecodingParams decoding_params() const override {
        DecodingParams p;
        p.temperature = 0.9;
        p.top_k = 50;
        p.max_tokens = config_.max_tokens;
        return p;
    }

    SessionState show_completions(SessionState s, const CompletionSet& c) const override {
        auto d = DialogueState::from(s);
        Turn bot{"bot", kFilteredPlaceholder, true};
        if (const Completion* first = first_surfaced(c)) bot = Turn{"bot", extract_bot_turn(first->text), false};
        d.dialogue_history.push_back(std::move(bot));
        d.recount();
        d.store(s);
        return s;
    }

    bool finish_allowed(const SessionState& s) const override {
        return s.visible.at("turn_count").get<int>() > config_.min_turns_exclusive ||
               s.visible.at("total_words").get<int>() > config_.min_words_exclusive;
    }

    Json query_unit(const SessionState& s) const override { return s.visible.at("turn_count"); }

    int survey_turn_count(const SessionState& s) const override {
        int bots = 0;
        for (const auto& t : s.visible.at("dialogue_history")) bots += t.at("speaker") == "bot" ? 1 : 0;
        return bots;
    }

    std::string survey_dataset(const SessionState& s) const override { return s.hidden.at("dataset").get<std::string>(); }

    const DialogueConfig& config() const { return config_; }

    std::string extract_bot_turn(const std::string& raw) const {
        std::string_view v = text::trim(raw);
        const std::string open = "<" + config_.bot_tag + ">";
        if (text::starts_with(v, open)) v.remove_prefix(open.size());
        auto cut = v.find('<');
        if (cut != std::string_view::npos) v = v.substr(0, cut);
        return std::string(text::trim(v));
    }

protected:
    void validate_task_action(const SessionState& s, const UserAction& a) const override {
        switch (a.kind) {
            case ActionKind::type_text:
                if (button(a) != "user_input") reject("dialogue only accepts typing into user_input");
                payload_text(a);
                return;
            case ActionKind::click_button:
                if (button(a) != "send") reject("unknown button '" + button(a) + "'");
                if (text::trim(s.visible.at("user_input").get<std::string>()).empty()) {
                    throw Error(ErrorCode::empty_input, "nothing to send");
                }
                return;
            default: reject("action not available in dialogue");
        }
    }

    SessionState apply_task_action(SessionState s, const UserAction& a) const override {
        auto d = DialogueState::from(s);
        if (a.kind == ActionKind::type_text) {
            d.user_input = payload_text(a);
        } else {
            // send: the input becomes the newest user turn and the box is cleared
            d.dialogue_history.push_back(Turn{"user", d.user_input, false});
            d.user_input.clear();
            d.recount();
        }
        d.store(s);
        return s;
    }

private:
    std::string render(const std::vector<Turn>& turns, bool closed) const {
        std::string out = "<" + config_.conversation_tag + ">";
        for (const auto& t : turns) {
            const std::string& tag = t.speaker == "user" ? config_.user_tag : config_.bot_tag;
            out += "\n<" + tag + ">" + t.text + "</" + tag + ">";
        }
        if (closed) out += "\n</" + config_.conversation_tag + ">";
        return out;
    }

    DialogueConfig config_;
};

}  // namespace hle
