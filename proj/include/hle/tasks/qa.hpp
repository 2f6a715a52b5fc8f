#pragma once

#include <string>
#include <vector>

#include "hle/core/text.hpp"
#include "hle/tasks/adapter.hpp"
#include "hle/tasks/banks.hpp"

namespace hle {

inline constexpr int kQuizQuestions = 10;
inline constexpr int kQuizLength = kQuizQuestions + 1;  // plus one attention check
inline constexpr int kAttentionCheckIndex = kQuizQuestions / 2;

/// Ten pool questions in seeded order with the attention check in the middle;
/// half of the pool questions (seeded) are LM-assisted.
inline Json make_quiz(const std::vector<QuizQuestion>& bank, std::uint64_t seed) {
    std::vector<const QuizQuestion*> pool;
    const QuizQuestion* attention = nullptr;
    for (const auto& q : bank) {
        if (q.attention_check) {
            if (!attention) attention = &q;
        } else {
            pool.push_back(&q);
        }
    }
    if (pool.size() < static_cast<std::size_t>(kQuizQuestions) || !attention) {
        throw Error(ErrorCode::invalid_argument, "question bank needs 10 pool questions and an attention check");
    }
    const auto order = seeded_permutation(pool.size(), seed);
    const auto assisted_order = seeded_permutation(kQuizQuestions, splitmix64(seed ^ 0xa5a5a5a5ULL));
    std::vector<bool> assisted(kQuizQuestions, false);
    for (int i = 0; i < kQuizQuestions / 2; ++i) assisted[assisted_order[static_cast<std::size_t>(i)]] = true;

    Json quiz = Json::array();
    int pool_pos = 0;
    for (int i = 0; i < kQuizLength; ++i) {
        Json q;
        if (i == kAttentionCheckIndex) {
            q = *attention;
            q["assisted"] = false;
        } else {
            q = *pool[order[static_cast<std::size_t>(pool_pos)]];
            q["assisted"] = static_cast<bool>(assisted[static_cast<std::size_t>(pool_pos)]);
            ++pool_pos;
        }
        quiz.push_back(std::move(q));
    }
    return quiz;
}

struct QaConfig {
    double temperature = 0.5;
    int max_tokens = 100;
};

class QaAdapter final : public TaskAdapter {
public:
    explicit QaAdapter(const SurveyBank* surveys = nullptr, QaConfig config = {})
        : TaskAdapter(surveys), config_(config) {}

    TaskKind kind() const override { return TaskKind::qa; }

    std::vector<std::string> visible_schema() const override {
        return {"assisted", "current_index", "question", "selected_choice", "system_output", "user_input"};
    }

    SessionState initial_state(std::string session_id, Json quiz, Millis start) const {
        if (!quiz.is_array() || quiz.size() != static_cast<std::size_t>(kQuizLength)) {
            throw Error(ErrorCode::invalid_argument, "quiz must hold 11 questions");
        }
        int checks = 0;
        for (const auto& q : quiz) checks += q.value("attention_check", false) ? 1 : 0;
        if (checks != 1) throw Error(ErrorCode::invalid_argument, "quiz must hold exactly one attention check");
        SessionState s;
        s.session_id = std::move(session_id);
        s.task_kind = kind();
        s.clock = start;
        s.hidden["quiz"] = std::move(quiz);
        s.hidden["answers"] = Json::array();
        s.hidden["question_shown_at"] = start;
        show_question(s, 0);
        return s;
    }

    bool requires_lm(const SessionState&, const UserAction& a) const override {
        return a.kind == ActionKind::click_button && button(a) == "generate";
    }

    /// The user input verbatim; the multiple-choice question is not added.
    Prompt create_prompt(const SessionState& s) const override {
        return {s.visible.at("user_input").get<std::string>(), {}};
    }

    DecodingParams decoding_params() const override {
        DecodingParams p;
        p.temperature = config_.temperature;
        p.max_tokens = config_.max_tokens;
        return p;
    }

    SessionState show_completions(SessionState s, const CompletionSet& c) const override {
        const Completion* first = first_surfaced(c);
        s.visible["system_output"] = first ? first->text : std::string(kFilteredPlaceholder);
        return s;
    }

    std::optional<std::string> completion_reason(const SessionState& s) const override {
        if (s.hidden.at("answers").size() >= static_cast<std::size_t>(kQuizLength)) return "quiz_complete";
        return std::nullopt;
    }

    Json query_unit(const SessionState& s) const override { return s.visible.at("current_index"); }

protected:
    void validate_task_action(const SessionState& s, const UserAction& a) const override {
        switch (a.kind) {
            case ActionKind::type_text:
                if (button(a) != "user_input") reject("qa only accepts typing into user_input");
                payload_text(a);
                return;
            case ActionKind::select_option: {
                if (button(a) != "choice") reject("qa selections target 'choice'");
                const int i = payload_index(a);
                if (i < 0 || i > 3) reject("choice index out of range");
                return;
            }
            case ActionKind::click_button:
                if (button(a) == "generate") {
                    if (!s.visible.at("assisted").get<bool>()) reject("this question is answered without assistance");
                    if (text::trim(s.visible.at("user_input").get<std::string>()).empty()) {
                        throw Error(ErrorCode::empty_input, "empty prompt");
                    }
                    return;
                }
                if (button(a) == "next") {
                    if (s.visible.at("selected_choice").is_null()) reject("select an answer first");
                    return;
                }
                reject("unknown button '" + button(a) + "'");
            default: reject("action not available in qa");
        }
    }

    SessionState apply_task_action(SessionState s, const UserAction& a) const override {
        switch (a.kind) {
            case ActionKind::type_text: s.visible["user_input"] = payload_text(a); break;
            case ActionKind::select_option: s.visible["selected_choice"] = payload_index(a); break;
            case ActionKind::click_button:
                if (button(a) == "next") submit_answer(s, a.timestamp);
                break;
            default: break;
        }
        return s;
    }

private:
    static void show_question(SessionState& s, int index) {
        const auto& q = s.hidden.at("quiz").at(static_cast<std::size_t>(index));
        s.visible["current_index"] = index;
        s.visible["question"] = Json{{"text", q.at("text")}, {"choices", q.at("choices")}};
        s.visible["assisted"] = q.at("assisted");
        s.visible["user_input"] = "";
        s.visible["system_output"] = "";
        s.visible["selected_choice"] = nullptr;
    }

    static void submit_answer(SessionState& s, Millis now) {
        const int index = s.visible.at("current_index").get<int>();
        const auto& q = s.hidden.at("quiz").at(static_cast<std::size_t>(index));
        const int choice = s.visible.at("selected_choice").get<int>();
        s.hidden["answers"].push_back(Json{{"index", index},
                                           {"choice", choice},
                                           {"correct", choice == q.at("gold").get<int>()},
                                           {"assisted", q.at("assisted")},
                                           {"attention_check", q.value("attention_check", false)},
                                           {"shown_at", s.hidden.at("question_shown_at")},
                                           {"submitted_at", now}});
        if (index + 1 < kQuizLength) {
            s.hidden["question_shown_at"] = now;
            show_question(s, index + 1);
        } else {
            s.visible["question"] = nullptr;
            s.visible["user_input"] = "";
            s.visible["system_output"] = "";
            s.visible["selected_choice"] = nullptr;
            s.visible["assisted"] = false;
        }
    }

    QaConfig config_;
};

}  // namespace hle
