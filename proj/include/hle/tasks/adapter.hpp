#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hle/core/types.hpp"
#include "hle/lm/gateway.hpp"
#include "hle/survey/survey.hpp"

namespace hle {

/// Task-specific system logic: state schema, legal actions, prompt
/// construction, completion placement and terminal rules. Adapters are
/// stateless rule sets; every method is a pure function of its inputs.
class TaskAdapter {
public:
    explicit TaskAdapter(const SurveyBank* surveys = nullptr) : surveys_(surveys) {}
    virtual ~TaskAdapter() = default;

    virtual TaskKind kind() const = 0;
    virtual std::vector<std::string> visible_schema() const = 0;

    /// Throws Error (illegal_action, empty_input, ...) when the action is not
    /// legal in `state`. Survey, finish and telemetry actions are checked by
    /// the base class.
    void validate(const SessionState& state, const UserAction& action) const {
        if (state.task_kind != kind()) throw Error(ErrorCode::illegal_action, "state belongs to another task");
        switch (action.kind) {
            case ActionKind::telemetry: return;
            case ActionKind::finish:
                if (!action.payload.is_null()) throw Error(ErrorCode::illegal_action, "finish carries no payload");
                if (!finish_allowed(state)) throw Error(ErrorCode::illegal_action, "finish gate not met");
                return;
            case ActionKind::submit_survey: check_survey(state, action); return;
            case ActionKind::enter_letter:
                if (kind() != TaskKind::crossword) {
                    throw Error(ErrorCode::illegal_action, "enter_letter is only valid for crossword");
                }
                break;
            default: break;
        }
        if (task_complete(state)) throw Error(ErrorCode::illegal_action, "task already complete");
        validate_task_action(state, action);
    }

    virtual bool requires_lm(const SessionState& state, const UserAction& action) const = 0;

    /// Applies the non-LM part of an action. For LM actions this is the commit
    /// that happens before the prompt is built (e.g. the user turn entering the
    /// dialogue history).
    SessionState apply(SessionState state, const UserAction& action) const {
        switch (action.kind) {
            case ActionKind::telemetry:
            case ActionKind::finish: return state;
            case ActionKind::submit_survey: return apply_survey(std::move(state), action);
            default: return apply_task_action(std::move(state), action);
        }
    }

    virtual Prompt create_prompt(const SessionState& state) const = 0;
    virtual DecodingParams decoding_params() const = 0;
    virtual SessionState show_completions(SessionState state, const CompletionSet& completions) const = 0;

    virtual bool finish_allowed(const SessionState&) const { return true; }
    /// Solve/completion condition (quiz answered, grid solved, ...).
    virtual std::optional<std::string> completion_reason(const SessionState&) const { return std::nullopt; }
    /// Session timer, evaluated at time `now`.
    virtual std::optional<std::string> timer_reason(const SessionState&, Millis /*now*/) const { return std::nullopt; }

    bool task_complete(const SessionState& s) const { return completion_reason(s).has_value(); }

    /// Unit a query is attributed to (question index, sentence index, ...).
    virtual Json query_unit(const SessionState& state) const = 0;

    /// Number of scorable turns for turn-level survey items.
    virtual int survey_turn_count(const SessionState&) const { return 0; }
    virtual std::string survey_dataset(const SessionState&) const { return {}; }
    virtual std::optional<int> survey_unit_index(const SessionState&, SurveyLevel) const { return std::nullopt; }

    const SurveyBank* surveys() const { return surveys_; }

    /// Form shown for a submission at `level`.
    std::vector<SurveyItem> survey_form(const SessionState& state, SurveyLevel level) const {
        if (!surveys_) return {};
        return surveys_->form(kind(), level, survey_dataset(state));
    }

    static SurveyLevel submission_level(const UserAction& a) {
        if (!a.payload.is_object()) throw Error(ErrorCode::illegal_action, "survey payload must be an object");
        return a.payload.value("level", SurveyLevel::session);
    }

    static std::vector<SurveyResponse> submission_responses(const UserAction& a) {
        if (!a.payload.is_object() || !a.payload.contains("responses")) {
            throw Error(ErrorCode::illegal_action, "survey payload needs a responses list");
        }
        return a.payload.at("responses").get<std::vector<SurveyResponse>>();
    }

protected:
    virtual void validate_task_action(const SessionState& state, const UserAction& action) const = 0;
    virtual SessionState apply_task_action(SessionState state, const UserAction& action) const = 0;

    virtual void check_survey_level(const SessionState&, SurveyLevel level) const {
        if (level != SurveyLevel::session) throw Error(ErrorCode::illegal_action, "unsupported survey level");
    }

    /// Default survey placement: session-level answers are kept in the hidden
    /// "survey" field.
    virtual SessionState apply_survey(SessionState state, const UserAction& action) const {
        state.hidden["survey"] = action.payload.at("responses");
        return state;
    }

    static const std::string& button(const UserAction& a) {
        static const std::string none;
        return a.target ? *a.target : none;
    }

    static std::string payload_text(const UserAction& a) {
        if (!a.payload.is_string()) throw Error(ErrorCode::illegal_action, "type_text needs a text payload");
        return a.payload.get<std::string>();
    }

    static int payload_index(const UserAction& a) {
        if (!a.payload.is_number_integer()) throw Error(ErrorCode::illegal_action, "select_option needs an index");
        return a.payload.get<int>();
    }

    [[noreturn]] static void reject(const std::string& why) { throw Error(ErrorCode::illegal_action, why); }

private:
    void check_survey(const SessionState& state, const UserAction& action) const {
        if (!surveys_) reject("no survey configured for this task");
        const auto level = submission_level(action);
        check_survey_level(state, level);
        if (level == SurveyLevel::session && state.hidden.contains("survey")) reject("survey already submitted");
        validate_submission(survey_form(state, level), submission_responses(action), survey_turn_count(state));
    }

    const SurveyBank* surveys_;
};

/// First surfaced completion, if any.
inline const Completion* first_surfaced(const CompletionSet& c) {
    for (const auto& x : c.completions) {
        if (!x.filtered) return &x;
    }
    return nullptr;
}

}  // namespace hle
