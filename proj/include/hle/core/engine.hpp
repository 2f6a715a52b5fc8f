#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hle/core/text.hpp"
#include "hle/core/types.hpp"
#include "hle/lm/gateway.hpp"
#include "hle/tasks/adapter.hpp"

namespace hle {

struct StepResult {
    SessionState state;
    std::vector<TraceEvent> events;
    std::optional<Error> error;
    bool finished = false;
};

inline Json error_body(const Error& e) { return Json{{"code", to_string(e.code())}, {"message", e.what()}}; }

inline bool is_task_action(ActionKind k) {
    return k != ActionKind::submit_survey && k != ActionKind::finish && k != ActionKind::telemetry;
}

/// Timer or solve condition at time `now`.
inline std::optional<std::string> terminal_reason(const SessionState& s, const TaskAdapter& adapter, Millis now) {
    if (auto r = adapter.completion_reason(s)) return r;
    return adapter.timer_reason(s, now);
}

inline bool is_terminal(const SessionState& s, const UserAction& a, const TaskAdapter& adapter) {
    if (a.kind == ActionKind::finish && adapter.finish_allowed(s)) return true;
    return terminal_reason(s, adapter, a.timestamp).has_value();
}

/// Flags attached to an lm_response so filtered or blank outputs are visible
/// in the trace.
inline Json completion_flags(const CompletionSet& c) {
    Json flags = Json::array();
    const auto shown = c.surfaced();
    if (!c.completions.empty() && shown.empty()) flags.push_back("all_filtered");
    if (c.completions.empty() || (!shown.empty() && text::trim(shown.front()->text).empty())) {
        flags.push_back("empty_completion");
    }
    return flags;
}

/// One transition. Events are numbered from `seq`. The input state is never
/// modified; rejected actions and LM failures return it unchanged.
inline StepResult step(const SessionState& state, const UserAction& action, const TaskAdapter& adapter, LmGateway& lm,
                       std::int64_t seq) {
    StepResult r{state, {}, std::nullopt, false};
    const auto emit = [&](EventKind kind, Json body) {
        r.events.push_back(TraceEvent{seq + static_cast<std::int64_t>(r.events.size()), kind, std::move(body),
                                      std::max(action.timestamp, state.clock)});
    };
    Json record{{"action", action}, {"step_index", state.step_index}, {"accepted", true}};
    const auto reject = [&](const Error& e) {
        record["accepted"] = false;
        record["error"] = error_body(e);
        emit(EventKind::user_action, record);
        r.error = e;
        return r;
    };

    try {
        if (action.timestamp < state.clock) {
            throw Error(ErrorCode::clock_regression, "action timestamp precedes the session clock");
        }
        if (is_task_action(action.kind)) {
            if (auto t = adapter.timer_reason(state, action.timestamp)) {
                throw Error(ErrorCode::illegal_action, "session ended (" + *t + ")");
            }
        }
        adapter.validate(state, action);
    } catch (const Error& e) {
        return reject(e);
    }

    emit(EventKind::user_action, record);
    if (action.kind == ActionKind::finish) {
        r.finished = true;
        return r;
    }

    SessionState next = adapter.apply(state, action);
    next.step_index = state.step_index + 1;
    next.clock = action.timestamp;

    if (action.kind == ActionKind::submit_survey) {
        const auto level = TaskAdapter::submission_level(action);
        Json body{{"level", level},
                  {"responses", action.payload.at("responses")},
                  {"unit_count", adapter.survey_turn_count(state)},
                  {"dataset", adapter.survey_dataset(state)}};
        const auto unit = adapter.survey_unit_index(state, level);
        body["unit_index"] = unit ? Json(*unit) : Json(nullptr);
        emit(EventKind::survey_response, std::move(body));
    } else if (adapter.requires_lm(state, action)) {
        Prompt prompt = adapter.create_prompt(next);
        prompt.request_id = state.session_id + "/" + std::to_string(seq + 1);
        const auto params = adapter.decoding_params();
        emit(EventKind::lm_request, Json{{"request_id", prompt.request_id},
                                         {"prompt", prompt.text},
                                         {"params", params},
                                         {"model_id", lm.model_id()},
                                         {"unit", adapter.query_unit(state)}});
        CompletionSet completions;
        try {
            completions = lm.query(prompt, params);
        } catch (const Error& e) {
            emit(EventKind::lm_response, Json{{"request_id", prompt.request_id},
                                              {"completions", Json::array()},
                                              {"latency_ms", 0},
                                              {"flags", Json::array()},
                                              {"error", error_body(e)}});
            r.error = e;
            return r;
        }
        completions.request_id = prompt.request_id;
        Json body = completions;
        body["flags"] = completion_flags(completions);
        emit(EventKind::lm_response, std::move(body));
        next = adapter.show_completions(std::move(next), completions);
    }
    r.state = std::move(next);
    return r;
}

/// Supplies the next user action given the current state and the error from
/// the previous step, or nullopt when the user walks away.
using ActionSource = std::function<std::optional<UserAction>(const SessionState&, const std::optional<Error>&)>;

inline ActionSource scripted_actions(std::vector<UserAction> actions) {
    auto pos = std::make_shared<std::size_t>(0);
    auto list = std::make_shared<std::vector<UserAction>>(std::move(actions));
    return [pos, list](const SessionState&, const std::optional<Error>&) -> std::optional<UserAction> {
        if (*pos >= list->size()) return std::nullopt;
        return (*list)[(*pos)++];
    };
}

struct SessionMeta {
    std::string model_id;
    std::string user_id;
    Millis created_at = 0;
};

struct RunOptions {
    int snapshot_every = 20;
    int max_steps = 5000;
};

inline Json snapshot_body(const SessionState& s) {
    return Json{{"hash", state_hash(s)}, {"state", s}};
}

/// Algorithm 1 driver: snapshot, then step until a finish, the terminal rule
/// with the session survey in, or the action source running dry. Every
/// emitted event also goes to `sink` (e.g. a trace file) as it happens.
inline InteractionTrace run_session(const SessionState& initial, const ActionSource& source,
                                    const TaskAdapter& adapter, LmGateway& lm, const SessionMeta& meta,
                                    const std::function<void(const TraceEvent&)>& sink = nullptr,
                                    const RunOptions& options = {}) {
    InteractionTrace trace{initial.session_id, initial.task_kind, meta.model_id, meta.user_id, meta.created_at, {}};
    const auto push = [&](TraceEvent e) {
        if (sink) sink(e);
        trace.events.push_back(std::move(e));
    };
    const auto next_seq = [&] { return static_cast<std::int64_t>(trace.events.size()); };

    SessionState state = initial;
    push(TraceEvent{0, EventKind::state_snapshot, snapshot_body(state), state.clock});
    std::int64_t last_snapshot = 0;
    std::optional<Error> last_error;
    std::string reason = "step_limit";

    for (int n = 0; n < options.max_steps; ++n) {
        if (auto t = terminal_reason(state, adapter, state.clock)) {
            if (!adapter.surveys() || state.hidden.contains("survey")) {
                reason = *t;
                break;
            }
        }
        const auto action = source(state, last_error);
        if (!action) {
            reason = "actions_exhausted";
            break;
        }
        auto r = step(state, *action, adapter, lm, next_seq());
        for (auto& e : r.events) push(std::move(e));
        last_error = r.error;
        state = std::move(r.state);
        if (r.finished) {
            reason = "finish";
            break;
        }
        if (next_seq() - last_snapshot >= options.snapshot_every) {
            last_snapshot = next_seq();
            push(TraceEvent{next_seq(), EventKind::state_snapshot, snapshot_body(state), state.clock});
        }
    }
    if (trace.events.back().variant != EventKind::state_snapshot) {
        push(TraceEvent{next_seq(), EventKind::state_snapshot, snapshot_body(state), state.clock});
    }
    push(TraceEvent{next_seq(), EventKind::session_end,
                    Json{{"reason", reason}, {"step_index", state.step_index}, {"hash", state_hash(state)}},
                    state.clock});
    return trace;
}

/// Serves recorded lm_response events by request id so a trace can be
/// refolded without a live model.
class ReplayGateway final : public LmGateway {
public:
    explicit ReplayGateway(const InteractionTrace& trace) : model_id_(trace.model_id) {
        for (const auto& e : trace.events) {
            if (e.variant == EventKind::lm_response) responses_[e.body.at("request_id").get<std::string>()] = e.body;
        }
    }

    std::string model_id() const override { return model_id_; }

    CompletionSet query(const Prompt& prompt, const DecodingParams&) override {
        const auto it = responses_.find(prompt.request_id);
        if (it == responses_.end()) {
            throw Error(ErrorCode::backend_failure, "no recorded response for " + prompt.request_id);
        }
        if (it->second.contains("error")) {
            const auto code = it->second["error"].value("code", std::string{});
            auto message = it->second["error"].value("message", std::string{});
            if (text::starts_with(message, code + ": ")) message.erase(0, code.size() + 2);
            throw Error(code == "RateLimited" ? ErrorCode::rate_limited : ErrorCode::backend_failure, message);
        }
        return it->second.get<CompletionSet>();
    }

private:
    std::string model_id_;
    std::map<std::string, Json> responses_;
};

}  // namespace hle
