#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hle {

using Json = nlohmann::json;
using Millis = std::int64_t;

enum class ErrorCode {
    illegal_action,
    empty_input,
    backend_failure,
    rate_limited,
    empty_completion,
    all_filtered,
    missing_acknowledgement,
    incomplete_survey,
    seq_gap,
    io_failure,
    corrupt_header,
    schema_mismatch,
    clock_regression,
    empty_group,
    degenerate_variance,
    singular_design,
    insufficient_data,
    not_found,
    invalid_argument,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::illegal_action: return "IllegalAction";
        case ErrorCode::empty_input: return "EmptyInput";
        case ErrorCode::backend_failure: return "BackendFailure";
        case ErrorCode::rate_limited: return "RateLimited";
        case ErrorCode::empty_completion: return "EmptyCompletion";
        case ErrorCode::all_filtered: return "AllFiltered";
        case ErrorCode::missing_acknowledgement: return "MissingAcknowledgement";
        case ErrorCode::incomplete_survey: return "IncompleteSurvey";
        case ErrorCode::seq_gap: return "SeqGap";
        case ErrorCode::io_failure: return "IOFailure";
        case ErrorCode::corrupt_header: return "CorruptHeader";
        case ErrorCode::schema_mismatch: return "SchemaMismatch";
        case ErrorCode::clock_regression: return "ClockRegression";
        case ErrorCode::empty_group: return "EmptyGroup";
        case ErrorCode::degenerate_variance: return "DegenerateVariance";
        case ErrorCode::singular_design: return "SingularDesign";
        case ErrorCode::insufficient_data: return "InsufficientData";
        case ErrorCode::not_found: return "NotFound";
        case ErrorCode::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

enum class TaskKind { dialogue, qa, crossword, summarization, metaphor };

inline constexpr TaskKind kAllTasks[] = {TaskKind::dialogue, TaskKind::qa, TaskKind::crossword,
                                         TaskKind::summarization, TaskKind::metaphor};

NLOHMANN_JSON_SERIALIZE_ENUM(TaskKind, {
    {TaskKind::dialogue, "dialogue"},
    {TaskKind::qa, "qa"},
    {TaskKind::crossword, "crossword"},
    {TaskKind::summarization, "summarization"},
    {TaskKind::metaphor, "metaphor"},
})

inline std::string to_string(TaskKind k) { return Json(k).get<std::string>(); }

inline TaskKind parse_task_kind(std::string_view s) {
    for (TaskKind k : kAllTasks) {
        if (to_string(k) == s) return k;
    }
    throw Error(ErrorCode::invalid_argument, "unknown task kind '" + std::string(s) + "'");
}

enum class ActionKind { type_text, click_button, select_option, enter_letter, submit_survey, finish, telemetry };

NLOHMANN_JSON_SERIALIZE_ENUM(ActionKind, {
    {ActionKind::type_text, "type_text"},
    {ActionKind::click_button, "click_button"},
    {ActionKind::select_option, "select_option"},
    {ActionKind::enter_letter, "enter_letter"},
    {ActionKind::submit_survey, "submit_survey"},
    {ActionKind::finish, "finish"},
    {ActionKind::telemetry, "telemetry"},
})

/// Full state of one session. Field maps are JSON objects, whose keys nlohmann
/// keeps sorted, so dump() is already a canonical serialization.
struct SessionState {
    std::string session_id;
    TaskKind task_kind = TaskKind::dialogue;
    Json visible = Json::object();
    Json hidden = Json::object();
    std::int64_t step_index = 0;
    Millis clock = 0;

    bool operator==(const SessionState&) const = default;
};

inline void to_json(Json& j, const SessionState& s) {
    j = Json{{"session_id", s.session_id}, {"task_kind", s.task_kind}, {"visible", s.visible},
             {"hidden", s.hidden},         {"step_index", s.step_index}, {"clock", s.clock}};
}

inline void from_json(const Json& j, SessionState& s) {
    j.at("session_id").get_to(s.session_id);
    j.at("task_kind").get_to(s.task_kind);
    s.visible = j.at("visible");
    s.hidden = j.at("hidden");
    j.at("step_index").get_to(s.step_index);
    j.at("clock").get_to(s.clock);
}

/// Letter placed into (or erased from, when letter is empty) a crossword cell.
struct CellEntry {
    int row = 0;
    int col = 0;
    std::string letter;
};

inline void to_json(Json& j, const CellEntry& c) { j = Json{{"row", c.row}, {"col", c.col}, {"letter", c.letter}}; }
inline void from_json(const Json& j, CellEntry& c) {
    j.at("row").get_to(c.row);
    j.at("col").get_to(c.col);
    j.at("letter").get_to(c.letter);
}

struct UserAction {
    ActionKind kind = ActionKind::type_text;
    std::optional<std::string> target;  // field name or button id
    Json payload;                       // null, text, option index, CellEntry, or survey responses
    Millis timestamp = 0;

    static UserAction type_text(std::string field, std::string text, Millis t) {
        return {ActionKind::type_text, std::move(field), Json(std::move(text)), t};
    }
    static UserAction click(std::string button, Millis t) { return {ActionKind::click_button, std::move(button), {}, t}; }
    static UserAction select(std::string target, int option, Millis t) {
        return {ActionKind::select_option, std::move(target), Json(option), t};
    }
    static UserAction letter(int row, int col, std::string letter, Millis t) {
        return {ActionKind::enter_letter, std::nullopt, Json(CellEntry{row, col, std::move(letter)}), t};
    }
    static UserAction survey(Json responses, Millis t) {
        return {ActionKind::submit_survey, std::nullopt, std::move(responses), t};
    }
    static UserAction finish(Millis t) { return {ActionKind::finish, std::nullopt, {}, t}; }
    static UserAction telemetry(std::string event, Millis t) {
        return {ActionKind::telemetry, std::move(event), {}, t};
    }

    bool operator==(const UserAction&) const = default;
};

inline void to_json(Json& j, const UserAction& a) {
    j = Json{{"kind", a.kind}, {"payload", a.payload}, {"timestamp", a.timestamp}};
    j["target"] = a.target ? Json(*a.target) : Json(nullptr);
}

inline void from_json(const Json& j, UserAction& a) {
    j.at("kind").get_to(a.kind);
    a.payload = j.value("payload", Json());
    a.timestamp = j.value("timestamp", Millis{0});
    if (j.contains("target") && !j.at("target").is_null()) {
        a.target = j.at("target").get<std::string>();
    } else {
        a.target.reset();
    }
}

enum class EventKind { state_snapshot, user_action, lm_request, lm_response, survey_response, session_end };

NLOHMANN_JSON_SERIALIZE_ENUM(EventKind, {
    {EventKind::state_snapshot, "state_snapshot"},
    {EventKind::user_action, "user_action"},
    {EventKind::lm_request, "lm_request"},
    {EventKind::lm_response, "lm_response"},
    {EventKind::survey_response, "survey_response"},
    {EventKind::session_end, "session_end"},
})

struct TraceEvent {
    std::int64_t seq = 0;
    EventKind variant = EventKind::user_action;
    Json body;
    Millis timestamp = 0;

    bool operator==(const TraceEvent&) const = default;
};

inline void to_json(Json& j, const TraceEvent& e) {
    j = Json{{"seq", e.seq}, {"variant", e.variant}, {"body", e.body}, {"timestamp", e.timestamp}};
}

inline void from_json(const Json& j, TraceEvent& e) {
    j.at("seq").get_to(e.seq);
    j.at("variant").get_to(e.variant);
    e.body = j.at("body");
    j.at("timestamp").get_to(e.timestamp);
}

struct InteractionTrace {
    std::string session_id;
    TaskKind task_kind = TaskKind::dialogue;
    std::string model_id;
    std::string user_id;
    Millis created_at = 0;
    std::vector<TraceEvent> events;

    std::vector<Json> surveys() const {
        std::vector<Json> out;
        for (const auto& e : events) {
            if (e.variant == EventKind::survey_response) out.push_back(e.body);
        }
        return out;
    }

    std::size_t count(EventKind k) const {
        std::size_t n = 0;
        for (const auto& e : events) n += e.variant == k ? 1 : 0;
        return n;
    }

    bool operator==(const InteractionTrace&) const = default;
};

/// Canonical byte serialization used for hashing and file records.
inline std::string canonical(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::strict); }

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

inline std::string state_hash(const SessionState& s) { return hex64(fnv1a64(canonical(Json(s)))); }

}  // namespace hle
