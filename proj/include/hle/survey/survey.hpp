#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hle/core/types.hpp"

namespace hle {

enum class SurveyLevel { turn, summary, sentence, session };
enum class SurveyScale { binary_turn_marking, likert5, free_form };
enum class Perspective { first_person, third_party };

NLOHMANN_JSON_SERIALIZE_ENUM(SurveyLevel, {
    {SurveyLevel::turn, "turn"},
    {SurveyLevel::summary, "summary"},
    {SurveyLevel::sentence, "sentence"},
    {SurveyLevel::session, "session"},
})
NLOHMANN_JSON_SERIALIZE_ENUM(SurveyScale, {
    {SurveyScale::binary_turn_marking, "binary_turn_marking"},
    {SurveyScale::likert5, "likert5"},
    {SurveyScale::free_form, "free_form"},
})
NLOHMANN_JSON_SERIALIZE_ENUM(Perspective, {
    {Perspective::first_person, "first_person"},
    {Perspective::third_party, "third_party"},
})

struct SurveyItem {
    std::string item_id;
    TaskKind task_kind = TaskKind::dialogue;
    SurveyLevel level = SurveyLevel::session;
    SurveyScale scale = SurveyScale::likert5;
    bool negated = false;
    std::string metric_name;  // empty for items that feed no metric (free-form)
    std::string text;
    bool required = true;
    std::string dataset;  // non-empty: item applies only to sessions drawn from this dataset
    Perspective perspective = Perspective::first_person;
};

inline void from_json(const Json& j, SurveyItem& it) {
    j.at("item_id").get_to(it.item_id);
    j.at("task_kind").get_to(it.task_kind);
    j.at("level").get_to(it.level);
    j.at("scale").get_to(it.scale);
    it.negated = j.value("negated", false);
    it.metric_name = j.value("metric_name", std::string{});
    it.text = j.value("text", std::string{});
    it.required = j.value("required", true);
    it.dataset = j.value("dataset", std::string{});
    it.perspective = j.value("perspective", Perspective::first_person);
    if (it.scale == SurveyScale::binary_turn_marking && it.level != SurveyLevel::turn) {
        throw Error(ErrorCode::invalid_argument, "binary item " + it.item_id + " must be turn-level");
    }
}

inline void to_json(Json& j, const SurveyItem& it) {
    j = Json{{"item_id", it.item_id},   {"task_kind", it.task_kind},     {"level", it.level},
             {"scale", it.scale},       {"negated", it.negated},         {"metric_name", it.metric_name},
             {"text", it.text},         {"required", it.required},       {"dataset", it.dataset},
             {"perspective", it.perspective}};
}

struct SurveyResponse {
    std::string item_id;
    std::vector<int> marked_turns;
    bool none_acknowledged = false;
    std::optional<int> likert;
    std::optional<std::string> text;
};

inline void from_json(const Json& j, SurveyResponse& r) {
    j.at("item_id").get_to(r.item_id);
    r.marked_turns = j.value("marked_turns", std::vector<int>{});
    r.none_acknowledged = j.value("none_acknowledged", false);
    if (j.contains("likert") && !j.at("likert").is_null()) r.likert = j.at("likert").get<int>();
    if (j.contains("text") && !j.at("text").is_null()) r.text = j.at("text").get<std::string>();
}

inline void to_json(Json& j, const SurveyResponse& r) {
    j = Json{{"item_id", r.item_id}};
    if (!r.marked_turns.empty() || r.none_acknowledged) {
        j["marked_turns"] = r.marked_turns;
        j["none_acknowledged"] = r.none_acknowledged;
    }
    if (r.likert) j["likert"] = *r.likert;
    if (r.text) j["text"] = *r.text;
}

/// Survey instruments for all tasks, keyed by item id.
class SurveyBank {
public:
    SurveyBank() = default;
    explicit SurveyBank(std::vector<SurveyItem> items) : items_(std::move(items)) {}

    static SurveyBank load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::io_failure, "cannot open survey bank " + path);
        return SurveyBank(Json::parse(in).at("items").get<std::vector<SurveyItem>>());
    }

    const std::vector<SurveyItem>& items() const { return items_; }

    const SurveyItem* find(std::string_view id) const {
        for (const auto& it : items_) {
            if (it.item_id == id) return &it;
        }
        return nullptr;
    }

    /// Items a participant answers for `task` at `level`; turn-level items are
    /// part of the session-end form.
    std::vector<SurveyItem> form(TaskKind task, SurveyLevel level, std::string_view dataset = {},
                                 Perspective perspective = Perspective::first_person) const {
        std::vector<SurveyItem> out;
        for (const auto& it : items_) {
            if (it.task_kind != task || it.perspective != perspective) continue;
            const bool at_level = level == SurveyLevel::session
                                      ? (it.level == SurveyLevel::session || it.level == SurveyLevel::turn)
                                      : it.level == level;
            if (!at_level) continue;
            if (!it.dataset.empty() && it.dataset != dataset) continue;
            out.push_back(it);
        }
        return out;
    }

private:
    std::vector<SurveyItem> items_;
};

/// Per-unit scores for one answered item.
struct ItemScore {
    std::vector<double> per_unit;  // binary items: one 0/1 score per turn
    std::optional<double> likert;
    std::optional<std::string> text;
};

inline void validate_response(const SurveyItem& item, const SurveyResponse& r, int turn_count) {
    switch (item.scale) {
        case SurveyScale::binary_turn_marking:
            if (r.marked_turns.empty() && !r.none_acknowledged) {
                throw Error(ErrorCode::missing_acknowledgement,
                            item.item_id + ": mark at least one turn or acknowledge none");
            }
            for (int t : r.marked_turns) {
                if (t < 0 || t >= turn_count) {
                    throw Error(ErrorCode::invalid_argument,
                                item.item_id + ": marked turn " + std::to_string(t) + " out of range");
                }
            }
            break;
        case SurveyScale::likert5:
            if (!r.likert || *r.likert < 1 || *r.likert > 5) {
                throw Error(ErrorCode::invalid_argument, item.item_id + ": likert value must be in 1..5");
            }
            break;
        case SurveyScale::free_form:
            break;
    }
}

/// Binary items: a marked turn scores 1 (0 when the question is negated),
/// unmarked turns the opposite. Likert passes through; free-form is kept.
inline ItemScore score_item(const SurveyItem& item, const SurveyResponse& response, int turn_count) {
    validate_response(item, response, turn_count);
    ItemScore s;
    switch (item.scale) {
        case SurveyScale::binary_turn_marking: {
            const std::set<int> marked(response.marked_turns.begin(), response.marked_turns.end());
            for (int t = 0; t < turn_count; ++t) {
                const bool is_marked = marked.count(t) > 0;
                s.per_unit.push_back(is_marked != item.negated ? 1.0 : 0.0);
            }
            break;
        }
        case SurveyScale::likert5: s.likert = static_cast<double>(*response.likert); break;
        case SurveyScale::free_form: s.text = response.text.value_or(""); break;
    }
    return s;
}

/// Checks a submitted form: every response answers a known item of the form
/// and every required item is answered. Lists all missing items at once.
inline void validate_submission(const std::vector<SurveyItem>& form, const std::vector<SurveyResponse>& responses,
                                int turn_count) {
    std::set<std::string> answered;
    for (const auto& r : responses) {
        auto it = std::find_if(form.begin(), form.end(), [&](const SurveyItem& i) { return i.item_id == r.item_id; });
        if (it == form.end()) throw Error(ErrorCode::invalid_argument, "item " + r.item_id + " not in this form");
        if (!answered.insert(r.item_id).second) {
            throw Error(ErrorCode::invalid_argument, "item " + r.item_id + " answered twice");
        }
        validate_response(*it, r, turn_count);
    }
    std::string missing;
    for (const auto& item : form) {
        if (item.required && !answered.count(item.item_id)) missing += (missing.empty() ? "" : ", ") + item.item_id;
    }
    if (!missing.empty()) throw Error(ErrorCode::incomplete_survey, "missing items: " + missing);
}

/// Folds the survey responses recorded in a trace into metric values:
/// turn-level binaries become 0-100 rates, likert values stay on 1-5, and
/// summary-level ratings are averaged across summaries.
inline std::map<std::string, double> aggregate_trace(const InteractionTrace& trace, const SurveyBank& bank) {
    std::map<std::string, double> out;
    std::map<std::string, std::pair<double, int>> summary_sums;
    bool saw_session_form = false;
    std::string dataset;
    std::set<std::string> answered;

    for (const auto& body : trace.surveys()) {
        const auto level = body.at("level").get<SurveyLevel>();
        const int units = body.value("unit_count", 0);
        if (level == SurveyLevel::session) {
            saw_session_form = true;
            dataset = body.value("dataset", std::string{});
        }
        for (const auto& rj : body.at("responses")) {
            const auto r = rj.get<SurveyResponse>();
            const SurveyItem* item = bank.find(r.item_id);
            if (!item) throw Error(ErrorCode::invalid_argument, "unknown survey item " + r.item_id);
            answered.insert(item->item_id);
            if (item->metric_name.empty() || item->scale == SurveyScale::free_form) continue;
            const ItemScore s = score_item(*item, r, units);
            if (item->scale == SurveyScale::binary_turn_marking) {
                double sum = 0;
                for (double v : s.per_unit) sum += v;
                out[item->metric_name] = s.per_unit.empty() ? 0.0 : 100.0 * sum / static_cast<double>(s.per_unit.size());
            } else if (level == SurveyLevel::summary) {
                auto& acc = summary_sums[item->metric_name];
                acc.first += *s.likert;
                acc.second += 1;
            } else {
                out[item->metric_name] = *s.likert;
            }
        }
    }
    for (const auto& [name, acc] : summary_sums) out[name] = acc.first / acc.second;

    std::string missing;
    for (const auto& item : bank.form(trace.task_kind, SurveyLevel::session, dataset)) {
        if (item.required && !answered.count(item.item_id)) missing += (missing.empty() ? "" : ", ") + item.item_id;
    }
    if (!saw_session_form || !missing.empty()) {
        throw Error(ErrorCode::incomplete_survey,
                    trace.session_id + ": " + (saw_session_form ? "missing items: " + missing : "no session survey"));
    }
    return out;
}

}  // namespace hle
