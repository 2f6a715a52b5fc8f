#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hle/core/types.hpp"
#include "hle/metrics/text_metrics.hpp"
#include "hle/survey/survey.hpp"

namespace hle {

inline SessionState first_state(const InteractionTrace& t) {
    for (const auto& e : t.events) {
        if (e.variant == EventKind::state_snapshot) return e.body.at("state").get<SessionState>();
    }
    throw Error(ErrorCode::invalid_argument, t.session_id + ": trace has no snapshot");
}

inline SessionState final_state(const InteractionTrace& t) {
    for (auto it = t.events.rbegin(); it != t.events.rend(); ++it) {
        if (it->variant == EventKind::state_snapshot) return it->body.at("state").get<SessionState>();
    }
    throw Error(ErrorCode::invalid_argument, t.session_id + ": trace has no snapshot");
}

/// Accepted user actions in trace order.
inline std::vector<UserAction> accepted_actions(const InteractionTrace& t) {
    std::vector<UserAction> out;
    for (const auto& e : t.events) {
        if (e.variant == EventKind::user_action && e.body.value("accepted", false)) {
            out.push_back(e.body.at("action").get<UserAction>());
        }
    }
    return out;
}

inline std::vector<const TraceEvent*> lm_requests(const InteractionTrace& t) {
    std::vector<const TraceEvent*> out;
    for (const auto& e : t.events) {
        if (e.variant == EventKind::lm_request) out.push_back(&e);
    }
    return out;
}

/// Number of lm_request events stamped with each unit (serialized unit value).
inline std::map<std::string, int> queries_by_unit(const InteractionTrace& t) {
    std::map<std::string, int> out;
    for (const auto* e : lm_requests(t)) ++out[e->body.value("unit", Json()).dump()];
    return out;
}

enum class QueryUnit { question, puzzle, sentence, dialogue };

/// Average number of queries per unit. Questions exclude the attention
/// check; sentences are the submitted ones. Undefined with zero units.
inline std::optional<double> count_queries(const InteractionTrace& t, QueryUnit unit) {
    const double queries = static_cast<double>(lm_requests(t).size());
    const SessionState s = final_state(t);
    double units = 1.0;
    switch (unit) {
        case QueryUnit::question: {
            units = 0;
            for (const auto& a : s.hidden.at("answers")) units += a.value("attention_check", false) ? 0 : 1;
            break;
        }
        case QueryUnit::sentence: units = static_cast<double>(s.visible.at("sentences").size()); break;
        case QueryUnit::puzzle:
        case QueryUnit::dialogue: break;
    }
    if (units <= 0) return std::nullopt;
    return queries / units;
}

enum class TimeUnit { question, sentence, session };

/// Mean minutes per unit. Questions run from display to submit; sentences
/// from the previous submission (or session start) to their own submit.
inline std::optional<double> elapsed_time(const InteractionTrace& t, TimeUnit unit) {
    constexpr double kMsPerMinute = 60000.0;
    const SessionState s = final_state(t);
    std::vector<double> spans;
    switch (unit) {
        case TimeUnit::question:
            for (const auto& a : s.hidden.at("answers")) {
                if (a.value("attention_check", false)) continue;
                spans.push_back(static_cast<double>(a.at("submitted_at").get<Millis>() - a.at("shown_at").get<Millis>()));
            }
            break;
        case TimeUnit::sentence: {
            Millis prev = s.visible.at("started_at").get<Millis>();
            for (const auto& x : s.hidden.at("sentence_log")) {
                const Millis at = x.at("submitted_at").get<Millis>();
                spans.push_back(static_cast<double>(at - prev));
                prev = at;
            }
            break;
        }
        case TimeUnit::session: spans.push_back(static_cast<double>(s.clock - first_state(t).clock)); break;
    }
    if (spans.empty()) return std::nullopt;
    double sum = 0;
    for (double v : spans) {
        if (v < 0) throw Error(ErrorCode::clock_regression, t.session_id + ": negative unit duration");
        sum += v;
    }
    return sum / static_cast<double>(spans.size()) / kMsPerMinute;
}

struct QaAccuracy {
    std::optional<double> assisted;
    std::optional<double> unassisted;
    std::optional<double> overall;
    bool attention_answered = false;
    bool attention_passed = false;
};

/// Percent correct over non-attention questions, split by assistance.
inline QaAccuracy qa_accuracy(const InteractionTrace& t) {
    const SessionState s = final_state(t);
    QaAccuracy r;
    int n[2] = {0, 0}, c[2] = {0, 0};
    for (const auto& a : s.hidden.at("answers")) {
        const bool correct = a.at("correct").get<bool>();
        if (a.value("attention_check", false)) {
            r.attention_answered = true;
            r.attention_passed = correct;
            continue;
        }
        const int i = a.at("assisted").get<bool>() ? 1 : 0;
        ++n[i];
        c[i] += correct ? 1 : 0;
    }
    const auto pct = [](int hit, int total) -> std::optional<double> {
        if (total == 0) return std::nullopt;
        return 100.0 * hit / total;
    };
    r.assisted = pct(c[1], n[1]);
    r.unassisted = pct(c[0], n[0]);
    r.overall = pct(c[0] + c[1], n[0] + n[1]);
    return r;
}

struct CrosswordAccuracy {
    double letter = 0.0;
    double clue = 0.0;
};

/// Letter accuracy over open cells and clue accuracy over clues whose every
/// cell is right; empty cells count as wrong. Comparison ignores case.
inline CrosswordAccuracy crossword_accuracy(const std::vector<std::string>& grid,
                                            const std::vector<std::string>& solution, const Json& clues) {
    const auto same = [](char a, char b) { return std::toupper(static_cast<unsigned char>(a)) == std::toupper(static_cast<unsigned char>(b)); };
    int slots = 0, right = 0;
    for (std::size_t r = 0; r < solution.size(); ++r) {
        for (std::size_t c = 0; c < solution[r].size(); ++c) {
            if (solution[r][c] == '#') continue;
            ++slots;
            right += same(grid[r][c], solution[r][c]) ? 1 : 0;
        }
    }
    int solved = 0;
    for (const auto& clue : clues) {
        const bool down = clue.at("direction") == "down";
        const int len = clue.at("length").get<int>();
        bool ok = true;
        for (int i = 0; i < len && ok; ++i) {
            const auto r = static_cast<std::size_t>(clue.at("row").get<int>() + (down ? i : 0));
            const auto c = static_cast<std::size_t>(clue.at("col").get<int>() + (down ? 0 : i));
            ok = same(grid[r][c], solution[r][c]);
        }
        solved += ok ? 1 : 0;
    }
    CrosswordAccuracy out;
    out.letter = slots ? 100.0 * right / slots : 0.0;
    out.clue = clues.empty() ? 0.0 : 100.0 * solved / static_cast<double>(clues.size());
    return out;
}

inline CrosswordAccuracy crossword_accuracy(const InteractionTrace& t) {
    const SessionState s = final_state(t);
    return crossword_accuracy(s.visible.at("grid").get<std::vector<std::string>>(),
                              s.hidden.at("solution").get<std::vector<std::string>>(), s.visible.at("clues"));
}

struct AcceptanceCount {
    int accepted = 0;
    int dismissed = 0;
};

/// Walks the event log: a query whose response showed at least one
/// suggestion is resolved by the next selection (accepted) or dismissal.
/// Queries superseded by another query or a submit stay unresolved.
inline AcceptanceCount acceptance_counts(const InteractionTrace& t) {
    AcceptanceCount n;
    bool pending = false;
    for (const auto& e : t.events) {
        if (e.variant == EventKind::lm_response && !e.body.contains("error")) {
            pending = false;
            for (const auto& c : e.body.at("completions")) pending = pending || !c.value("filtered", false);
        }
        if (e.variant != EventKind::user_action || !e.body.value("accepted", false)) continue;
        const auto a = e.body.at("action").get<UserAction>();
        const std::string target = a.target.value_or("");
        if (a.kind == ActionKind::select_option && target == "suggestion") {
            n.accepted += pending ? 1 : 0;
            pending = false;
        } else if (a.kind == ActionKind::click_button && target == "dismiss") {
            n.dismissed += pending ? 1 : 0;
            pending = false;
        } else if (a.kind == ActionKind::click_button && target == "submit") {
            pending = false;
        }
    }
    return n;
}

inline std::optional<double> acceptance_rate(const InteractionTrace& t) {
    const auto n = acceptance_counts(t);
    if (n.accepted + n.dismissed == 0) return std::nullopt;
    return 100.0 * n.accepted / (n.accepted + n.dismissed);
}

/// Mean word edit distance between a chosen suggestion and the sentence
/// finally submitted from it.
inline std::optional<double> metaphor_edit(const InteractionTrace& t) {
    const SessionState s = final_state(t);
    double sum = 0;
    int n = 0;
    for (const auto& x : s.hidden.at("sentence_log")) {
        if (x.at("from_suggestion").is_null()) continue;
        sum += static_cast<double>(
            word_edit_distance(x.at("from_suggestion").get<std::string>(), x.at("text").get<std::string>()));
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

struct SummaryEdits {
    std::vector<double> edit_distance;  // per summary index
    std::vector<double> density_original;
    std::vector<double> density_edited;
};

inline SummaryEdits summary_edits(const InteractionTrace& t) {
    SummaryEdits out;
    const SessionState s = final_state(t);
    for (const auto& h : s.hidden.at("history")) {
        const auto doc = h.at("document").get<std::string>();
        const auto model = h.at("model_summary").get<std::string>();
        const auto edited = h.at("edited_summary").get<std::string>();
        out.edit_distance.push_back(static_cast<double>(word_edit_distance(model, edited)));
        out.density_original.push_back(density(model, doc));
        out.density_edited.push_back(density(edited, doc));
    }
    return out;
}

/// Prompt categories in query order, each with its series index: the rank
/// of the question among assisted questions (QA) or the query ordinal
/// (crossword).
inline std::vector<std::pair<int, PromptCategory>> prompt_styles(const InteractionTrace& t) {
    std::vector<std::pair<int, PromptCategory>> out;
    const SessionState s = final_state(t);
    const auto requests = lm_requests(t);
    if (t.task_kind == TaskKind::qa) {
        const auto& quiz = s.hidden.at("quiz");
        std::map<int, int> rank;
        for (std::size_t i = 0; i < quiz.size(); ++i) {
            if (quiz[i].value("assisted", false)) rank.emplace(static_cast<int>(i), static_cast<int>(rank.size()));
        }
        for (const auto* e : requests) {
            const int q = e->body.at("unit").get<int>();
            const auto& item = quiz.at(static_cast<std::size_t>(q));
            const auto cat = classify_prompt(e->body.at("prompt").get<std::string>(), item.at("text").get<std::string>(),
                                             item.at("choices").get<std::vector<std::string>>(), TaskKind::qa);
            out.emplace_back(rank.count(q) ? rank[q] : q, cat);
        }
    } else if (t.task_kind == TaskKind::crossword) {
        std::map<std::string, std::string> clue_text;
        for (const auto& c : s.visible.at("clues")) clue_text[c.at("id").get<std::string>()] = c.at("text").get<std::string>();
        int ordinal = 0;
        for (const auto* e : requests) {
            const auto& unit = e->body.at("unit");
            const std::string question = unit.is_string() && clue_text.count(unit.get<std::string>())
                                             ? clue_text[unit.get<std::string>()]
                                             : std::string{};
            out.emplace_back(ordinal++, classify_prompt(e->body.at("prompt").get<std::string>(), question, {},
                                                        TaskKind::crossword));
        }
    }
    return out;
}

/// Queries per assisted question, indexed by the question's rank among
/// assisted questions.
inline std::vector<double> qa_queries_by_question(const InteractionTrace& t) {
    const SessionState s = final_state(t);
    const auto by_unit = queries_by_unit(t);
    std::vector<double> out;
    const auto& quiz = s.hidden.at("quiz");
    for (std::size_t i = 0; i < quiz.size(); ++i) {
        if (!quiz[i].value("assisted", false)) continue;
        const auto it = by_unit.find(Json(static_cast<int>(i)).dump());
        out.push_back(it == by_unit.end() ? 0.0 : it->second);
    }
    return out;
}

}  // namespace hle
