#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "hle/core/text.hpp"
#include "hle/tasks/adapter.hpp"
#include "hle/tasks/banks.hpp"

namespace hle {

inline constexpr Millis kCrosswordSessionMs = 30LL * 60 * 1000;

/// Solution grid derived from the clues; '#' for black cells. Throws when two
/// crossing answers disagree or an answer leaves the grid.
inline std::vector<std::string> solve_grid(const Puzzle& p) {
    std::vector<std::string> sol = p.mask;
    for (auto& row : sol) {
        for (auto& c : row) c = c == '#' ? '#' : '.';
    }
    for (const auto& clue : p.clues) {
        for (std::size_t i = 0; i < clue.answer.size(); ++i) {
            const int r = clue.row + (clue.direction == Direction::down ? static_cast<int>(i) : 0);
            const int c = clue.col + (clue.direction == Direction::across ? static_cast<int>(i) : 0);
            if (r < 0 || r >= static_cast<int>(sol.size()) || c < 0 || c >= static_cast<int>(sol[r].size()) ||
                sol[r][c] == '#') {
                throw Error(ErrorCode::invalid_argument, "clue " + clue.id + " leaves the open grid");
            }
            const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(clue.answer[i])));
            if (sol[r][c] != '.' && sol[r][c] != letter) {
                throw Error(ErrorCode::invalid_argument, "clue " + clue.id + " conflicts with a crossing answer");
            }
            sol[r][c] = letter;
        }
    }
    return sol;
}

/// Cells (row, col) covered by a clue.
inline std::vector<std::pair<int, int>> clue_cells(const Json& clue) {
    std::vector<std::pair<int, int>> cells;
    const int len = clue.at("length").get<int>();
    const bool down = clue.at("direction") == "down";
    for (int i = 0; i < len; ++i) {
        cells.emplace_back(clue.at("row").get<int>() + (down ? i : 0), clue.at("col").get<int>() + (down ? 0 : i));
    }
    return cells;
}

struct CrosswordConfig {
    double temperature = 0.5;
    int max_tokens = 100;
    Millis session_ms = kCrosswordSessionMs;
};

/// Grid letters live in visible["grid"] as strings: '#' black, '.' empty,
/// otherwise the uppercase letter the user entered.
class CrosswordAdapter final : public TaskAdapter {
public:
    explicit CrosswordAdapter(const SurveyBank* surveys = nullptr, CrosswordConfig config = {})
        : TaskAdapter(surveys), config_(config) {}

    TaskKind kind() const override { return TaskKind::crossword; }

    std::vector<std::string> visible_schema() const override {
        return {"chat_history", "clues", "grid", "selected_cell", "selected_clue", "started_at", "user_input"};
    }

    SessionState initial_state(std::string session_id, const Puzzle& puzzle, Millis start) const {
        const auto solution = solve_grid(puzzle);
        SessionState s;
        s.session_id = std::move(session_id);
        s.task_kind = kind();
        s.clock = start;
        std::vector<std::string> grid = solution;
        for (auto& row : grid) {
            for (auto& c : row) c = c == '#' ? '#' : '.';
        }
        Json clues = Json::array();
        Json categories = Json::object();
        for (const auto& c : puzzle.clues) {
            clues.push_back(Json{{"id", c.id},
                                 {"direction", c.direction},
                                 {"row", c.row},
                                 {"col", c.col},
                                 {"length", static_cast<int>(c.answer.size())},
                                 {"text", c.text}});
            categories[c.id] = c.category;
        }
        s.visible["grid"] = grid;
        s.visible["clues"] = clues;
        s.visible["selected_clue"] = nullptr;
        s.visible["selected_cell"] = nullptr;
        s.visible["chat_history"] = Json::array();
        s.visible["user_input"] = "";
        s.visible["started_at"] = start;
        s.hidden["puzzle_id"] = puzzle.id;
        s.hidden["solution"] = solution;
        s.hidden["categories"] = categories;
        return s;
    }

    bool requires_lm(const SessionState&, const UserAction& a) const override {
        return a.kind == ActionKind::click_button && button(a) == "enter";
    }

    /// Only the newest player message, with no further context.
    Prompt create_prompt(const SessionState& s) const override {
        const auto& chat = s.visible.at("chat_history");
        for (auto it = chat.rbegin(); it != chat.rend(); ++it) {
            if (it->at("speaker") == "You") return {it->at("text").get<std::string>(), {}};
        }
        return {std::string{}, {}};
    }

    DecodingParams decoding_params() const override {
        DecodingParams p;
        p.temperature = config_.temperature;
        p.max_tokens = config_.max_tokens;
        return p;
    }

    SessionState show_completions(SessionState s, const CompletionSet& c) const override {
        const Completion* first = first_surfaced(c);
        Json msg{{"speaker", "AI"}, {"text", first ? first->text : std::string(kFilteredPlaceholder)}};
        if (!first) msg["filtered"] = true;
        s.visible["chat_history"].push_back(std::move(msg));
        return s;
    }

    std::optional<std::string> completion_reason(const SessionState& s) const override {
        if (s.visible.at("grid") == s.hidden.at("solution")) return "solved";
        return std::nullopt;
    }

    std::optional<std::string> timer_reason(const SessionState& s, Millis now) const override {
        if (now - s.visible.at("started_at").get<Millis>() >= config_.session_ms) return "timer";
        return std::nullopt;
    }

    Json query_unit(const SessionState& s) const override {
        return s.visible.at("selected_clue").is_null() ? Json("puzzle") : s.visible.at("selected_clue");
    }

protected:
    void validate_task_action(const SessionState& s, const UserAction& a) const override {
        switch (a.kind) {
            case ActionKind::type_text:
                if (button(a) != "user_input") reject("crossword only accepts typing into user_input");
                payload_text(a);
                return;
            case ActionKind::click_button:
                if (button(a) != "enter") reject("unknown button '" + button(a) + "'");
                if (text::trim(s.visible.at("user_input").get<std::string>()).empty()) {
                    throw Error(ErrorCode::empty_input, "empty message");
                }
                return;
            case ActionKind::select_option: {
                const int i = payload_index(a);
                if (button(a) == "clue") {
                    if (i < -1 || i >= static_cast<int>(s.visible.at("clues").size())) reject("clue index out of range");
                    return;
                }
                if (button(a) == "cell") {
                    const auto& grid = s.visible.at("grid");
                    const int width = static_cast<int>(grid.at(0).get<std::string>().size());
                    if (i < 0 || i >= width * static_cast<int>(grid.size())) reject("cell index out of range");
                    return;
                }
                reject("crossword selections target 'clue' or 'cell'");
            }
            case ActionKind::enter_letter: {
                CellEntry e;
                try {
                    e = a.payload.get<CellEntry>();
                } catch (const Json::exception&) {
                    reject("enter_letter needs {row, col, letter}");
                }
                const auto& grid = s.visible.at("grid");
                if (e.row < 0 || e.row >= static_cast<int>(grid.size())) reject("row out of range");
                const auto row = grid.at(static_cast<std::size_t>(e.row)).get<std::string>();
                if (e.col < 0 || e.col >= static_cast<int>(row.size())) reject("col out of range");
                if (row[static_cast<std::size_t>(e.col)] == '#') reject("black cells take no letters");
                if (e.letter.size() > 1 ||
                    (e.letter.size() == 1 && !std::isalpha(static_cast<unsigned char>(e.letter[0])))) {
                    reject("a cell holds one letter A-Z");
                }
                return;
            }
            default: reject("action not available in crossword");
        }
    }

    SessionState apply_task_action(SessionState s, const UserAction& a) const override {
        switch (a.kind) {
            case ActionKind::type_text: s.visible["user_input"] = payload_text(a); break;
            case ActionKind::click_button:
                s.visible["chat_history"].push_back(Json{{"speaker", "You"}, {"text", s.visible.at("user_input")}});
                s.visible["user_input"] = "";
                break;
            case ActionKind::select_option: {
                const int i = payload_index(a);
                if (button(a) == "clue") {
                    s.visible["selected_clue"] = i < 0 ? Json(nullptr) : s.visible.at("clues").at(static_cast<std::size_t>(i)).at("id");
                } else {
                    const int width = static_cast<int>(s.visible.at("grid").at(0).get<std::string>().size());
                    s.visible["selected_cell"] = Json{{"row", i / width}, {"col", i % width}};
                }
                break;
            }
            case ActionKind::enter_letter: {
                const auto e = a.payload.get<CellEntry>();
                auto row = s.visible["grid"][static_cast<std::size_t>(e.row)].get<std::string>();
                row[static_cast<std::size_t>(e.col)] =
                    e.letter.empty() ? '.' : static_cast<char>(std::toupper(static_cast<unsigned char>(e.letter[0])));
                s.visible["grid"][static_cast<std::size_t>(e.row)] = row;
                s.visible["selected_cell"] = Json{{"row", e.row}, {"col", e.col}};
                break;
            }
            default: break;
        }
        return s;
    }

private:
    CrosswordConfig config_;
};

}  // namespace hle
