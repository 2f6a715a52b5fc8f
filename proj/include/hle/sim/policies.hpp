#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hle/core/engine.hpp"
#include "hle/core/text.hpp"
#include "hle/metrics/text_metrics.hpp"
#include "hle/tasks/crossword.hpp"
#include "hle/tasks/qa.hpp"

namespace hle::sim {

/// Behaviour knobs of a simulated user.
struct PolicyProfile {
    std::string id;
    double skill = 0.5;        // chance of knowing an answer without help
    double trust = 0.8;        // chance of following a model answer that names an option
    double query_rate = 0.7;   // chance of asking the model when that is optional
    double requery_rate = 0.5; // chance of asking again after an unhelpful answer
    double edit_rate = 0.6;    // chance of editing a summary or an accepted suggestion
    double accept_rate = 0.5;  // chance of taking a metaphor suggestion
    double stop_rate = 0.5;    // chance of wrapping up a dialogue once the gate opens
    double slip_rate = 0.05;   // chance of a typo when entering a known crossword answer
    int target_sentences = 5;
    Millis think_min = 4000;
    Millis think_max = 15000;
    Millis ms_per_char = 120;
    double likert_mean = 3.6;
    bool answers_optional = true;
};

inline PolicyProfile policy_profile(const std::string& id) {
    PolicyProfile p;
    p.id = id;
    if (id == "diligent") {
        p.skill = 0.55;
        p.trust = 0.85;
        p.query_rate = 0.8;
        p.requery_rate = 0.7;
        p.edit_rate = 0.8;
        p.accept_rate = 0.45;
        p.stop_rate = 0.35;
        p.slip_rate = 0.02;
        p.target_sentences = 6;
        p.think_min = 6000;
        p.think_max = 20000;
        p.ms_per_char = 150;
        p.likert_mean = 3.7;
        return p;
    }
    if (id == "hasty") {
        p.skill = 0.4;
        p.trust = 0.7;
        p.query_rate = 0.6;
        p.requery_rate = 0.2;
        p.edit_rate = 0.45;
        p.accept_rate = 0.65;
        p.stop_rate = 0.9;
        p.slip_rate = 0.1;
        p.target_sentences = 4;
        p.think_min = 2000;
        p.think_max = 8000;
        p.ms_per_char = 80;
        p.likert_mean = 3.3;
        p.answers_optional = false;
        return p;
    }
    throw Error(ErrorCode::invalid_argument, "unknown policy " + id);
}

namespace policy_detail {

inline constexpr std::array<const char*, 40> kChatWords = {
    "honestly", "today",   "weekend", "family",  "work",    "really", "think",  "feel",   "maybe",  "plans",
    "trying",   "friends", "happy",   "tired",   "excited", "worried", "dinner", "walk",   "news",   "travel",
    "cooking",  "reading", "movie",   "weather", "city",    "home",   "morning", "late",   "early",  "busy",
    "quiet",    "change",  "idea",    "thanks",  "sure",    "nice",   "strange", "funny",  "hard",   "easy"};

inline constexpr std::array<const char*, 24> kImageWords = {
    "carries", "floods",  "whispers", "bends",   "glows",   "scatters", "gathers", "hums",
    "every",   "quietly", "old",      "bright",  "hidden",  "narrow",   "endless", "small",
    "stones",  "voices",  "windows",  "seasons", "streets", "harbors",  "morning", "names"};

inline std::vector<std::string> content_words(std::string_view s) {
    std::vector<std::string> out;
    for (auto& w : text::normalized_tokens(s)) {
        if (w.size() > 3) out.push_back(w);
    }
    return out;
}

/// Answer-length word in a model reply, scanning from the end.
inline std::optional<std::string> word_of_length(const std::string& reply, std::size_t length) {
    const auto words = text::normalized_tokens(reply);
    for (auto it = words.rbegin(); it != words.rend(); ++it) {
        if (it->size() != length) continue;
        if (std::all_of(it->begin(), it->end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); })) {
            std::string up = *it;
            for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            return up;
        }
    }
    return std::nullopt;
}

}  // namespace policy_detail

/// A simulated participant for one session. Decisions depend on the session
/// state, the policy seed, the step index and the user's own previous action,
/// so a session is reproducible from its seed. Survey answers are derived
/// from what the user saw during the session.
class UserPolicy {
public:
    UserPolicy(PolicyProfile profile, const TaskAdapter& adapter, std::uint64_t seed)
        : p_(std::move(profile)), adapter_(adapter), seed_(seed) {}

    std::optional<UserAction> operator()(const SessionState& s, const std::optional<Error>& error) {
        if (error) {
            // a rejected action means the policy misread the state; stop here
            // rather than retry the same thing
            return std::nullopt;
        }
        auto a = decide(s);
        if (a) last_ = *a;
        return a;
    }

    const PolicyProfile& profile() const { return p_; }

private:
    std::uint64_t roll(const SessionState& s, std::uint64_t salt) const {
        return splitmix64(seed_ ^ splitmix64(static_cast<std::uint64_t>(s.step_index) * 0x9E3779B97F4A7C15ULL + salt));
    }
    double uniform(const SessionState& s, std::uint64_t salt) const {
        return static_cast<double>(roll(s, salt) >> 11) * 0x1.0p-53;
    }
    /// Fixed per-session draw that does not change with the step.
    double fixed(std::string_view key) const {
        return static_cast<double>(splitmix64(seed_ ^ fnv1a64(key)) >> 11) * 0x1.0p-53;
    }
    Millis after(const SessionState& s, std::size_t typed_chars = 0) const {
        const auto span = static_cast<std::uint64_t>(std::max<Millis>(1, p_.think_max - p_.think_min));
        return s.clock + p_.think_min + static_cast<Millis>(roll(s, 7) % span) +
               static_cast<Millis>(typed_chars) * p_.ms_per_char;
    }
    bool last_was(ActionKind k, const std::string& target = {}) const {
        return last_ && last_->kind == k && (target.empty() || last_->target.value_or("") == target);
    }

    std::optional<UserAction> decide(const SessionState& s) {
        switch (s.task_kind) {
            case TaskKind::dialogue: return dialogue(s);
            case TaskKind::qa: return qa(s);
            case TaskKind::crossword: return crossword(s);
            case TaskKind::summarization: return summarization(s);
            case TaskKind::metaphor: return metaphor(s);
        }
        return std::nullopt;
    }

    // ---- surveys -------------------------------------------------------

    int likert(const SessionState& s, std::uint64_t salt, double signal) const {
        const double noise = (uniform(s, salt) - 0.5) * 2.0;
        const double v = p_.likert_mean + signal + noise;
        return static_cast<int>(std::clamp(std::lround(v), 1L, 5L));
    }

    Json survey_payload(const SessionState& s, SurveyLevel level, double signal) const {
        Json responses = Json::array();
        const int turns = adapter_.survey_turn_count(s);
        std::uint64_t salt = 100;
        for (const auto& item : adapter_.survey_form(s, level)) {
            ++salt;
            SurveyResponse r;
            r.item_id = item.item_id;
            switch (item.scale) {
                case SurveyScale::binary_turn_marking: {
                    // negated items ask about bad turns; a better session marks fewer
                    const double base = item.negated ? 0.25 - 0.15 * signal : 0.3 + 0.15 * signal;
                    for (int t = 0; t < turns; ++t) {
                        if (uniform(s, salt * 131 + static_cast<std::uint64_t>(t)) < base) r.marked_turns.push_back(t);
                    }
                    r.none_acknowledged = r.marked_turns.empty();
                    break;
                }
                case SurveyScale::likert5: r.likert = likert(s, salt, signal); break;
                case SurveyScale::free_form:
                    if (!item.required && !p_.answers_optional) continue;
                    r.text = signal >= 0 ? "It was useful most of the time." : "It was hit or miss.";
                    break;
            }
            responses.push_back(r);
        }
        return Json{{"level", level}, {"responses", responses}};
    }

    UserAction session_survey(const SessionState& s, double signal) const {
        return UserAction::survey(survey_payload(s, SurveyLevel::session, signal), after(s, 40));
    }

    /// Survey first, then leave.
    std::optional<UserAction> wrap_up(const SessionState& s, double signal) const {
        if (!s.hidden.contains("survey")) return session_survey(s, signal);
        if (terminal_reason(s, adapter_, s.clock)) return std::nullopt;
        return UserAction::finish(after(s));
    }

    // ---- dialogue ------------------------------------------------------

    std::optional<UserAction> dialogue(const SessionState& s) {
        if (adapter_.finish_allowed(s) && (s.hidden.contains("survey") || uniform(s, 1) < p_.stop_rate)) {
            return wrap_up(s, 0.0);
        }
        const auto input = s.visible.at("user_input").get<std::string>();
        if (!input.empty()) return UserAction::click("send", after(s));
        const int n = 5 + static_cast<int>(roll(s, 2) % 10);
        std::string msg;
        std::uint64_t h = roll(s, 3);
        for (int i = 0; i < n; ++i) {
            h = splitmix64(h);
            if (!msg.empty()) msg += ' ';
            msg += policy_detail::kChatWords[h % policy_detail::kChatWords.size()];
        }
        msg[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(msg[0])));
        msg += (h & 1) ? "?" : ".";
        return UserAction::type_text("user_input", msg, after(s, msg.size()));
    }

    // ---- question answering --------------------------------------------

    static double qa_signal(const SessionState& s) {
        int n = 0, right = 0;
        for (const auto& a : s.hidden.at("answers")) {
            if (!a.at("assisted").get<bool>()) continue;
            ++n;
            right += a.at("correct").get<bool>() ? 1 : 0;
        }
        return n ? (static_cast<double>(right) / n - 0.5) * 1.5 : 0.0;
    }

    std::string qa_prompt(const SessionState& s, const Json& q, bool retry) const {
        const auto question = q.at("text").get<std::string>();
        const auto choices = q.at("choices").get<std::vector<std::string>>();
        const int index = s.visible.at("current_index").get<int>();
        std::string joined;
        for (const auto& c : choices) joined += (joined.empty() ? "" : ", ") + c;
        if (retry) return joined + ". " + question;
        // later questions lean toward pasting the options in
        const double r = uniform(s, 11) - 0.04 * index;
        if (r < 0.25) return joined + ". " + question;
        if (r < 0.5) return question;
        if (r < 0.7) {
            auto words = policy_detail::content_words(question);
            std::sort(words.begin(), words.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
            words.resize(std::min<std::size_t>(words.size(), 2));
            std::string kw;
            for (const auto& w : words) kw += (kw.empty() ? "" : " ") + w;
            return kw.empty() ? question : kw;
        }
        if (r < 0.85) return "Tell me " + text::to_lower(question);
        std::string stem = question;
        if (!stem.empty() && stem.back() == '?') stem.pop_back();
        return stem + " is";
    }

    std::optional<UserAction> qa(const SessionState& s) {
        if (adapter_.task_complete(s)) return wrap_up(s, qa_signal(s));
        const int index = s.visible.at("current_index").get<int>();
        const Json& q = s.hidden.at("quiz").at(static_cast<std::size_t>(index));
        const auto choices = q.at("choices").get<std::vector<std::string>>();
        const bool assisted = s.visible.at("assisted").get<bool>();
        const auto input = s.visible.at("user_input").get<std::string>();
        const auto output = s.visible.at("system_output").get<std::string>();

        if (last_was(ActionKind::type_text, "user_input")) return UserAction::click("generate", after(s));

        int named = -1;
        int hits = 0;
        const std::string lowered = text::to_lower(output);
        for (std::size_t c = 0; c < choices.size(); ++c) {
            if (contains_word(lowered, text::to_lower(choices[c]))) {
                named = static_cast<int>(c);
                ++hits;
            }
        }
        if (hits != 1) named = -1;

        if (assisted && s.visible.at("selected_choice").is_null()) {
            const bool first = output.empty();
            const bool again = !first && named < 0 && !last_was(ActionKind::click_button, "next") &&
                               input != qa_prompt(s, q, true) && uniform(s, 12) < p_.requery_rate;
            if ((first && fixed("qa-ask-" + std::to_string(index)) < p_.query_rate) || again) {
                const auto prompt = qa_prompt(s, q, !first);
                return UserAction::type_text("user_input", prompt, after(s, prompt.size()));
            }
        }
        if (s.visible.at("selected_choice").is_null()) {
            int choice;
            const int gold = q.at("gold").get<int>();
            if (q.value("attention_check", false)) {
                choice = gold;
            } else if (named >= 0 && uniform(s, 13) < p_.trust) {
                choice = named;
            } else if (fixed("qa-know-" + q.at("id").get<std::string>()) < p_.skill) {
                choice = gold;
            } else {
                choice = static_cast<int>(roll(s, 14) % choices.size());
            }
            return UserAction::select("choice", choice, after(s) + 20000);
        }
        return UserAction::click("next", after(s));
    }

    // ---- crossword -----------------------------------------------------

    static double crossword_signal(const SessionState& s) {
        const auto grid = s.visible.at("grid").get<std::vector<std::string>>();
        const auto sol = s.hidden.at("solution").get<std::vector<std::string>>();
        int slots = 0, right = 0;
        for (std::size_t r = 0; r < sol.size(); ++r) {
            for (std::size_t c = 0; c < sol[r].size(); ++c) {
                if (sol[r][c] == '#') continue;
                ++slots;
                right += grid[r][c] == sol[r][c] ? 1 : 0;
            }
        }
        return slots ? (static_cast<double>(right) / slots - 0.5) * 1.5 : 0.0;
    }

    std::string crossword_prompt(const SessionState& s, const Json& clue) const {
        const auto t = clue.at("text").get<std::string>();
        const int len = clue.at("length").get<int>();
        const double r = uniform(s, 21);
        if (r < 0.3) return t;
        if (r < 0.55) return "What is a " + std::to_string(len) + " letter word for " + text::to_lower(t) + "?";
        if (r < 0.75) return "another word for " + text::to_lower(t);
        auto words = policy_detail::content_words(t);
        if (words.empty()) return t;
        return words.front() + (words.size() > 1 ? " " + words.back() : std::string());
    }

    /// Word the user means to write for a clue, if any: the answer when the
    /// user knows it (with an occasional slip), otherwise whatever the model
    /// said in reply to the prompt sent for this clue.
    std::optional<std::string> intended(const SessionState& s, const Json& clue, const std::string* sent) const {
        const auto id = clue.at("id").get<std::string>();
        const auto len = static_cast<std::size_t>(clue.at("length").get<int>());
        if (fixed("cw-know-" + id) < p_.skill) {
            std::string w;
            for (const auto& [r, c] : clue_cells(clue)) {
                w += s.hidden.at("solution").at(static_cast<std::size_t>(r)).get<std::string>()[static_cast<std::size_t>(c)];
            }
            if (fixed("cw-slip-" + id) < p_.slip_rate) w.back() = w.back() == 'E' ? 'A' : 'E';
            return w;
        }
        if (!sent) return std::nullopt;
        const auto& chat = s.visible.at("chat_history");
        for (std::size_t i = 0; i + 1 < chat.size(); ++i) {
            if (chat[i].at("speaker") == "You" && chat[i].at("text") == *sent && chat[i + 1].at("speaker") == "AI") {
                return policy_detail::word_of_length(chat[i + 1].at("text").get<std::string>(), len);
            }
        }
        return std::nullopt;
    }

    std::optional<UserAction> crossword(const SessionState& s) {
        if (adapter_.task_complete(s) || terminal_reason(s, adapter_, after(s))) return wrap_up(s, crossword_signal(s));
        if (last_was(ActionKind::type_text, "user_input")) return UserAction::click("enter", after(s));
        const auto grid = s.visible.at("grid").get<std::vector<std::string>>();
        const auto& clues = s.visible.at("clues");

        for (std::size_t i = 0; i < clues.size(); ++i) {
            const Json& clue = clues[i];
            const auto id = clue.at("id").get<std::string>();
            const auto cells = clue_cells(clue);
            const auto at = [&](std::pair<int, int> rc) {
                return grid[static_cast<std::size_t>(rc.first)][static_cast<std::size_t>(rc.second)];
            };
            if (std::none_of(cells.begin(), cells.end(), [&](const auto& rc) { return at(rc) == '.'; })) continue;
            const auto asked = asked_.find(id);
            const auto word = intended(s, clue, asked == asked_.end() ? nullptr : &asked->second);
            if (word) {
                for (std::size_t k = 0; k < cells.size(); ++k) {
                    if (at(cells[k]) == '.') {
                        return UserAction::letter(cells[k].first, cells[k].second, std::string(1, (*word)[k]), after(s));
                    }
                }
            }
            if (asked != asked_.end()) continue;  // the model was no help; move on
            if (s.visible.at("selected_clue") != clue.at("id")) {
                return UserAction::select("clue", static_cast<int>(i), after(s));
            }
            const auto prompt = crossword_prompt(s, clue);
            asked_[id] = prompt;
            return UserAction::type_text("user_input", prompt, after(s, prompt.size()));
        }
        return wrap_up(s, crossword_signal(s));
    }

    // ---- summarization -------------------------------------------------

    static double summary_signal(const SessionState& s) {
        const auto& h = s.hidden.at("history");
        if (h.empty()) return 0.0;
        double rel = 0;
        for (const auto& e : h) {
            const auto m = e.at("model_summary").get<std::string>();
            const auto d = word_edit_distance(m, e.at("edited_summary").get<std::string>());
            rel += static_cast<double>(d) / std::max<std::size_t>(1, text::word_count(m));
        }
        return 0.5 - rel / static_cast<double>(h.size());
    }

    std::string edit_summary(const SessionState& s, const std::string& summary, const std::string& document) const {
        auto words = text::split_words(summary);
        auto doc = text::split_words(document);
        if (words.empty() || doc.empty()) return summary;
        std::uint64_t h = roll(s, 31);
        const int edits = 1 + static_cast<int>(h % 4);
        for (int e = 0; e < edits && !words.empty(); ++e) {
            h = splitmix64(h);
            const auto pos = h % words.size();
            switch ((h >> 8) % 3) {
                case 0: words[pos] = doc[(h >> 16) % doc.size()]; break;
                case 1:
                    if (words.size() > 4) words.erase(words.begin() + static_cast<std::ptrdiff_t>(pos));
                    break;
                default:
                    words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), doc[(h >> 16) % doc.size()]);
            }
        }
        std::string out;
        for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
        if (!out.empty() && out.back() != '.') out += '.';
        return out;
    }

    std::optional<UserAction> summarization(const SessionState& s) {
        if (adapter_.task_complete(s)) return wrap_up(s, summary_signal(s));
        if (s.visible.at("model_summary").is_null()) return UserAction::click("generate", after(s) + 30000);
        const auto model = s.visible.at("model_summary").get<std::string>();
        const auto edited = s.visible.at("edited_summary").get<std::string>();
        const int index = s.visible.at("current_index").get<int>();
        if (edited == model && fixed("sum-edit-" + std::to_string(index)) < p_.edit_rate &&
            !last_was(ActionKind::type_text, "edited_summary")) {
            const auto next = edit_summary(s, model, s.visible.at("document").get<std::string>());
            if (next != model) return UserAction::type_text("edited_summary", next, after(s, next.size() / 2));
        }
        if (s.visible.at("ratings").is_null()) {
            const double changed = static_cast<double>(word_edit_distance(model, edited)) /
                                   std::max<std::size_t>(1, text::word_count(model));
            return UserAction::survey(survey_payload(s, SurveyLevel::summary, 0.4 - changed), after(s, 20));
        }
        return UserAction::click("next", after(s));
    }

    // ---- metaphor ------------------------------------------------------

    static double metaphor_signal(const SessionState& s) {
        const auto& log = s.hidden.at("sentence_log");
        if (log.empty()) return -0.5;
        int from = 0;
        for (const auto& e : log) from += e.at("from_suggestion").is_null() ? 0 : 1;
        return static_cast<double>(from) / static_cast<double>(log.size()) - 0.3;
    }

    std::string own_sentence(const SessionState& s) const {
        const auto seed = s.visible.at("seed_metaphor").get<std::string>();
        auto words = policy_detail::content_words(seed);
        std::uint64_t h = roll(s, 41);
        std::string out = words.empty() ? std::string("It") : words.front();
        out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
        const int n = 4 + static_cast<int>(h % 5);
        for (int i = 0; i < n; ++i) {
            h = splitmix64(h);
            out += ' ';
            out += policy_detail::kImageWords[h % policy_detail::kImageWords.size()];
        }
        return out + ".";
    }

    std::optional<UserAction> metaphor(const SessionState& s) {
        const int done = static_cast<int>(s.visible.at("sentences").size());
        if (terminal_reason(s, adapter_, after(s)) || done >= p_.target_sentences) return wrap_up(s, metaphor_signal(s));
        const auto input = s.visible.at("user_input").get<std::string>();
        const auto& suggestions = s.visible.at("suggestions");
        if (!suggestions.is_null()) {
            if (!suggestions.empty() && uniform(s, 51) < p_.accept_rate) {
                return UserAction::select("suggestion", static_cast<int>(roll(s, 52) % suggestions.size()), after(s));
            }
            return UserAction::click("dismiss", after(s));
        }
        if (last_was(ActionKind::select_option, "suggestion") && uniform(s, 53) < p_.edit_rate) {
            auto words = text::split_words(input);
            if (words.size() > 3) words.pop_back();
            words.push_back(policy_detail::kImageWords[roll(s, 54) % policy_detail::kImageWords.size()]);
            std::string next;
            for (const auto& w : words) next += (next.empty() ? "" : " ") + w;
            return UserAction::type_text("user_input", next + ".", after(s, 10));
        }
        if (!text::trim(input).empty()) return UserAction::click("submit", after(s));
        if (uniform(s, 55) < p_.query_rate) return UserAction::click("get_suggestions", after(s));
        const auto own = own_sentence(s);
        return UserAction::type_text("user_input", own, after(s, own.size()));
    }

    PolicyProfile p_;
    const TaskAdapter& adapter_;
    std::uint64_t seed_;
    std::optional<UserAction> last_;
    std::map<std::string, std::string> asked_;
};

}  // namespace hle::sim
