#pragma once

#include <array>
#include <string>
#include <vector>

#include "hle/core/text.hpp"
#include "hle/tasks/adapter.hpp"
#include "hle/tasks/banks.hpp"

namespace hle {

inline constexpr int kSummarizationDocuments = 10;

inline const Document& halifax_seed_document() {
    static const Document d{
        "seed-halifax",
        "Fire crews and police were called to the property in Savile Road, Halifax, at 05:37 BST and the body of a "
        "man in his 50s was found inside. West Yorkshire Police said he had not yet been identified. Det Insp Craig "
        "Lord said: \"Inquiries are ongoing today with West Yorkshire Fire and Rescue Service to determine the cause "
        "of this fire which has sadly resulted in a man losing his life.\""};
    return d;
}

inline const std::string& halifax_seed_summary() {
    static const std::string s = "A man has died in a fire at a flat in West Yorkshire.";
    return s;
}

/// Abbreviations that never end a sentence. Version 1; changing the list
/// changes summary segmentation, so bump the version with it.
inline constexpr int kAbbreviationListVersion = 1;
inline const std::vector<std::string>& sentence_abbreviations() {
    static const std::vector<std::string> list = {
        "mr.",   "mrs.", "ms.",  "dr.",  "prof.", "sr.",  "jr.",  "st.",  "mt.",  "u.s.", "u.k.", "u.n.",
        "e.g.",  "i.e.", "etc.", "vs.",  "inc.",  "ltd.", "co.",  "corp.", "no.", "jan.", "feb.", "mar.",
        "apr.",  "jun.", "jul.", "aug.", "sep.",  "sept.", "oct.", "nov.", "dec.", "gen.", "gov.", "sen.",
        "rep.",  "col.", "capt.", "lt.", "sgt.",  "insp.", "det.", "supt.", "rev.", "hon.", "ave.", "approx."};
    return list;
}

/// Text up to and including the first sentence terminator (. ! ?) that is
/// followed by whitespace or the end of text; closing quotes/brackets after
/// the terminator stay with the sentence. Known abbreviations and single-letter
/// initials do not terminate. Returns the whole trimmed text when no
/// terminator is found.
inline std::string first_sentence(std::string_view raw) {
    const std::string_view s = text::trim(raw);
    const auto& abbrevs = sentence_abbreviations();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char ch = s[i];
        if (ch != '.' && ch != '!' && ch != '?') continue;
        std::size_t end = i + 1;
        while (end < s.size() && (s[end] == '"' || s[end] == '\'' || s[end] == ')' || s[end] == ']')) ++end;
        if (end < s.size() && !text::is_space(s[end])) continue;
        if (ch == '.') {
            std::size_t start = i;
            while (start > 0 && !text::is_space(s[start - 1])) --start;
            std::string token = text::to_lower(s.substr(start, i + 1 - start));
            while (!token.empty() && !text::is_alnum(token.front())) token.erase(token.begin());
            const bool initial = token.size() == 2 && std::isalpha(static_cast<unsigned char>(token[0]));
            if (initial || std::find(abbrevs.begin(), abbrevs.end(), token) != abbrevs.end()) continue;
        }
        return std::string(s.substr(0, end));
    }
    return std::string(s);
}

/// Summary shown to the user: the first sentence of the model output.
inline std::string postprocess_summary(const Completion& c) { return first_sentence(c.text); }

struct SummarizationConfig {
    double temperature = 0.3;
    int max_tokens = 64;
    std::string stop = "***";
    bool seed_example = true;
    bool require_ratings = true;
};

class SummarizationAdapter final : public TaskAdapter {
public:
    explicit SummarizationAdapter(const SurveyBank* surveys = nullptr, SummarizationConfig config = {})
        : TaskAdapter(surveys), config_(std::move(config)) {}

    TaskKind kind() const override { return TaskKind::summarization; }

    std::vector<std::string> visible_schema() const override {
        return {"current_index", "document", "documents_total", "edited_summary", "model_summary", "ratings"};
    }

    SessionState initial_state(std::string session_id, const std::vector<Document>& docs, Millis start) const {
        if (docs.size() != static_cast<std::size_t>(kSummarizationDocuments)) {
            throw Error(ErrorCode::invalid_argument, "a summarization session has exactly 10 documents");
        }
        SessionState s;
        s.session_id = std::move(session_id);
        s.task_kind = kind();
        s.clock = start;
        Json list = Json::array();
        for (const auto& d : docs) list.push_back(Json{{"id", d.id}, {"text", d.text}});
        s.hidden["documents"] = list;
        s.hidden["history"] = Json::array();
        s.hidden["ratings"] = Json::array();
        s.hidden["seed_example"] =
            config_.seed_example
                ? Json{{"document", halifax_seed_document().text}, {"summary", halifax_seed_summary()}}
                : Json(nullptr);
        s.visible["documents_total"] = kSummarizationDocuments;
        load_document(s, 0);
        return s;
    }

    /// Picks a session's documents without replacement.
    static std::vector<Document> pick_documents(const std::vector<Document>& bank, std::uint64_t seed) {
        if (bank.size() < static_cast<std::size_t>(kSummarizationDocuments)) {
            throw Error(ErrorCode::invalid_argument, "document bank needs at least 10 documents");
        }
        const auto order = seeded_permutation(bank.size(), seed);
        std::vector<Document> out;
        for (int i = 0; i < kSummarizationDocuments; ++i) out.push_back(bank[order[static_cast<std::size_t>(i)]]);
        return out;
    }

    bool requires_lm(const SessionState&, const UserAction& a) const override {
        return a.kind == ActionKind::click_button && button(a) == "generate";
    }

    /// Seed pair (when enabled), every previous (document, edited summary)
    /// pair in order, then the current document and the summary cue.
    Prompt create_prompt(const SessionState& s) const override {
        std::string out;
        const auto pair = [&](const std::string& doc, const std::string& summary) {
            out += "Document: " + doc + "\nSummary: " + summary + "\n" + config_.stop + "\n\n";
        };
        if (!s.hidden.at("seed_example").is_null()) {
            pair(s.hidden["seed_example"]["document"].get<std::string>(),
                 s.hidden["seed_example"]["summary"].get<std::string>());
        }
        for (const auto& h : s.hidden.at("history")) {
            pair(h.at("document").get<std::string>(), h.at("edited_summary").get<std::string>());
        }
        out += "Document: " + s.visible.at("document").get<std::string>() + "\nSummary:";
        return {out, {}};
    }

    DecodingParams decoding_params() const override {
        DecodingParams p;
        p.temperature = config_.temperature;
        p.max_tokens = config_.max_tokens;
        p.stop_sequences = {config_.stop};
        return p;
    }

    SessionState show_completions(SessionState s, const CompletionSet& c) const override {
        const Completion* first = first_surfaced(c);
        const std::string summary = first ? postprocess_summary(*first) : std::string(kFilteredPlaceholder);
        s.visible["model_summary"] = summary;
        s.visible["edited_summary"] = summary;
        return s;
    }

    std::optional<std::string> completion_reason(const SessionState& s) const override {
        if (s.hidden.at("history").size() >= static_cast<std::size_t>(kSummarizationDocuments)) {
            return "documents_complete";
        }
        return std::nullopt;
    }

    Json query_unit(const SessionState& s) const override { return s.visible.at("current_index"); }

    std::optional<int> survey_unit_index(const SessionState& s, SurveyLevel level) const override {
        if (level == SurveyLevel::summary) return s.visible.at("current_index").get<int>();
        return std::nullopt;
    }

    const SummarizationConfig& config() const { return config_; }

protected:
    void validate_task_action(const SessionState& s, const UserAction& a) const override {
        const bool fetched = !s.visible.at("model_summary").is_null();
        switch (a.kind) {
            case ActionKind::click_button:
                if (button(a) == "generate") {
                    if (fetched) reject("summary already generated for this document");
                    return;
                }
                if (button(a) == "next") {
                    if (!fetched) reject("generate a summary first");
                    if (config_.require_ratings && s.visible.at("ratings").is_null()) reject("rate the summary first");
                    return;
                }
                reject("unknown button '" + button(a) + "'");
            case ActionKind::type_text:
                if (button(a) != "edited_summary") reject("summarization only accepts edits to edited_summary");
                if (!fetched) reject("no summary to edit yet");
                payload_text(a);
                return;
            default: reject("action not available in summarization");
        }
    }

    SessionState apply_task_action(SessionState s, const UserAction& a) const override {
        if (a.kind == ActionKind::type_text) {
            s.visible["edited_summary"] = payload_text(a);
        } else if (button(a) == "next") {
            const int index = s.visible.at("current_index").get<int>();
            s.hidden["history"].push_back(Json{{"document", s.visible.at("document")},
                                               {"document_id", s.hidden["documents"][static_cast<std::size_t>(index)]["id"]},
                                               {"model_summary", s.visible.at("model_summary")},
                                               {"edited_summary", s.visible.at("edited_summary")},
                                               {"submitted_at", a.timestamp}});
            if (index + 1 < kSummarizationDocuments) {
                load_document(s, index + 1);
            } else {
                s.visible["document"] = nullptr;
                s.visible["model_summary"] = nullptr;
                s.visible["edited_summary"] = "";
                s.visible["ratings"] = nullptr;
            }
        }
        return s;
    }

    void check_survey_level(const SessionState& s, SurveyLevel level) const override {
        if (level == SurveyLevel::session) return;
        if (level != SurveyLevel::summary) reject("unsupported survey level");
        if (task_complete(s) || s.visible.at("model_summary").is_null()) reject("no summary to rate");
        if (!s.visible.at("ratings").is_null()) reject("summary already rated");
    }

    SessionState apply_survey(SessionState s, const UserAction& a) const override {
        if (submission_level(a) != SurveyLevel::summary) return TaskAdapter::apply_survey(std::move(s), a);
        const int index = s.visible.at("current_index").get<int>();
        s.visible["ratings"] = a.payload.at("responses");
        s.hidden["ratings"].push_back(Json{{"index", index}, {"responses", a.payload.at("responses")}});
        return s;
    }

private:
    static void load_document(SessionState& s, int index) {
        s.visible["current_index"] = index;
        s.visible["document"] = s.hidden.at("documents").at(static_cast<std::size_t>(index)).at("text");
        s.visible["model_summary"] = nullptr;
        s.visible["edited_summary"] = "";
        s.visible["ratings"] = nullptr;
    }

    SummarizationConfig config_;
};

}  // namespace hle
