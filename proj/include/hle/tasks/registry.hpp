#pragma once

#include <memory>
#include <string>

#include "hle/tasks/crossword.hpp"
#include "hle/tasks/dialogue.hpp"
#include "hle/tasks/metaphor.hpp"
#include "hle/tasks/qa.hpp"
#include "hle/tasks/summarization.hpp"

namespace hle {

/// Builds the adapter for a task. `options` is the task's block from the
/// config file ({"example_count": 4, ...}); unknown keys are ignored.
inline std::unique_ptr<TaskAdapter> make_adapter(TaskKind kind, const SurveyBank* surveys,
                                                 const Json& options = Json::object()) {
    const Json& o = options.is_object() ? options : Json::object();
    switch (kind) {
        case TaskKind::dialogue: {
            DialogueConfig c;
            c.example_count = o.value("example_count", c.example_count);
            c.max_tokens = o.value("max_tokens", c.max_tokens);
            c.conversation_tag = o.value("conversation_tag", c.conversation_tag);
            c.user_tag = o.value("user_tag", c.user_tag);
            c.bot_tag = o.value("bot_tag", c.bot_tag);
            return std::make_unique<DialogueAdapter>(surveys, c);
        }
        case TaskKind::qa: return std::make_unique<QaAdapter>(surveys);
        case TaskKind::crossword: return std::make_unique<CrosswordAdapter>(surveys);
        case TaskKind::summarization: {
            SummarizationConfig c;
            c.seed_example = o.value("seed_example", c.seed_example);
            c.require_ratings = o.value("require_ratings", c.require_ratings);
            return std::make_unique<SummarizationAdapter>(surveys, c);
        }
        case TaskKind::metaphor: return std::make_unique<MetaphorAdapter>(surveys);
    }
    throw Error(ErrorCode::invalid_argument, "unknown task");
}

/// Initial state s_0 for a new session; bank entries are picked from `seed`.
inline SessionState make_initial_state(const TaskAdapter& adapter, const TaskBanks& banks, std::string session_id,
                                       std::uint64_t seed, Millis start) {
    const auto pick = [&](std::size_t n, const char* what) {
        if (n == 0) throw Error(ErrorCode::invalid_argument, std::string("empty ") + what + " bank");
        return static_cast<std::size_t>(splitmix64(seed) % n);
    };
    switch (adapter.kind()) {
        case TaskKind::dialogue:
            return static_cast<const DialogueAdapter&>(adapter).initial_state(
                std::move(session_id), banks.scenarios[pick(banks.scenarios.size(), "scenario")],
                banks.dialogue_examples, start);
        case TaskKind::qa:
            return static_cast<const QaAdapter&>(adapter).initial_state(std::move(session_id),
                                                                        make_quiz(banks.questions, seed), start);
        case TaskKind::crossword:
            return static_cast<const CrosswordAdapter&>(adapter).initial_state(
                std::move(session_id), banks.puzzles[pick(banks.puzzles.size(), "puzzle")], start);
        case TaskKind::summarization:
            return static_cast<const SummarizationAdapter&>(adapter).initial_state(
                std::move(session_id), SummarizationAdapter::pick_documents(banks.documents, seed), start);
        case TaskKind::metaphor:
            return static_cast<const MetaphorAdapter&>(adapter).initial_state(
                std::move(session_id), banks.metaphor_seeds[pick(banks.metaphor_seeds.size(), "metaphor")], start);
    }
    throw Error(ErrorCode::invalid_argument, "unknown task");
}

}  // namespace hle
