#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <unistd.h>

#include "hle/config.hpp"
#include "hle/core/engine.hpp"
#include "hle/sim/simulate.hpp"
#include "hle/tasks/registry.hpp"

namespace hle::testing {

inline const AppConfig& data_config() {
    static const AppConfig cfg = load_config(std::string(HLE_DATA_DIR) + "/config.json");
    return cfg;
}

inline const TaskBanks& data_banks() {
    static const TaskBanks banks = load_banks(data_config().banks_dir.string());
    return banks;
}

inline const SurveyBank& data_surveys() {
    static const SurveyBank bank = SurveyBank::load(data_config().survey_bank.string());
    return bank;
}

inline const sim::SimResources& sim_resources() {
    static const sim::SimResources res = sim::load_sim_resources(data_config());
    return res;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
struct TempDir {
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("hle-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path path;
};

/// Answers every query with a fixed text and remembers what it was asked.
class RecordingGateway final : public LmGateway {
public:
    explicit RecordingGateway(std::string reply = "ok") : reply_(std::move(reply)) {}

    std::string model_id() const override { return "recording"; }

    CompletionSet query(const Prompt& prompt, const DecodingParams& params) override {
        prompts.push_back(prompt.text);
        params_seen.push_back(params);
        CompletionSet c;
        c.request_id = prompt.request_id;
        for (int i = 0; i < params.num_completions; ++i) {
            c.completions.push_back(Completion{reply_ + (i ? " " + std::to_string(i) : ""), FinishReason::length, false});
        }
        return c;
    }

    void set_reply(std::string r) { reply_ = std::move(r); }

    std::vector<std::string> prompts;
    std::vector<DecodingParams> params_seen;

private:
    std::string reply_;
};

/// Valid answers to every item of a form: binary items acknowledge "none",
/// likert items get `likert`, free-form items a short text.
inline Json answer_form(const std::vector<SurveyItem>& form, int likert = 3) {
    Json responses = Json::array();
    for (const auto& item : form) {
        Json r{{"item_id", item.item_id}};
        switch (item.scale) {
            case SurveyScale::binary_turn_marking:
                r["marked_turns"] = Json::array();
                r["none_acknowledged"] = true;
                break;
            case SurveyScale::likert5: r["likert"] = likert; break;
            case SurveyScale::free_form: r["text"] = "fine"; break;
        }
        responses.push_back(r);
    }
    return responses;
}

inline UserAction survey_action(const TaskAdapter& adapter, const SessionState& s, SurveyLevel level, int likert = 3) {
    return UserAction::survey(Json{{"level", level}, {"responses", answer_form(adapter.survey_form(s, level), likert)}}, 0);
}

/// One session driven step by step, with a clock that advances one second
/// per action unless told otherwise.
struct Session {
    explicit Session(TaskKind task, std::uint64_t seed = 1, Millis start = 1'000'000)
        : adapter(make_adapter(task, &data_surveys(), data_config().task_options(task))),
          state(make_initial_state(*adapter, data_banks(), "test-" + to_string(task), seed, start)),
          now(start) {}

    /// Steps and returns the error, if any; the state advances only when the
    /// step succeeded.
    std::optional<Error> act(UserAction a, Millis advance = 1000) {
        now += advance;
        a.timestamp = now;
        auto r = step(state, a, *adapter, lm, seq);
        seq += static_cast<std::int64_t>(r.events.size());
        for (auto& e : r.events) events.push_back(std::move(e));
        state = std::move(r.state);
        finished = finished || r.finished;
        return r.error;
    }

    void ok(UserAction a, Millis advance = 1000) {
        const auto e = act(std::move(a), advance);
        ASSERT_FALSE(e.has_value()) << e->what();
    }

    std::unique_ptr<TaskAdapter> adapter;
    SessionState state;
    RecordingGateway lm;
    Millis now;
    std::int64_t seq = 1;
    bool finished = false;
    std::vector<TraceEvent> events;
};

}  // namespace hle::testing
