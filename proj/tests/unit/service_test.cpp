#include <atomic>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "hle/service/server.hpp"
#include "hle/store/replay.hpp"
#include "test_support.hpp"

namespace {

using namespace hle;
using hle::testing::data_config;
using hle::testing::TempDir;

class ServiceApi : public ::testing::Test {
protected:
    void SetUp() override {
        service::ServiceOptions opt;
        opt.traces_dir = dir_.path;
        opt.durability = Durability::flush;
        opt.clock = [this] { return now_.load(); };
        svc_ = std::make_unique<service::SessionService>(data_config(), opt);
        service::install_routes(http_, *svc_);
        port_ = http_.bind_to_any_port("127.0.0.1");
        ASSERT_GT(port_, 0);
        thread_ = std::thread([this] { http_.listen_after_bind(); });
        http_.wait_until_ready();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }

    void TearDown() override {
        http_.stop();
        thread_.join();
    }

    struct Reply {
        int status = 0;
        Json body;
    };

    Reply get(const std::string& path) {
        auto r = client_->Get(path);
        EXPECT_TRUE(r) << path;
        if (!r) return {};
        return {r->status, Json::parse(r->body)};
    }

    Reply post(const std::string& path, const Json& body) {
        auto r = client_->Post(path, body.dump(), "application/json");
        EXPECT_TRUE(r) << path;
        if (!r) return {};
        return {r->status, Json::parse(r->body)};
    }

    Reply act(const std::string& id, const UserAction& a) {
        now_ += 1500;
        return post("/sessions/" + id + "/actions", Json(a));
    }

    std::string create(const std::string& task, std::uint64_t seed = 3) {
        const auto r = post("/sessions", Json{{"task", task}, {"model", "mock-alpha"}, {"user_id", "u1"}, {"seed", seed}});
        EXPECT_EQ(r.status, 201) << r.body.dump();
        return r.body.at("session_id").get<std::string>();
    }

    static void expect_no_hidden(const Json& view) {
        EXPECT_FALSE(view.contains("hidden"));
        const std::string dump = view.dump();
        for (const char* k : {"\"solution\"", "\"in_context_examples\"", "\"gold\"", "\"answer_index\"", "\"quiz\""}) {
            EXPECT_EQ(dump.find(k), std::string::npos) << k;
        }
    }

    TempDir dir_{"svc"};
    std::atomic<Millis> now_{5'000'000};
    std::unique_ptr<service::SessionService> svc_;
    httplib::Server http_;
    int port_ = 0;
    std::thread thread_;
    std::unique_ptr<httplib::Client> client_;
};

TEST_F(ServiceApi, HealthAndUnknownSession) {
    EXPECT_EQ(get("/health").status, 200);
    const auto r = get("/sessions/nope/state");
    EXPECT_EQ(r.status, 404);
    EXPECT_EQ(r.body.at("error").at("code"), "NotFound");
    EXPECT_EQ(post("/sessions", Json{{"task", "poetry"}, {"model", "mock-alpha"}}).status, 400);
    EXPECT_EQ(post("/sessions", Json{{"task", "qa"}, {"model", "no-such-model"}}).status, 400);
    EXPECT_EQ(get("/traces/nope").status, 404);
}

TEST_F(ServiceApi, DialogueThroughTheApiReplaysAndKeepsHiddenFieldsPrivate) {
    const auto id = create("dialogue");
    auto st = get("/sessions/" + id + "/state");
    ASSERT_EQ(st.status, 200);
    expect_no_hidden(st.body);
    EXPECT_FALSE(st.body.at("finish_allowed").get<bool>());

    for (int turn = 1; turn <= 11; ++turn) {
        auto r = act(id, UserAction::type_text("user_input", "Tell me something about turn " + std::to_string(turn), 0));
        ASSERT_EQ(r.status, 200) << r.body.dump();
        r = act(id, UserAction::click("send", 0));
        ASSERT_EQ(r.status, 200) << r.body.dump();
        expect_no_hidden(r.body);
        EXPECT_EQ(r.body.at("visible").at("turn_count"), turn);
        if (turn == 10) {
            EXPECT_FALSE(r.body.at("finish_allowed").get<bool>());
            EXPECT_EQ(act(id, UserAction::finish(0)).status, 409);
        }
    }
    EXPECT_TRUE(get("/sessions/" + id + "/state").body.at("finish_allowed").get<bool>());

    // the binary items refuse an answer with neither marks nor acknowledgement
    const auto form = get("/sessions/" + id + "/state").body.at("session_survey").get<std::vector<SurveyItem>>();
    Json bad = hle::testing::answer_form(form);
    for (auto& r : bad) {
        if (r.contains("none_acknowledged")) r["none_acknowledged"] = false;
    }
    now_ += 1000;
    auto sr = post("/sessions/" + id + "/survey", Json{{"level", "session"}, {"responses", bad}});
    EXPECT_EQ(sr.status, 409);
    EXPECT_EQ(sr.body.at("error").at("code"), "MissingAcknowledgement");
    now_ += 1000;
    sr = post("/sessions/" + id + "/survey", Json{{"level", "session"}, {"responses", hle::testing::answer_form(form)}});
    ASSERT_EQ(sr.status, 200) << sr.body.dump();
    EXPECT_TRUE(sr.body.at("survey_submitted").get<bool>());

    const auto fin = act(id, UserAction::finish(0));
    ASSERT_EQ(fin.status, 200);
    EXPECT_TRUE(fin.body.at("ended").get<bool>());
    EXPECT_EQ(fin.body.at("end_reason"), "finish");
    EXPECT_EQ(act(id, UserAction::type_text("user_input", "late", 0)).status, 409);

    const auto tr = get("/traces/" + id);
    ASSERT_EQ(tr.status, 200);
    InteractionTrace t;
    t.session_id = tr.body.at("session_id");
    t.task_kind = tr.body.at("task_kind");
    t.model_id = tr.body.at("model_id");
    t.user_id = tr.body.at("user_id");
    t.created_at = tr.body.at("created_at");
    t.events = tr.body.at("events").get<std::vector<TraceEvent>>();
    EXPECT_EQ(t.user_id, "u1");
    EXPECT_EQ(t.surveys().size(), 1u);

    // the file on disk matches what the API returns and replays
    const auto disk = load_trace(trace_path(dir_.path, TaskKind::dialogue, id)).trace;
    EXPECT_EQ(disk, t);
    const auto adapter = make_adapter(TaskKind::dialogue, &hle::testing::data_surveys(),
                                      data_config().task_options(TaskKind::dialogue));
    const auto rep = replay_verify(t, *adapter);
    EXPECT_TRUE(rep.ok) << rep.to_json().dump();
    EXPECT_GE(rep.snapshots_checked, 3);
}

TEST_F(ServiceApi, CrosswordLettersRoundTrip) {
    const auto id = create("crossword");
    const auto st = get("/sessions/" + id + "/state").body;
    expect_no_hidden(st);
    const auto grid = st.at("visible").at("grid").get<std::vector<std::string>>();
    std::vector<std::pair<int, int>> open;
    for (std::size_t r = 0; r < grid.size(); ++r) {
        for (std::size_t c = 0; c < grid[r].size(); ++c) {
            if (grid[r][c] != '#') open.emplace_back(static_cast<int>(r), static_cast<int>(c));
        }
    }
    ASSERT_FALSE(open.empty());
    const auto [r0, c0] = open.front();
    auto out = act(id, UserAction::letter(r0, c0, "Q", 0));
    ASSERT_EQ(out.status, 200) << out.body.dump();
    const auto after = get("/sessions/" + id + "/state").body.at("visible").at("grid").get<std::vector<std::string>>();
    EXPECT_EQ(after[static_cast<std::size_t>(r0)][static_cast<std::size_t>(c0)], 'Q');
    EXPECT_EQ(out.body.at("visible").at("grid"), Json(after));
    EXPECT_EQ(act(id, UserAction::letter(99, 99, "A", 0)).status, 409);
}

TEST_F(ServiceApi, TimerEndsCrosswordAfterSurvey) {
    const auto id = create("crossword");
    now_ += kCrosswordSessionMs + 1;
    auto st = get("/sessions/" + id + "/state").body;
    EXPECT_TRUE(st.at("timer_expired").get<bool>());
    EXPECT_EQ(act(id, UserAction::type_text("user_input", "hi", 0)).status, 409);
    const auto form = st.at("session_survey").get<std::vector<SurveyItem>>();
    const auto sr = post("/sessions/" + id + "/survey",
                         Json{{"level", "session"}, {"responses", hle::testing::answer_form(form)}});
    ASSERT_EQ(sr.status, 200) << sr.body.dump();
    EXPECT_TRUE(sr.body.at("ended").get<bool>());
    EXPECT_EQ(sr.body.at("end_reason"), "timer");
}

TEST_F(ServiceApi, ClientTimestampsAreIgnored) {
    const auto id = create("qa");
    Json a = Json(UserAction::select("choice", 1, 0));
    a["timestamp"] = 1;  // far in the past
    now_ += 2000;
    const auto r = post("/sessions/" + id + "/actions", a);
    EXPECT_EQ(r.status, 200) << r.body.dump();
    const auto t = svc_->trace(id);
    EXPECT_EQ(t.events.back().timestamp, now_.load());
}

TEST_F(ServiceApi, ConcurrentSessions) {
    constexpr int kClients = 6;
    std::vector<std::string> ids;
    for (int i = 0; i < kClients; ++i) ids.push_back(create("metaphor", 100 + static_cast<std::uint64_t>(i)));
    EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), static_cast<std::size_t>(kClients));
    std::vector<std::thread> pool;
    std::atomic<int> failures{0};
    for (const auto& id : ids) {
        pool.emplace_back([&, id] {
            httplib::Client c("127.0.0.1", port_);
            for (int k = 0; k < 5; ++k) {
                auto r = c.Post("/sessions/" + id + "/actions", Json(UserAction::click("get_suggestions", 0)).dump(),
                                "application/json");
                if (!r || r->status != 200) ++failures;
            }
        });
    }
    for (auto& t : pool) t.join();
    EXPECT_EQ(failures.load(), 0);
    EXPECT_EQ(svc_->session_count(), static_cast<std::size_t>(kClients));
    for (const auto& id : ids) {
        const auto t = load_trace(trace_path(dir_.path, TaskKind::metaphor, id)).trace;
        EXPECT_EQ(t.count(EventKind::lm_request), 5u) << id;
    }
}

}  // namespace
