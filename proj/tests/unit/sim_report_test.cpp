#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hle/metrics/report.hpp"
#include "hle/sim/evaluator.hpp"
#include "hle/sim/simulate.hpp"
#include "hle/store/replay.hpp"
#include "test_support.hpp"

namespace {

using namespace hle;
using hle::testing::data_config;
using hle::testing::sim_resources;
using hle::testing::TempDir;

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> dir_bytes(const std::filesystem::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = slurp(e.path());
    }
    return out;
}

sim::SimPlan small_plan(std::uint64_t seed) {
    sim::SimPlan p;
    p.tasks.assign(std::begin(kAllTasks), std::end(kAllTasks));
    p.models = {"mock-alpha", "mock-delta"};
    p.policies = {"diligent"};
    p.n_per_cell = 1;
    p.seed = seed;
    return p;
}

TEST(Simulate, SameSeedGivesByteIdenticalTraces) {
    TempDir a("sim-a"), b("sim-b"), c("sim-c");
    const auto ra = sim::simulate_sessions(sim_resources(), small_plan(17), a.path, 1);
    const auto rb = sim::simulate_sessions(sim_resources(), small_plan(17), b.path, 4);
    ASSERT_EQ(ra.size(), 10u);
    for (const auto& s : ra) EXPECT_TRUE(s.ok()) << s.session_id << ": " << s.error;
    EXPECT_EQ(dir_bytes(a.path), dir_bytes(b.path));
    sim::simulate_sessions(sim_resources(), small_plan(18), c.path, 2);
    EXPECT_NE(dir_bytes(a.path), dir_bytes(c.path));
}

TEST(Simulate, EverySessionEndsAndReplays) {
    TempDir dir("sim-replay");
    auto plan = small_plan(3);
    plan.models = sim_resources().config.model_ids("mock");
    plan.policies = {"diligent", "hasty"};
    const auto sessions = sim::simulate_sessions(sim_resources(), plan, dir.path);
    ASSERT_EQ(sessions.size(), 5u * plan.models.size() * 2);
    const std::set<std::string> reasons = {"finish", "quiz_complete", "solved", "timer", "documents_complete"};
    for (const auto& s : sessions) {
        ASSERT_TRUE(s.ok()) << s.session_id << ": " << s.error;
        EXPECT_TRUE(reasons.count(s.end_reason)) << s.session_id << " " << s.end_reason;
        EXPECT_EQ(s.path, trace_path(dir.path, s.task, s.session_id));
        const auto t = load_trace(s.path).trace;
        EXPECT_EQ(t.model_id, s.model_id);
        const auto adapter = make_adapter(t.task_kind, &sim_resources().surveys,
                                          sim_resources().config.task_options(t.task_kind));
        EXPECT_TRUE(replay_verify(t, *adapter).ok) << s.session_id;
        EXPECT_FALSE(t.surveys().empty()) << s.session_id;
    }
}

TEST(Simulate, EmptyPlanAndBadIds) {
    TempDir dir("sim-empty");
    auto plan = small_plan(1);
    plan.n_per_cell = 0;
    EXPECT_TRUE(sim::simulate_sessions(sim_resources(), plan, dir.path).empty());
    EXPECT_TRUE(list_traces(dir.path).empty());
    plan.n_per_cell = 1;
    plan.policies = {"nobody"};
    EXPECT_THROW(sim::simulate_sessions(sim_resources(), plan, dir.path), Error);
    plan.policies = {"diligent"};
    plan.models = {"gpt-unknown"};
    const auto r = sim::simulate_sessions(sim_resources(), plan, dir.path);
    for (const auto& s : r) EXPECT_FALSE(s.ok());
    EXPECT_EQ(sim::sim_session_id(TaskKind::qa, "mock-alpha", "hasty", 7), "qa-mock-alpha-hasty-007");
}

TEST(Evaluator, RatingsAreDeterministicAndOnScale) {
    std::vector<InteractionTrace> traces;
    for (const auto task : {TaskKind::summarization, TaskKind::metaphor}) {
        traces.push_back(sim::simulate_one(sim_resources(), task, "mock-alpha", "diligent", "ev-" + to_string(task), 9));
    }
    const auto a = sim::evaluate_traces(traces);
    EXPECT_EQ(canonical(a), canonical(sim::evaluate_traces(traces)));
    const auto ratings = a.at("evaluations");
    ASSERT_FALSE(ratings.empty());
    std::set<std::string> metrics;
    for (const auto& r : ratings) {
        const int v = r.at("rating").get<int>();
        EXPECT_GE(v, 1);
        EXPECT_LE(v, 5);
        metrics.insert(r.at("metric").get<std::string>());
    }
    for (const char* m : {"consistency", "relevance", "coherency", "aptness", "specificity", "imageability"}) {
        EXPECT_TRUE(metrics.count(m)) << m;
    }
}

std::vector<MetricSpec> specs() { return load_metric_bank(data_config().metric_bank.string()); }

SessionMetrics fake_session(const std::string& id, const std::string& model, TaskKind task, double v) {
    SessionMetrics m;
    m.session_id = id;
    m.model_id = model;
    m.task = task;
    m.values["qa.accuracy"] = v;
    return m;
}

const Json& row_of(const Json& report, const std::string& task, const std::string& id) {
    for (const auto& r : report.at("tasks").at(task).at("rows")) {
        if (r.at("id") == id) return r;
    }
    throw std::runtime_error("missing row " + id);
}

TEST(Report, ZeroSessionsKeepsSchema) {
    const auto s = specs();
    const auto r = build_report({}, s);
    EXPECT_EQ(r.at("schema"), "hle-report/1");
    EXPECT_EQ(r.at("session_count"), 0);
    std::size_t rows = 0;
    for (const auto task : kAllTasks) {
        const auto& t = r.at("tasks").at(to_string(task));
        EXPECT_TRUE(t.at("models").empty());
        for (const auto& row : t.at("rows")) {
            EXPECT_EQ(row.at("status"), "unavailable");
            ++rows;
        }
    }
    EXPECT_EQ(rows, s.size());
}

TEST(Report, MarkersOnlyWithTwoOrMoreGroups) {
    const auto s = specs();
    std::vector<SessionMetrics> one = {fake_session("a1", "m1", TaskKind::qa, 40),
                                       fake_session("a2", "m1", TaskKind::qa, 60)};
    const auto single = row_of(build_report(one, s), "qa", "qa.accuracy");
    EXPECT_EQ(single.at("significance"), "single group");
    EXPECT_TRUE(single.at("tukey").is_null());
    for (const auto& [m, list] : single.at("markers").items()) EXPECT_TRUE(list.empty()) << m;

    std::vector<SessionMetrics> two = one;
    for (int i = 0; i < 4; ++i) two.push_back(fake_session("b" + std::to_string(i), "m2", TaskKind::qa, 90 + i));
    two.push_back(fake_session("a3", "m1", TaskKind::qa, 50));
    const auto row = row_of(build_report(two, s), "qa", "qa.accuracy");
    EXPECT_EQ(row.at("significance"), "tukey-kramer");
    EXPECT_EQ(row.at("markers").at("m1"), Json::array({"m2"}));
    EXPECT_EQ(row.at("markers").at("m2"), Json::array({"m1"}));
    EXPECT_NEAR(row.at("cells").at("m1").at("mean").get<double>(), 50.0, 1e-12);
    EXPECT_NEAR(row.at("cells").at("m1").at("se").get<double>(), 10.0 / std::sqrt(3.0), 1e-12);
}

TEST(Report, PerspectiveTagging) {
    for (const auto& m : specs()) {
        if (m.method == "auto") {
            EXPECT_EQ(m.perspective, "third_party") << m.id;
        } else if (m.key.rfind("survey:", 0) == 0) {
            EXPECT_EQ(m.perspective, "first_person") << m.id;
        } else {
            EXPECT_EQ(m.key.rfind("eval:", 0), 0u) << m.id;
            EXPECT_EQ(m.perspective, "third_party") << m.id;
        }
    }
}

TEST(Report, EndToEndCoversEveryRowAndIsIdempotent) {
    TempDir traces("rep-traces"), out1("rep-out1"), out2("rep-out2");
    const auto sessions = sim::simulate_sessions(sim_resources(), small_plan(5), traces.path);
    for (const auto& s : sessions) ASSERT_TRUE(s.ok()) << s.error;
    sim::write_evaluations(traces.path);
    const ReportInputs in{traces.path, data_config().survey_bank.string(), data_config().metric_bank.string(), {}};
    const auto r1 = generate_report(in, out1.path, data_config().analysis);
    const auto r2 = generate_report(in, out2.path, data_config().analysis);
    EXPECT_EQ(dir_bytes(out1.path), dir_bytes(out2.path));
    EXPECT_EQ(r1.at("session_count"), 10);

    const auto s = specs();
    for (const auto task : kAllTasks) {
        const auto& t = r1.at("tasks").at(to_string(task));
        std::set<std::string> ids;
        for (const auto& row : t.at("rows")) ids.insert(row.at("id").get<std::string>());
        for (const auto& spec : s) {
            if (spec.task == task) {
                EXPECT_TRUE(ids.count(spec.id)) << spec.id;
            }
        }
        EXPECT_TRUE(std::filesystem::exists(out1.path / "tables" / (to_string(task) + ".tsv")));
    }
    // third-party rows are filled once evaluations exist
    EXPECT_EQ(row_of(r1, "summarization", "summarization.consistency").at("status"), "ok");
    EXPECT_TRUE(std::filesystem::exists(out1.path / "values.tsv"));
    EXPECT_TRUE(std::filesystem::exists(out1.path / "residuals.tsv"));
}

TEST(Report, ThirdPartyRowsUnavailableWithoutEvaluations) {
    TempDir traces("rep-noeval"), out("rep-noeval-out");
    auto plan = small_plan(6);
    plan.tasks = {TaskKind::metaphor};
    sim::simulate_sessions(sim_resources(), plan, traces.path);
    const ReportInputs in{traces.path, data_config().survey_bank.string(), data_config().metric_bank.string(), {}};
    const auto r = generate_report(in, out.path, data_config().analysis);
    for (const auto& row : r.at("tasks").at("metaphor").at("rows")) {
        if (row.at("key").get<std::string>().rfind("eval:", 0) == 0) {
            EXPECT_EQ(row.at("status"), "unavailable") << row.at("id");
            EXPECT_EQ(row.at("reason"), "no third-party evaluations");
        }
    }
}

}  // namespace
