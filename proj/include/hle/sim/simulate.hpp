#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hle/config.hpp"
#include "hle/core/engine.hpp"
#include "hle/sim/policies.hpp"
#include "hle/store/trace_file.hpp"
#include "hle/tasks/registry.hpp"

namespace hle::sim {

/// Everything a simulated run reads, loaded once and shared read-only across
/// worker threads.
struct SimResources {
    AppConfig config;
    TaskBanks banks;
    SurveyBank surveys;
    std::vector<std::string> blocklist;
    std::map<std::string, MockConfig> mock_configs;
};

inline SimResources load_sim_resources(const AppConfig& c) {
    SimResources r{c, load_banks(c.banks_dir.string()), SurveyBank::load(c.survey_bank.string()),
                   load_config_blocklist(c), {}};
    std::vector<MockFixture> fixtures;
    if (std::filesystem::exists(c.mock_fixtures)) fixtures = load_mock_fixtures(c.mock_fixtures.string());
    for (const auto& [id, m] : c.models.items()) {
        if (m.value("backend", std::string("mock")) != "mock") continue;
        r.mock_configs[id] = MockConfig{fixtures, m.value("profile", Json::object()).get<MockProfile>()};
    }
    return r;
}

struct SimPlan {
    std::vector<TaskKind> tasks;
    std::vector<std::string> models;
    std::vector<std::string> policies;
    int n_per_cell = 1;
    std::uint64_t seed = 0;
};

struct SimSession {
    std::string session_id;
    TaskKind task = TaskKind::dialogue;
    std::string model_id;
    std::string policy_id;
    std::filesystem::path path;
    std::string end_reason;
    std::string error;  // non-empty when the session could not be run

    bool ok() const { return error.empty(); }
};

inline std::string sim_session_id(TaskKind task, const std::string& model, const std::string& policy, int k) {
    char idx[16];
    std::snprintf(idx, sizeof idx, "%03d", k);
    return to_string(task) + "-" + model + "-" + policy + "-" + idx;
}

/// Runs one simulated session against the mock model and returns its trace.
/// The gateway clock advances by the model's configured latency per call so
/// recorded latencies are deterministic.
inline InteractionTrace simulate_one(const SimResources& res, TaskKind task, const std::string& model_id,
                                     const std::string& policy_id, const std::string& session_id, std::uint64_t seed) {
    const auto mc = res.mock_configs.find(model_id);
    if (mc == res.mock_configs.end()) throw Error(ErrorCode::invalid_argument, model_id + " is not a mock model");
    MockBackend backend(model_id, model_seed(res.config, model_id), mc->second);
    Millis virtual_ms = 0;
    const Millis latency = model_latency(res.config, model_id);
    RetryPolicy retry;
    retry.sleep = nullptr;
    LiveGateway gateway(backend, res.blocklist, retry, [&virtual_ms, latency] {
        const Millis now = virtual_ms;
        virtual_ms += latency;
        return now;
    });
    const auto adapter = make_adapter(task, &res.surveys, res.config.task_options(task));
    const Millis start = res.config.sim_start;
    const SessionState initial = make_initial_state(*adapter, res.banks, session_id, seed, start);
    auto policy = std::make_shared<UserPolicy>(policy_profile(policy_id), *adapter, splitmix64(seed ^ 0x5eedULL));
    ActionSource source = [policy](const SessionState& s, const std::optional<Error>& e) { return (*policy)(s, e); };
    return run_session(initial, source, *adapter, gateway, SessionMeta{model_id, policy_id + "-user", start});
}

/// n_per_cell sessions for every (task, model, policy) cell, written to
/// out_dir/<task>/<session_id>.jsonl. Sessions run in parallel; output does
/// not depend on the thread count. A failing session is reported and the
/// run continues.
inline std::vector<SimSession> simulate_sessions(const SimResources& res, const SimPlan& plan,
                                                 const std::filesystem::path& out_dir, unsigned threads = 0) {
    std::vector<SimSession> jobs;
    for (const TaskKind task : plan.tasks) {
        for (const auto& model : plan.models) {
            for (const auto& policy : plan.policies) {
                policy_profile(policy);  // reject unknown ids before any work starts
                for (int k = 0; k < plan.n_per_cell; ++k) {
                    SimSession s;
                    s.session_id = sim_session_id(task, model, policy, k);
                    s.task = task;
                    s.model_id = model;
                    s.policy_id = policy;
                    s.path = trace_path(out_dir, task, s.session_id);
                    jobs.push_back(std::move(s));
                }
            }
        }
    }
    if (jobs.empty()) return jobs;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));

    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            auto& job = jobs[i];
            try {
                const std::uint64_t seed = splitmix64(plan.seed ^ fnv1a64(job.session_id));
                const auto trace = simulate_one(res, job.task, job.model_id, job.policy_id, job.session_id, seed);
                job.end_reason = trace.events.back().body.at("reason").get<std::string>();
                save_trace(trace, job.path);
            } catch (const std::exception& e) {
                job.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return jobs;
}

}  // namespace hle::sim
