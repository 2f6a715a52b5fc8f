#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hle/core/types.hpp"
#include "hle/lm/http_backend.hpp"
#include "hle/lm/mock.hpp"
#include "hle/metrics/report.hpp"
#include "hle/tasks/banks.hpp"

namespace hle {

/// Settings from the single JSON config file. Relative paths resolve against
/// the file's directory.
struct AppConfig {
    std::filesystem::path base_dir;
    std::filesystem::path banks_dir;
    std::filesystem::path survey_bank;
    std::filesystem::path metric_bank;
    std::filesystem::path blocklist;
    std::filesystem::path mock_fixtures;
    Json models = Json::object();
    Json tasks = Json::object();
    ReportOptions analysis;
    Millis sim_start = 1'700'000'000'000LL;
    unsigned sim_threads = 0;  // 0: hardware concurrency
    std::vector<std::string> policies = {"diligent", "hasty"};
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path server_traces;

    std::vector<std::string> model_ids(const std::string& backend = {}) const {
        std::vector<std::string> out;
        for (const auto& [id, m] : models.items()) {
            if (backend.empty() || m.value("backend", std::string("mock")) == backend) out.push_back(id);
        }
        return out;
    }

    Json task_options(TaskKind k) const { return tasks.value(to_string(k), Json::object()); }
};

inline AppConfig parse_config(const Json& j, const std::filesystem::path& base_dir) {
    AppConfig c;
    c.base_dir = base_dir;
    const auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };
    const Json paths = j.value("paths", Json::object());
    c.banks_dir = resolve(paths.value("banks", std::string("banks")));
    c.survey_bank = resolve(paths.value("survey_bank", std::string("survey_bank.json")));
    c.metric_bank = resolve(paths.value("metric_bank", std::string("metric_bank.json")));
    c.blocklist = resolve(paths.value("blocklist", std::string("blocklist.txt")));
    c.mock_fixtures = resolve(paths.value("mock_fixtures", std::string("mock/fixtures.json")));
    c.models = j.value("models", Json::object());
    c.tasks = j.value("tasks", Json::object());
    const Json a = j.value("analysis", Json::object());
    c.analysis.alpha = a.value("alpha", c.analysis.alpha);
    c.analysis.correction_level = a.value("correction_level", c.analysis.correction_level);
    c.analysis.reference_model = a.value("reference_model", c.analysis.reference_model);
    c.analysis.exclude_failed_attention = a.value("exclude_failed_attention", c.analysis.exclude_failed_attention);
    c.analysis.rolling_window = a.value("rolling_window", c.analysis.rolling_window);
    const Json s = j.value("simulation", Json::object());
    c.sim_start = s.value("start_time_ms", c.sim_start);
    c.sim_threads = s.value("threads", 0u);
    c.policies = s.value("policies", c.policies);
    const Json srv = j.value("server", Json::object());
    c.host = srv.value("host", c.host);
    c.port = srv.value("port", c.port);
    c.server_traces = resolve(srv.value("traces", std::string("traces")));
    return c;
}

inline AppConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_json_file(path.string()), std::filesystem::absolute(path).parent_path());
}

inline std::uint64_t model_seed(const AppConfig& c, const std::string& model_id) {
    const Json& m = c.models.at(model_id);
    return m.value("seed", fnv1a64(model_id));
}

inline Millis model_latency(const AppConfig& c, const std::string& model_id) {
    return c.models.at(model_id).value("latency_ms", Millis{0});
}

/// Backend for a configured model id: the deterministic mock or an HTTP
/// completion endpoint.
inline std::unique_ptr<LmBackend> make_backend(const AppConfig& c, const std::string& model_id) {
    if (!c.models.contains(model_id)) throw Error(ErrorCode::invalid_argument, "unknown model " + model_id);
    const Json& m = c.models.at(model_id);
    const auto backend = m.value("backend", std::string("mock"));
    if (backend == "mock") {
        MockConfig mc;
        if (std::filesystem::exists(c.mock_fixtures)) mc.fixtures = load_mock_fixtures(c.mock_fixtures.string());
        mc.profile = m.value("profile", Json::object()).get<MockProfile>();
        return std::make_unique<MockBackend>(model_id, model_seed(c, model_id), std::move(mc));
    }
    if (backend == "http") return std::make_unique<HttpBackend>(parse_model_endpoint(model_id, m));
    throw Error(ErrorCode::invalid_argument, "model " + model_id + ": unknown backend " + backend);
}

inline std::vector<std::string> load_config_blocklist(const AppConfig& c) {
    return std::filesystem::exists(c.blocklist) ? load_blocklist(c.blocklist.string()) : std::vector<std::string>{};
}

}  // namespace hle
