#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hle/config.hpp"
#include "hle/metrics/report.hpp"
#include "hle/service/server.hpp"
#include "hle/sim/evaluator.hpp"
#include "hle/sim/simulate.hpp"
#include "hle/store/replay.hpp"

namespace {

using namespace hle;

std::vector<std::string> split_list(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& r : raw) {
        std::stringstream ss(r);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) out.push_back(item);
        }
    }
    return out;
}

std::vector<TaskKind> parse_tasks(const std::vector<std::string>& raw) {
    const auto names = split_list(raw);
    std::vector<TaskKind> out;
    if (names.empty() || (names.size() == 1 && names[0] == "all")) return {std::begin(kAllTasks), std::end(kAllTasks)};
    for (const auto& n : names) out.push_back(parse_task_kind(n));
    return out;
}

std::filesystem::path default_config() {
#ifdef HLE_DATA_DIR
    return std::filesystem::path(HLE_DATA_DIR) / "config.json";
#else
    return "data/config.json";
#endif
}

int run_simulate(const AppConfig& cfg, const std::vector<std::string>& tasks, std::vector<std::string> models,
                 std::vector<std::string> policies, int n, std::uint64_t seed, const std::string& out) {
    sim::SimPlan plan;
    plan.tasks = parse_tasks(tasks);
    plan.models = models.empty() ? cfg.model_ids("mock") : split_list(models);
    plan.policies = policies.empty() ? cfg.policies : split_list(policies);
    plan.n_per_cell = n;
    plan.seed = seed;
    const auto res = sim::load_sim_resources(cfg);
    const auto sessions = sim::simulate_sessions(res, plan, out, cfg.sim_threads);
    int failed = 0;
    for (const auto& s : sessions) {
        if (!s.ok()) {
            ++failed;
            std::cerr << s.session_id << ": " << s.error << "\n";
        }
    }
    sim::EvaluatorConfig ec;
    ec.seed = seed;
    const auto eval = sim::write_evaluations(out, ec);
    std::cout << sessions.size() - failed << " sessions written to " << out << " (" << failed << " failed)\n"
              << "third-party ratings: " << eval.string() << "\n";
    return failed == 0 ? 0 : 1;
}

int run_replay(const AppConfig& cfg, const std::string& traces) {
    const auto surveys = SurveyBank::load(cfg.survey_bank.string());
    int bad = 0;
    int total = 0;
    for (const auto& path : list_traces(traces)) {
        ++total;
        const auto loaded = load_trace(path);
        const auto adapter = make_adapter(loaded.trace.task_kind, &surveys, cfg.task_options(loaded.trace.task_kind));
        const auto r = replay_verify(loaded.trace, *adapter);
        if (!r.ok) {
            ++bad;
            std::cout << "DIVERGED " << path.string();
            for (const auto& d : r.divergences) std::cout << "  [seq " << d.seq << "] " << d.what;
            std::cout << "\n";
        }
    }
    std::cout << total - bad << "/" << total << " traces replay-verified\n";
    return bad == 0 ? 0 : 1;
}

int run_analyze(const AppConfig& cfg, const std::string& traces, const std::string& out) {
    ReportInputs in{traces, cfg.survey_bank.string(), cfg.metric_bank.string(), {}};
    const Json report = generate_report(in, out, cfg.analysis);
    std::cout << "report for " << report.at("session_count").get<int>() << " sessions written to " << out << "\n";
    for (const auto& w : report.at("warnings")) std::cerr << "warning: " << w.dump() << "\n";
    return 0;
}

/// Prints the per-task tables from a finished analyze run.
int run_report(const std::string& out, const std::vector<std::string>& tasks) {
    for (const TaskKind t : parse_tasks(tasks)) {
        const auto path = std::filesystem::path(out) / "tables" / (to_string(t) + ".tsv");
        std::ifstream in(path);
        if (!in) {
            std::cerr << "missing " << path.string() << " (run analyze first)\n";
            return 1;
        }
        std::vector<std::vector<std::string>> rows;
        std::vector<std::size_t> width;
        for (std::string line; std::getline(in, line);) {
            std::vector<std::string> cells;
            std::stringstream ss(line);
            for (std::string c; std::getline(ss, c, '\t');) cells.push_back(c);
            if (width.size() < cells.size()) width.resize(cells.size(), 0);
            for (std::size_t i = 0; i < cells.size(); ++i) width[i] = std::max(width[i], cells[i].size());
            rows.push_back(std::move(cells));
        }
        std::cout << "== " << to_string(t) << "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                std::cout << r[i] << std::string(width[i] - r[i].size() + 2, ' ');
            }
            std::cout << "\n";
        }
        std::cout << "\n";
    }
    return 0;
}

int run_serve(const AppConfig& cfg, const std::string& traces, int port) {
    service::ServiceOptions opt;
    opt.traces_dir = traces.empty() ? cfg.server_traces : std::filesystem::path(traces);
    service::SessionService svc(cfg, opt);
    httplib::Server http;
    service::install_routes(http, svc);
    static httplib::Server* running = &http;
    std::signal(SIGINT, [](int) { running->stop(); });
    std::signal(SIGTERM, [](int) { running->stop(); });
    const int p = port > 0 ? port : cfg.port;
    std::cout << "listening on " << cfg.host << ":" << p << ", traces in " << opt.traces_dir.string() << std::endl;
    if (!http.listen(cfg.host, p)) {
        std::cerr << "cannot listen on " << cfg.host << ":" << p << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Human-LM interaction harness: sessions, traces, simulation and reports"};
    app.require_subcommand(1);
    std::string config_path = default_config().string();
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

    std::vector<std::string> tasks;
    std::vector<std::string> models;
    std::vector<std::string> policies;
    int n = 1;
    std::uint64_t seed = 0;
    std::string traces = "traces";
    std::string out;
    int port = 0;

    auto* serve = app.add_subcommand("serve", "run the HTTP session service");
    serve->add_option("--traces", traces, "directory for live session traces");
    serve->add_option("--port", port, "port (default from config)");

    auto* simulate = app.add_subcommand("simulate", "run simulated users against mock models");
    simulate->add_option("--task", tasks, "task kinds, comma separated, or 'all'");
    simulate->add_option("--models", models, "model ids (default: every mock model in the config)");
    simulate->add_option("--policies", policies, "user policies (default from config)");
    simulate->add_option("--n", n, "sessions per (task, model, policy) cell")->check(CLI::NonNegativeNumber);
    simulate->add_option("--seed", seed, "simulation seed");
    simulate->add_option("--out,--traces", out, "output trace directory")->required();

    auto* replay = app.add_subcommand("replay", "replay-verify every trace in a directory");
    replay->add_option("--traces", traces, "trace directory")->required();

    auto* analyze = app.add_subcommand("analyze", "compute metrics and write report files");
    analyze->add_option("--traces", traces, "trace directory")->required();
    analyze->add_option("--out", out, "report directory")->required();

    auto* report = app.add_subcommand("report", "print the per-task tables of an analyzed run");
    report->add_option("--out", out, "report directory")->required();
    report->add_option("--task", tasks, "task kinds to print");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*report) return run_report(out, tasks);
        const AppConfig cfg = load_config(config_path);
        if (*serve) return run_serve(cfg, serve->count("--traces") ? traces : std::string{}, port);
        if (*simulate) return run_simulate(cfg, tasks, models, policies, n, seed, out);
        if (*replay) return run_replay(cfg, traces);
        if (*analyze) return run_analyze(cfg, traces, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
