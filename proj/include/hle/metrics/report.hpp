#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hle/metrics/trace_metrics.hpp"
#include "hle/stats/stats.hpp"
#include "hle/store/trace_file.hpp"
#include "hle/survey/survey.hpp"
#include "hle/tasks/banks.hpp"

namespace hle {

/// One row of the metric bank: a metric name plus its cube coordinates and
/// the per-session key it is computed from.
struct MetricSpec {
    std::string id;
    TaskKind task = TaskKind::dialogue;
    std::string name;
    std::string target;       // process | output
    std::string unit;         // turn, question, quiz, puzzle, summary, sentence, session, dialogue, change
    std::string method;       // auto | survey
    std::string perspective;  // first_person | third_party
    std::string criteria;     // quality | preference | quality/preference
    std::string key;          // auto metric key, "survey:<name>" or "eval:<name>"
    std::string shape = "scalar";  // scalar | series | categories
    bool supplementary = false;    // reported alongside the table rows
};

inline void from_json(const Json& j, MetricSpec& m) {
    j.at("id").get_to(m.id);
    j.at("task").get_to(m.task);
    j.at("name").get_to(m.name);
    j.at("target").get_to(m.target);
    j.at("unit").get_to(m.unit);
    j.at("method").get_to(m.method);
    j.at("perspective").get_to(m.perspective);
    j.at("criteria").get_to(m.criteria);
    j.at("key").get_to(m.key);
    m.shape = j.value("shape", std::string("scalar"));
    m.supplementary = j.value("supplementary", false);
    if (m.shape != "scalar" && m.shape != "series" && m.shape != "categories") {
        throw Error(ErrorCode::invalid_argument, "metric " + m.id + ": unknown shape " + m.shape);
    }
}

inline void to_json(Json& j, const MetricSpec& m) {
    j = Json{{"id", m.id},         {"task", m.task},           {"name", m.name},
             {"target", m.target}, {"unit", m.unit},           {"method", m.method},
             {"perspective", m.perspective}, {"criteria", m.criteria}, {"key", m.key},
             {"shape", m.shape},   {"supplementary", m.supplementary}};
}

inline std::vector<MetricSpec> load_metric_bank(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open metric bank " + path);
    return Json::parse(in).at("metrics").get<std::vector<MetricSpec>>();
}

/// Third-party ratings keyed by session, then metric; one rating per rated
/// unit (summary or sentence).
using ThirdPartyRatings = std::map<std::string, std::map<std::string, std::vector<double>>>;

inline ThirdPartyRatings parse_evaluations(const Json& j) {
    ThirdPartyRatings out;
    for (const auto& e : j.at("evaluations")) {
        out[e.at("session_id").get<std::string>()][e.at("metric").get<std::string>()].push_back(
            e.at("rating").get<double>());
    }
    return out;
}

/// Everything the report needs from one trace.
struct SessionMetrics {
    std::string session_id;
    std::string model_id;
    TaskKind task = TaskKind::dialogue;
    std::map<std::string, double> values;
    std::map<std::string, std::vector<double>> series;
    std::map<std::string, std::vector<std::pair<int, std::string>>> categories;
    std::vector<std::string> flags;
    bool excluded = false;
};

struct ReportOptions {
    double alpha = stats::kDefaultAlpha;
    double correction_level = stats::kBonferroniLevel;
    std::string reference_model;  // empty: first model in sorted order
    bool exclude_failed_attention = true;
    int rolling_window = 2;
};

inline SessionMetrics compute_session_metrics(const InteractionTrace& t, const SurveyBank& bank,
                                              const ThirdPartyRatings& ratings, const ReportOptions& opt = {}) {
    SessionMetrics m;
    m.session_id = t.session_id;
    m.model_id = t.model_id;
    m.task = t.task_kind;
    const auto put = [&](const std::string& k, const std::optional<double>& v) {
        if (v) m.values[k] = *v;
    };
    switch (t.task_kind) {
        case TaskKind::dialogue: put("dialogue.queries", count_queries(t, QueryUnit::dialogue)); break;
        case TaskKind::qa: {
            const auto acc = qa_accuracy(t);
            put("qa.accuracy", acc.assisted);
            put("qa.accuracy_unassisted", acc.unassisted);
            put("qa.accuracy_overall", acc.overall);
            put("qa.time", elapsed_time(t, TimeUnit::question));
            put("qa.queries", count_queries(t, QueryUnit::question));
            m.series["qa.queries_by_question"] = qa_queries_by_question(t);
            if (!acc.attention_answered || !acc.attention_passed) {
                m.flags.push_back("attention_check_failed");
                m.excluded = opt.exclude_failed_attention;
            }
            break;
        }
        case TaskKind::crossword: {
            const auto acc = crossword_accuracy(t);
            put("crossword.accuracy_letter", acc.letter);
            put("crossword.accuracy_clue", acc.clue);
            put("crossword.queries", count_queries(t, QueryUnit::puzzle));
            break;
        }
        case TaskKind::summarization: {
            const auto e = summary_edits(t);
            const auto mean = [](const std::vector<double>& v) -> std::optional<double> {
                if (v.empty()) return std::nullopt;
                double s = 0;
                for (double x : v) s += x;
                return s / static_cast<double>(v.size());
            };
            put("summarization.edit_distance", mean(e.edit_distance));
            put("summarization.density_original", mean(e.density_original));
            put("summarization.density_edited", mean(e.density_edited));
            m.series["summarization.edit_by_index"] = e.edit_distance;
            break;
        }
        case TaskKind::metaphor:
            put("metaphor.queries", count_queries(t, QueryUnit::sentence));
            put("metaphor.acceptance", acceptance_rate(t));
            put("metaphor.edit", metaphor_edit(t));
            put("metaphor.time", elapsed_time(t, TimeUnit::sentence));
            break;
    }
    if (t.task_kind == TaskKind::qa || t.task_kind == TaskKind::crossword) {
        auto& cats = m.categories[to_string(t.task_kind) + ".prompt_styles"];
        for (const auto& [index, cat] : prompt_styles(t)) cats.emplace_back(index, to_string(cat));
    }
    try {
        for (const auto& [name, v] : aggregate_trace(t, bank)) m.values["survey:" + name] = v;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::incomplete_survey) throw;
        m.flags.push_back("survey_incomplete");
    }
    if (const auto it = ratings.find(t.session_id); it != ratings.end()) {
        for (const auto& [name, list] : it->second) {
            if (list.empty()) continue;
            double s = 0;
            for (double x : list) s += x;
            m.values["eval:" + name] = s / static_cast<double>(list.size());
        }
    }
    return m;
}

/// Flat per-session record of one metric.
struct MetricValue {
    std::string metric_id;
    std::string session_id;
    std::string model_id;
    double value = 0.0;
};

inline std::vector<MetricValue> metric_values(const std::vector<MetricSpec>& specs, const SessionMetrics& m) {
    std::vector<MetricValue> out;
    for (const auto& s : specs) {
        if (s.task != m.task || s.shape != "scalar") continue;
        if (const auto it = m.values.find(s.key); it != m.values.end()) {
            out.push_back({s.id, m.session_id, m.model_id, it->second});
        }
    }
    return out;
}

namespace report_detail {

inline Json summary_cell(const stats::GroupSummary& g) {
    return Json{{"n", g.n}, {"mean", g.mean}, {"se", g.se ? Json(*g.se) : Json(nullptr)}};
}

inline Json scalar_row(const MetricSpec& spec, const std::vector<const SessionMetrics*>& sessions,
                       const std::vector<std::string>& models, const ReportOptions& opt) {
    Json row = spec;
    std::map<std::string, std::vector<double>> by_model;
    for (const auto* m : sessions) {
        if (const auto it = m->values.find(spec.key); it != m->values.end()) by_model[m->model_id].push_back(it->second);
    }
    Json cells = Json::object();
    Json markers = Json::object();
    std::vector<stats::GroupSample> groups;
    for (const auto& model : models) {
        const auto it = by_model.find(model);
        if (it == by_model.end()) {
            cells[model] = Json{{"status", "unavailable"}};
            continue;
        }
        groups.push_back({model, it->second});
        cells[model] = summary_cell(stats::group_summary(groups.back()));
        markers[model] = Json::array();
    }
    row["cells"] = cells;
    row["tukey"] = nullptr;
    row["ols"] = nullptr;
    if (groups.empty()) {
        row["status"] = "unavailable";
        row["reason"] = spec.key.rfind("eval:", 0) == 0 ? "no third-party evaluations" : "no session produced a value";
        row["markers"] = Json::object();
        return row;
    }
    row["status"] = "ok";
    if (groups.size() >= 2) {
        try {
            const auto tk = stats::tukey_kramer(groups, opt.alpha);
            for (const auto& p : tk.pairs) {
                if (!p.significant) continue;
                markers[p.a].push_back(p.b);
                markers[p.b].push_back(p.a);
            }
            row["tukey"] = tk;
        } catch (const Error& e) {
            row["tukey"] = Json{{"error", e.what()}};
        }
        const std::string ref = !opt.reference_model.empty() && by_model.count(opt.reference_model)
                                    ? opt.reference_model
                                    : groups.front().group_id;
        try {
            const auto ols = stats::ols_dummy(groups, ref, opt.correction_level);
            Json o = ols;
            o["residuals"] = ols.residuals;
            row["ols"] = o;
        } catch (const Error& e) {
            row["ols"] = Json{{"error", e.what()}};
        }
        row["significance"] = "tukey-kramer";
    } else {
        row["significance"] = "single group";
    }
    row["markers"] = markers;
    return row;
}

inline Json series_row(const MetricSpec& spec, const std::vector<const SessionMetrics*>& sessions,
                       const std::vector<std::string>& models, const ReportOptions& opt) {
    Json row = spec;
    Json cells = Json::object();
    bool any = false;
    for (const auto& model : models) {
        std::map<int, std::vector<double>> at;
        for (const auto* m : sessions) {
            if (m->model_id != model) continue;
            const auto it = m->series.find(spec.key);
            if (it == m->series.end()) continue;
            for (std::size_t i = 0; i < it->second.size(); ++i) at[static_cast<int>(i)].push_back(it->second[i]);
        }
        if (at.empty()) {
            cells[model] = Json{{"status", "unavailable"}};
            continue;
        }
        any = true;
        Json points = Json::array();
        std::vector<double> means;
        for (const auto& [index, values] : at) {
            const auto g = stats::group_summary({model, values});
            Json p = summary_cell(g);
            p["index"] = index;
            points.push_back(p);
            means.push_back(g.mean);
        }
        const auto rolled = rolling_average(means, opt.rolling_window);
        for (std::size_t i = 0; i < points.size(); ++i) points[i]["rolling"] = rolled[i];
        cells[model] = Json{{"points", points}};
    }
    row["cells"] = cells;
    row["status"] = any ? "ok" : "unavailable";
    if (!any) row["reason"] = "no session produced a value";
    row["significance"] = "not tested (series)";
    return row;
}

inline Json categories_row(const MetricSpec& spec, const std::vector<const SessionMetrics*>& sessions,
                           const std::vector<std::string>& models, const ReportOptions& opt) {
    Json row = spec;
    Json cells = Json::object();
    bool any = false;
    for (const auto& model : models) {
        std::map<int, std::map<std::string, int>> counts;
        for (const auto* m : sessions) {
            if (m->model_id != model) continue;
            const auto it = m->categories.find(spec.key);
            if (it == m->categories.end()) continue;
            for (const auto& [index, cat] : it->second) ++counts[index][cat];
        }
        if (counts.empty()) {
            cells[model] = Json{{"status", "unavailable"}};
            continue;
        }
        any = true;
        Json points = Json::array();
        std::map<std::string, std::vector<double>> per_cat;
        for (const auto& [index, by_cat] : counts) {
            int total = 0;
            for (const auto& [c, n] : by_cat) total += n;
            Json props = Json::object();
            for (const auto cat : kPromptCategories) {
                const auto name = to_string(cat);
                const auto it = by_cat.find(name);
                const double p = it == by_cat.end() ? 0.0 : static_cast<double>(it->second) / total;
                props[name] = p;
                per_cat[name].push_back(p);
            }
            points.push_back(Json{{"index", index}, {"n", total}, {"proportions", props}});
        }
        for (auto& [name, series] : per_cat) {
            const auto rolled = rolling_average(series, opt.rolling_window);
            for (std::size_t i = 0; i < points.size(); ++i) points[i]["rolling"][name] = rolled[i];
        }
        cells[model] = Json{{"points", points}};
    }
    row["cells"] = cells;
    row["status"] = any ? "ok" : "unavailable";
    if (!any) row["reason"] = "no prompts recorded";
    row["significance"] = "not tested (series)";
    return row;
}

}  // namespace report_detail

/// Per-task tables: every bank row for the task, each with a cell per
/// model (mean and SE, or an unavailable marker) and Tukey-Kramer and OLS
/// results where two or more models have values.
inline Json build_report(const std::vector<SessionMetrics>& sessions, const std::vector<MetricSpec>& specs,
                         const ReportOptions& opt = {}) {
    Json report{{"schema", "hle-report/1"},
                {"options", Json{{"alpha", opt.alpha},
                                 {"correction_level", opt.correction_level},
                                 {"reference_model", opt.reference_model},
                                 {"exclude_failed_attention", opt.exclude_failed_attention},
                                 {"rolling_window", opt.rolling_window}}},
                {"session_count", sessions.size()}};
    Json tasks = Json::object();
    for (const TaskKind task : kAllTasks) {
        std::vector<const SessionMetrics*> included;
        std::set<std::string> model_set;
        Json excluded = Json::array();
        for (const auto& m : sessions) {
            if (m.task != task) continue;
            if (m.excluded) {
                excluded.push_back(Json{{"session_id", m.session_id}, {"flags", m.flags}});
                continue;
            }
            included.push_back(&m);
            model_set.insert(m.model_id);
        }
        const std::vector<std::string> models(model_set.begin(), model_set.end());
        Json rows = Json::array();
        for (const auto& spec : specs) {
            if (spec.task != task) continue;
            if (spec.shape == "series") {
                rows.push_back(report_detail::series_row(spec, included, models, opt));
            } else if (spec.shape == "categories") {
                rows.push_back(report_detail::categories_row(spec, included, models, opt));
            } else {
                rows.push_back(report_detail::scalar_row(spec, included, models, opt));
            }
        }
        tasks[to_string(task)] = Json{{"models", models},
                                      {"sessions", included.size()},
                                      {"excluded", excluded},
                                      {"rows", rows}};
    }
    report["tasks"] = tasks;
    return report;
}

namespace report_detail {

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_failure, "cannot write " + p.string());
    out << content;
}

inline std::string safe_name(std::string s) {
    for (auto& c : s) {
        if (!text::is_alnum(c) && c != '.' && c != '_' && c != '-') c = '_';
    }
    return s;
}

}  // namespace report_detail

/// Writes report.json plus delimiter-separated views: tables/<task>.tsv
/// (mean ± SE with markers), ols/<task>.tsv, series/<metric id>.tsv,
/// residuals.tsv and values.tsv.
inline void write_report(const Json& report, const std::vector<SessionMetrics>& sessions,
                         const std::vector<MetricSpec>& specs, const std::filesystem::path& out) {
    using namespace report_detail;
    write_file(out / "report.json", report.dump(2) + "\n");
    std::string residuals = "task\tmetric\tobservation\tresidual\n";
    for (const auto& [task, t] : report.at("tasks").items()) {
        const auto models = t.at("models").get<std::vector<std::string>>();
        std::string table = "metric\ttarget\tunit\tmethod\tperspective\tcriteria";
        for (const auto& m : models) table += "\t" + m;
        table += "\n";
        std::string ols = "metric\tmodel\tn\tfitted\tfitted_se\tbeta\tp_value\tsignificant\n";
        for (const auto& row : t.at("rows")) {
            const auto id = row.at("id").get<std::string>();
            table += row.at("name").get<std::string>() + (row.value("supplementary", false) ? " (extra)" : "") + "\t" +
                     row.at("target").get<std::string>() + "\t" + row.at("unit").get<std::string>() + "\t" +
                     row.at("method").get<std::string>() + "\t" + row.at("perspective").get<std::string>() + "\t" +
                     row.at("criteria").get<std::string>();
            const bool scalar = row.at("shape") == "scalar";
            for (const auto& m : models) {
                const auto& cell = row.at("cells").at(m);
                if (cell.contains("status")) {
                    table += "\tunavailable";
                } else if (!scalar) {
                    table += "\tseries:series/" + safe_name(id) + ".tsv";
                } else {
                    table += "\t" + fmt(cell.at("mean").get<double>()) + " ± " +
                             (cell.at("se").is_null() ? std::string("n/a") : fmt(cell.at("se").get<double>()));
                    const auto& mk = row.at("markers");
                    if (mk.contains(m) && !mk.at(m).empty()) {
                        std::string list;
                        for (const auto& other : mk.at(m)) list += (list.empty() ? "" : ",") + other.get<std::string>();
                        table += " *[" + list + "]";
                    }
                }
            }
            table += "\n";
            if (scalar && row.at("ols").is_object() && row.at("ols").contains("groups")) {
                for (const auto& g : row.at("ols").at("groups")) {
                    ols += id + "\t" + g.at("group").get<std::string>() + "\t" + std::to_string(g.at("n").get<int>()) +
                           "\t" + fmt(g.at("fitted").get<double>()) + "\t" + fmt(g.at("fitted_se").get<double>()) +
                           "\t" + fmt(g.at("beta").get<double>()) + "\t" + fmt(g.at("p_value").get<double>()) + "\t" +
                           (g.at("significant_vs_reference").get<bool>() ? "yes" : "no") + "\n";
                }
                int i = 0;
                for (const auto& r : row.at("ols").at("residuals")) {
                    residuals += task + "\t" + id + "\t" + std::to_string(i++) + "\t" + fmt(r.get<double>()) + "\n";
                }
            }
            if (!scalar && row.at("status") == "ok") {
                const bool cats = row.at("shape") == "categories";
                std::string s = cats ? "model\tindex\tn\tcategory\tproportion\trolling\n"
                                     : "model\tindex\tn\tmean\tse\trolling\n";
                for (const auto& m : models) {
                    const auto& cell = row.at("cells").at(m);
                    if (!cell.contains("points")) continue;
                    for (const auto& p : cell.at("points")) {
                        const auto idx = std::to_string(p.at("index").get<int>());
                        const auto n = std::to_string(p.at("n").get<int>());
                        if (cats) {
                            for (const auto& [c, v] : p.at("proportions").items()) {
                                s += m + "\t" + idx + "\t" + n + "\t" + c + "\t" + fmt(v.get<double>()) + "\t" +
                                     fmt(p.at("rolling").at(c).get<double>()) + "\n";
                            }
                        } else {
                            s += m + "\t" + idx + "\t" + n + "\t" + fmt(p.at("mean").get<double>()) + "\t" +
                                 (p.at("se").is_null() ? std::string("n/a") : fmt(p.at("se").get<double>())) + "\t" +
                                 fmt(p.at("rolling").get<double>()) + "\n";
                        }
                    }
                }
                write_file(out / "series" / (safe_name(id) + ".tsv"), s);
            }
        }
        write_file(out / "tables" / (task + ".tsv"), table);
        write_file(out / "ols" / (task + ".tsv"), ols);
    }
    write_file(out / "residuals.tsv", residuals);
    std::string values = "session_id\tmodel\tmetric\tvalue\n";
    for (const auto& m : sessions) {
        for (const auto& v : metric_values(specs, m)) {
            values += v.session_id + "\t" + v.model_id + "\t" + v.metric_id + "\t" + fmt(v.value) + "\n";
        }
    }
    write_file(out / "values.tsv", values);
}

struct ReportInputs {
    std::filesystem::path trace_dir;
    std::string survey_bank;
    std::string metric_bank;
    std::filesystem::path evaluations;  // empty: <trace_dir>/evaluations.json when present
};

/// Loads every trace under trace_dir, computes per-session metrics and
/// writes the report files to out_dir. Returns the report JSON.
inline Json generate_report(const ReportInputs& in, const std::filesystem::path& out_dir,
                            const ReportOptions& opt = {}) {
    const auto bank = SurveyBank::load(in.survey_bank);
    const auto specs = load_metric_bank(in.metric_bank);
    ThirdPartyRatings ratings;
    const auto eval_path = in.evaluations.empty() ? in.trace_dir / "evaluations.json" : in.evaluations;
    if (std::filesystem::exists(eval_path)) ratings = parse_evaluations(read_json_file(eval_path.string()));

    std::vector<SessionMetrics> sessions;
    Json warnings = Json::array();
    for (const auto& path : list_traces(in.trace_dir)) {
        const auto loaded = load_trace(path);
        for (const auto& w : loaded.warnings) warnings.push_back(w);
        sessions.push_back(compute_session_metrics(loaded.trace, bank, ratings, opt));
    }
    Json report = build_report(sessions, specs, opt);
    report["warnings"] = warnings;
    write_report(report, sessions, specs, out_dir);
    return report;
}

}  // namespace hle
