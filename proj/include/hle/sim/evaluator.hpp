#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "hle/metrics/text_metrics.hpp"
#include "hle/metrics/trace_metrics.hpp"
#include "hle/store/trace_file.hpp"

namespace hle::sim {

/// Stand-in for third-party raters. Summaries get 3 ratings per criterion,
/// metaphorical sentences 2, each a 1-5 likert score driven by simple text
/// features plus per-rater noise. Output shape:
/// {"evaluations": [{session_id, metric, unit_index, rating, evaluator}]}.
struct EvaluatorConfig {
    int summary_raters = 3;
    int sentence_raters = 2;
    std::uint64_t seed = 0;
};

namespace eval_detail {

inline int to_likert(double v) { return static_cast<int>(std::clamp(std::lround(v), 1L, 5L)); }

inline double noise(std::uint64_t seed, std::string_view key, int rater) {
    const auto h = splitmix64(seed ^ fnv1a64(key) ^ splitmix64(static_cast<std::uint64_t>(rater) + 1));
    return (static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5) * 1.6;
}

inline Json rating(const std::string& session, const std::string& metric, int unit, double value, int rater) {
    return Json{{"session_id", session},
                {"metric", metric},
                {"unit_index", unit},
                {"rating", to_likert(value)},
                {"evaluator", "rater-" + std::to_string(rater)}};
}

}  // namespace eval_detail

inline Json evaluate_traces(const std::vector<InteractionTrace>& traces, const EvaluatorConfig& cfg = {}) {
    using namespace eval_detail;
    Json out = Json::array();
    for (const auto& t : traces) {
        if (t.task_kind == TaskKind::summarization) {
            const auto state = final_state(t);
            int unit = 0;
            for (const auto& h : state.hidden.at("history")) {
                const auto summary = h.at("model_summary").get<std::string>();
                const auto doc = h.at("document").get<std::string>();
                const double dens = density(summary, doc);
                const double words = static_cast<double>(text::word_count(summary));
                const auto key = t.session_id + "/" + std::to_string(unit);
                for (int r = 0; r < cfg.summary_raters; ++r) {
                    // copied text reads as faithful, long text as less focused
                    out.push_back(rating(t.session_id, "consistency", unit,
                                         2.4 + std::min(dens, 12.0) / 5.0 + noise(cfg.seed, key + "c", r), r));
                    out.push_back(rating(t.session_id, "relevance", unit,
                                         4.4 - std::max(0.0, words - 12.0) / 8.0 + noise(cfg.seed, key + "r", r), r));
                    out.push_back(rating(t.session_id, "coherency", unit,
                                         3.2 + std::min(dens, 6.0) / 6.0 + noise(cfg.seed, key + "h", r), r));
                }
                ++unit;
            }
        } else if (t.task_kind == TaskKind::metaphor) {
            const auto state = final_state(t);
            const auto seed_words = text::normalized_tokens(state.visible.at("seed_metaphor").get<std::string>());
            int unit = 0;
            for (const auto& e : state.hidden.at("sentence_log")) {
                const auto sentence = e.at("text").get<std::string>();
                const auto toks = text::normalized_tokens(sentence);
                int overlap = 0;
                for (const auto& w : toks) overlap += std::count(seed_words.begin(), seed_words.end(), w) ? 1 : 0;
                const double len = static_cast<double>(toks.size());
                const auto key = t.session_id + "/" + std::to_string(unit);
                for (int r = 0; r < cfg.sentence_raters; ++r) {
                    out.push_back(rating(t.session_id, "aptness", unit, 2.8 + 0.5 * std::min(overlap, 2) +
                                                                            noise(cfg.seed, key + "a", r), r));
                    out.push_back(rating(t.session_id, "specificity", unit,
                                         2.5 + std::min(len, 12.0) / 8.0 + noise(cfg.seed, key + "s", r), r));
                    out.push_back(rating(t.session_id, "imageability", unit,
                                         3.0 + (e.at("from_suggestion").is_null() ? 0.0 : 0.3) +
                                             noise(cfg.seed, key + "i", r), r));
                }
                ++unit;
            }
        }
    }
    return Json{{"evaluations", out}};
}

/// Rates every trace under trace_dir and writes trace_dir/evaluations.json.
inline std::filesystem::path write_evaluations(const std::filesystem::path& trace_dir, const EvaluatorConfig& cfg = {}) {
    std::vector<InteractionTrace> traces;
    for (const auto& p : list_traces(trace_dir)) traces.push_back(load_trace(p).trace);
    const auto path = trace_dir / "evaluations.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_failure, "cannot write " + path.string());
    out << evaluate_traces(traces, cfg).dump(1) << "\n";
    return path;
}

}  // namespace hle::sim
