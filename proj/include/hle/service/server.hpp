#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include <httplib.h>
#undef _res

#include "hle/config.hpp"
#include "hle/core/engine.hpp"
#include "hle/store/trace_file.hpp"
#include "hle/tasks/registry.hpp"

namespace hle::service {

inline Millis wall_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

struct ServiceOptions {
    std::filesystem::path traces_dir;
    Durability durability = Durability::fsync;
    std::function<Millis()> clock = wall_clock_ms;
    int snapshot_every = 20;
};

/// Session lifecycle behind the HTTP API. Every call on one session is
/// serialized by that session's mutex; different sessions proceed in
/// parallel. Responses carry only visible fields.
class SessionService {
public:
    SessionService(AppConfig config, ServiceOptions options)
        : config_(std::move(config)),
          options_(std::move(options)),
          banks_(load_banks(config_.banks_dir.string())),
          surveys_(SurveyBank::load(config_.survey_bank.string())),
          blocklist_(load_config_blocklist(config_)) {
        if (!options_.clock) options_.clock = wall_clock_ms;
    }

    Json create(TaskKind task, const std::string& model_id, const std::string& user_id,
                std::optional<std::uint64_t> seed = std::nullopt) {
        auto s = std::make_shared<Live>();
        s->backend = make_backend(config_, model_id);
        s->gateway = std::make_unique<LiveGateway>(*s->backend, blocklist_);
        s->adapter = make_adapter(task, &surveys_, config_.task_options(task));
        const Millis now = options_.clock();
        std::string id;
        {
            std::unique_lock lock(registry_mu_);
            const std::uint64_t base = seed.value_or(splitmix64(static_cast<std::uint64_t>(now) ^ ++counter_));
            for (std::uint64_t k = 0;; ++k) {
                id = to_string(task) + "-" + hex64(splitmix64(base + k)).substr(0, 12);
                if (!sessions_.count(id)) break;
            }
            sessions_[id] = s;
        }
        std::lock_guard guard(s->mu);
        const std::uint64_t state_seed = seed.value_or(splitmix64(fnv1a64(id)));
        s->state = make_initial_state(*s->adapter, banks_, id, state_seed, now);
        s->trace = InteractionTrace{id, task, model_id, user_id, now, {}};
        s->writer = std::make_unique<TraceWriter>(trace_path(options_.traces_dir, task, id), header_of(s->trace),
                                                  options_.durability);
        push(*s, TraceEvent{0, EventKind::state_snapshot, snapshot_body(s->state), s->state.clock});
        return view(*s);
    }

    Json state(const std::string& id) {
        auto s = find(id);
        std::lock_guard guard(s->mu);
        return view(*s);
    }

    /// Applies one user action stamped with the server clock. The returned
    /// object has the new view plus "error" (null when accepted).
    Json act(const std::string& id, UserAction action) {
        auto s = find(id);
        std::lock_guard guard(s->mu);
        if (s->ended) throw Error(ErrorCode::illegal_action, "session has ended (" + s->end_reason + ")");
        action.timestamp = std::max(options_.clock(), s->state.clock);
        auto r = step(s->state, action, *s->adapter, *s->gateway, next_seq(*s));
        for (auto& e : r.events) push(*s, std::move(e));
        s->state = std::move(r.state);
        if (r.finished) {
            end(*s, "finish");
        } else if (auto t = terminal_reason(s->state, *s->adapter, s->state.clock)) {
            if (!s->adapter->surveys() || s->state.hidden.contains("survey")) end(*s, *t);
        }
        if (!s->ended && next_seq(*s) - s->last_snapshot >= options_.snapshot_every) {
            s->last_snapshot = next_seq(*s);
            push(*s, TraceEvent{next_seq(*s), EventKind::state_snapshot, snapshot_body(s->state), s->state.clock});
        }
        Json out = view(*s);
        out["error"] = r.error ? error_body(*r.error) : Json(nullptr);
        return out;
    }

    Json survey(const std::string& id, const Json& payload) {
        return act(id, UserAction::survey(payload, 0));
    }

    InteractionTrace trace(const std::string& id) {
        auto s = find(id);
        std::lock_guard guard(s->mu);
        return s->trace;
    }

    std::size_t session_count() const {
        std::shared_lock lock(registry_mu_);
        return sessions_.size();
    }

    const AppConfig& config() const { return config_; }

private:
    struct Live {
        std::mutex mu;
        std::unique_ptr<LmBackend> backend;
        std::unique_ptr<LiveGateway> gateway;
        std::unique_ptr<TaskAdapter> adapter;
        std::unique_ptr<TraceWriter> writer;
        SessionState state;
        InteractionTrace trace;
        std::int64_t last_snapshot = 0;
        bool ended = false;
        std::string end_reason;
    };

    std::shared_ptr<Live> find(const std::string& id) const {
        std::shared_lock lock(registry_mu_);
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) throw Error(ErrorCode::not_found, "no session " + id);
        return it->second;
    }

    static std::int64_t next_seq(const Live& s) { return static_cast<std::int64_t>(s.trace.events.size()); }

    static void push(Live& s, TraceEvent e) {
        s.writer->append(e);
        s.trace.events.push_back(std::move(e));
    }

    void end(Live& s, const std::string& reason) {
        if (s.trace.events.back().variant != EventKind::state_snapshot) {
            push(s, TraceEvent{next_seq(s), EventKind::state_snapshot, snapshot_body(s.state), s.state.clock});
        }
        push(s, TraceEvent{next_seq(s), EventKind::session_end,
                           Json{{"reason", reason}, {"step_index", s.state.step_index}, {"hash", state_hash(s.state)}},
                           s.state.clock});
        s.ended = true;
        s.end_reason = reason;
    }

    Json view(const Live& s) const {
        const auto& a = *s.adapter;
        Json form = Json::array();
        for (const auto& item : a.survey_form(s.state, SurveyLevel::session)) form.push_back(item);
        const auto timer = a.timer_reason(s.state, options_.clock());
        return Json{{"session_id", s.state.session_id},
                    {"task", s.state.task_kind},
                    {"model_id", s.trace.model_id},
                    {"state_version", s.state.step_index},
                    {"visible", s.state.visible},
                    {"finish_allowed", a.finish_allowed(s.state)},
                    {"timer_expired", timer.has_value()},
                    {"survey_submitted", s.state.hidden.contains("survey")},
                    {"session_survey", form},
                    {"ended", s.ended},
                    {"end_reason", s.ended ? Json(s.end_reason) : Json(nullptr)}};
    }

    AppConfig config_;
    ServiceOptions options_;
    TaskBanks banks_;
    SurveyBank surveys_;
    std::vector<std::string> blocklist_;
    mutable std::shared_mutex registry_mu_;
    std::map<std::string, std::shared_ptr<Live>> sessions_;
    std::uint64_t counter_ = 0;
};

inline int http_status(ErrorCode c) {
    switch (c) {
        case ErrorCode::not_found: return 404;
        case ErrorCode::invalid_argument: return 400;
        case ErrorCode::backend_failure:
        case ErrorCode::rate_limited: return 502;
        case ErrorCode::io_failure: return 500;
        default: return 409;
    }
}

/// Status for an action response: 200 when accepted, otherwise by the
/// recorded error code.
inline int action_status(const Json& out) {
    if (out.at("error").is_null()) return 200;
    const auto code = out["error"].value("code", std::string{});
    return code == "BackendFailure" || code == "RateLimited" ? 502 : 409;
}

inline Json trace_json(const InteractionTrace& t) {
    Json j = header_json(header_of(t));
    j["events"] = Json::array();
    for (const auto& e : t.events) j["events"].push_back(e);
    return j;
}

/// Registers the JSON API on an httplib server.
inline void install_routes(httplib::Server& http, SessionService& svc) {
    const auto reply = [](httplib::Response& res, int status, const Json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    };
    // Wraps a handler so errors become {"error": {code, message}} responses.
    const auto guarded = [reply](auto fn) {
        return [reply, fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const Error& e) {
                reply(res, http_status(e.code()), Json{{"error", error_body(e)}});
            } catch (const Json::exception& e) {
                reply(res, 400, Json{{"error", {{"code", "InvalidArgument"}, {"message", e.what()}}}});
            }
        };
    };

    http.Get("/health", [reply](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, Json{{"status", "ok"}});
    });
    http.Post("/sessions", guarded([&svc, reply](const httplib::Request& req, httplib::Response& res) {
                  const Json body = Json::parse(req.body);
                  std::optional<std::uint64_t> seed;
                  if (body.contains("seed")) seed = body.at("seed").get<std::uint64_t>();
                  reply(res, 201,
                        svc.create(parse_task_kind(body.at("task").get<std::string>()),
                                   body.at("model").get<std::string>(), body.value("user_id", std::string("anonymous")),
                                   seed));
              }));
    http.Get(R"(/sessions/([^/]+)/state)", guarded([&svc, reply](const httplib::Request& req, httplib::Response& res) {
                 reply(res, 200, svc.state(req.matches[1]));
             }));
    http.Post(R"(/sessions/([^/]+)/actions)",
              guarded([&svc, reply](const httplib::Request& req, httplib::Response& res) {
                  const Json out = svc.act(req.matches[1], Json::parse(req.body).get<UserAction>());
                  reply(res, action_status(out), out);
              }));
    http.Post(R"(/sessions/([^/]+)/survey)",
              guarded([&svc, reply](const httplib::Request& req, httplib::Response& res) {
                  const Json out = svc.survey(req.matches[1], Json::parse(req.body));
                  reply(res, action_status(out), out);
              }));
    http.Get(R"(/traces/([^/]+))", guarded([&svc, reply](const httplib::Request& req, httplib::Response& res) {
                 reply(res, 200, trace_json(svc.trace(req.matches[1])));
             }));
}

}  // namespace hle::service
