#pragma once

#include <string>
#include <vector>

#include "hle/core/engine.hpp"

namespace hle {

struct Divergence {
    std::int64_t seq = 0;
    std::string what;
};

struct ReplayReport {
    bool ok = true;
    int snapshots_checked = 0;
    int actions_replayed = 0;
    std::vector<Divergence> divergences;

    Json to_json() const {
        Json d = Json::array();
        for (const auto& x : divergences) d.push_back(Json{{"seq", x.seq}, {"what", x.what}});
        return Json{{"ok", ok}, {"snapshots_checked", snapshots_checked}, {"actions_replayed", actions_replayed},
                    {"divergences", d}};
    }
};

/// Refolds every recorded action through step(), answering LM calls from the
/// recorded responses, and compares the reconstruction with each snapshot.
/// A regenerated event that differs from the recorded one stops the replay;
/// a snapshot mismatch is reported and replay continues from the
/// reconstructed state.
inline ReplayReport replay_verify(const InteractionTrace& trace, const TaskAdapter& adapter) {
    ReplayReport report;
    const auto diverge = [&](std::int64_t seq, std::string what) {
        report.ok = false;
        report.divergences.push_back({seq, std::move(what)});
    };
    const auto& ev = trace.events;
    if (ev.empty() || ev.front().variant != EventKind::state_snapshot) {
        diverge(0, "trace does not open with a state snapshot");
        return report;
    }
    SessionState state;
    try {
        state = ev.front().body.at("state").get<SessionState>();
    } catch (const std::exception& e) {
        diverge(0, std::string("initial snapshot unreadable: ") + e.what());
        return report;
    }
    if (state_hash(state) != ev.front().body.value("hash", std::string{})) diverge(0, "initial snapshot hash mismatch");
    ++report.snapshots_checked;

    ReplayGateway lm(trace);
    std::size_t i = 1;
    while (i < ev.size()) {
        const auto& e = ev[i];
        switch (e.variant) {
            case EventKind::user_action: {
                UserAction action;
                try {
                    action = e.body.at("action").get<UserAction>();
                } catch (const std::exception& x) {
                    diverge(e.seq, std::string("unreadable action: ") + x.what());
                    return report;
                }
                auto r = step(state, action, adapter, lm, e.seq);
                for (std::size_t k = 0; k < r.events.size(); ++k) {
                    if (i + k >= ev.size()) {
                        diverge(r.events[k].seq, "trace ends before the regenerated event");
                        return report;
                    }
                    if (canonical(Json(r.events[k])) != canonical(Json(ev[i + k]))) {
                        diverge(ev[i + k].seq, "regenerated event differs from the recorded one");
                        return report;
                    }
                }
                ++report.actions_replayed;
                i += r.events.size();
                state = std::move(r.state);
                break;
            }
            case EventKind::state_snapshot: {
                ++report.snapshots_checked;
                const bool same_hash = e.body.value("hash", std::string{}) == state_hash(state);
                const bool same_state = e.body.contains("state") && canonical(e.body.at("state")) == canonical(Json(state));
                if (!same_hash || !same_state) diverge(e.seq, "snapshot does not match the reconstructed state");
                ++i;
                break;
            }
            case EventKind::session_end:
                if (e.body.value("hash", std::string{}) != state_hash(state)) diverge(e.seq, "final state hash mismatch");
                if (i + 1 != ev.size()) diverge(e.seq, "events after session_end");
                ++i;
                break;
            default:
                diverge(e.seq, "event not produced by any recorded action");
                return report;
        }
    }
    return report;
}

}  // namespace hle
