#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hle/core/types.hpp"

namespace hle {

inline constexpr int kTraceSchemaVersion = 1;

struct TraceHeader {
    std::string session_id;
    TaskKind task_kind = TaskKind::dialogue;
    std::string model_id;
    std::string user_id;
    Millis created_at = 0;
    int schema_version = kTraceSchemaVersion;
};

inline TraceHeader header_of(const InteractionTrace& t) {
    return {t.session_id, t.task_kind, t.model_id, t.user_id, t.created_at, kTraceSchemaVersion};
}

inline Json header_json(const TraceHeader& h) {
    return Json{{"schema_version", h.schema_version}, {"session_id", h.session_id}, {"task_kind", h.task_kind},
                {"model_id", h.model_id},             {"user_id", h.user_id},       {"created_at", h.created_at}};
}

inline std::string event_line(const TraceEvent& e) { return canonical(Json(e)) + "\n"; }

/// Whole-file serialization; identical to what a TraceWriter produces.
inline std::string serialize_trace(const InteractionTrace& t) {
    std::string out = canonical(header_json(header_of(t))) + "\n";
    for (const auto& e : t.events) out += event_line(e);
    return out;
}

/// traces/<task>/<session_id>.jsonl
inline std::filesystem::path trace_path(const std::filesystem::path& root, TaskKind task, const std::string& session_id) {
    return root / to_string(task) / (session_id + ".jsonl");
}

enum class Durability { fsync, flush };

/// Append-only writer for one trace file. Every append is written with a
/// single write(2) and, by default, fsync'd before returning.
class TraceWriter {
public:
    TraceWriter(const std::filesystem::path& path, const TraceHeader& header, Durability durability = Durability::fsync)
        : path_(path), durability_(durability) {
        std::error_code ec;
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
        fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
        if (fd_ < 0) throw Error(ErrorCode::io_failure, "cannot create " + path.string() + ": " + std::strerror(errno));
        write_all(canonical(header_json(header)) + "\n");
    }

    TraceWriter(const TraceWriter&) = delete;
    TraceWriter& operator=(const TraceWriter&) = delete;

    ~TraceWriter() {
        if (fd_ >= 0) ::close(fd_);
    }

    void append(const TraceEvent& e) {
        if (e.seq != next_seq_) {
            throw Error(ErrorCode::seq_gap,
                        "expected seq " + std::to_string(next_seq_) + ", got " + std::to_string(e.seq));
        }
        write_all(event_line(e));
        ++next_seq_;
    }

    std::int64_t next_seq() const { return next_seq_; }
    const std::filesystem::path& path() const { return path_; }

private:
    void write_all(const std::string& bytes) {
        std::size_t done = 0;
        while (done < bytes.size()) {
            const auto n = ::write(fd_, bytes.data() + done, bytes.size() - done);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw Error(ErrorCode::io_failure, "write to " + path_.string() + ": " + std::strerror(errno));
            }
            done += static_cast<std::size_t>(n);
        }
        if (durability_ == Durability::fsync && ::fsync(fd_) != 0) {
            throw Error(ErrorCode::io_failure, "fsync " + path_.string() + ": " + std::strerror(errno));
        }
    }

    std::filesystem::path path_;
    Durability durability_;
    int fd_ = -1;
    std::int64_t next_seq_ = 0;
};

inline void save_trace(const InteractionTrace& t, const std::filesystem::path& path,
                       Durability durability = Durability::flush) {
    TraceWriter w(path, header_of(t), durability);
    for (const auto& e : t.events) w.append(e);
}

struct LoadedTrace {
    InteractionTrace trace;
    bool truncated_tail = false;
    std::vector<std::string> warnings;
};

/// Structural checks shared by the loader: dense seq and request/response
/// pairing. A request still waiting for its response is tolerated only as
/// the final event (the session crashed mid-query).
inline void validate_trace(const InteractionTrace& t) {
    std::set<std::string> open, answered;
    for (std::size_t i = 0; i < t.events.size(); ++i) {
        const auto& e = t.events[i];
        if (e.seq != static_cast<std::int64_t>(i)) {
            throw Error(ErrorCode::seq_gap, "seq " + std::to_string(e.seq) + " at position " + std::to_string(i));
        }
        if (e.variant == EventKind::lm_request) {
            open.insert(e.body.at("request_id").get<std::string>());
        } else if (e.variant == EventKind::lm_response) {
            const auto id = e.body.at("request_id").get<std::string>();
            if (!open.erase(id) || !answered.insert(id).second) {
                throw Error(ErrorCode::schema_mismatch, "lm_response " + id + " has no pending request");
            }
        }
    }
    if (open.size() > 1 || (open.size() == 1 && t.events.back().variant != EventKind::lm_request)) {
        throw Error(ErrorCode::schema_mismatch, "lm_request without a response");
    }
}

inline LoadedTrace parse_trace(std::istream& in, const std::string& name = "<stream>") {
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string data = buffer.str();

    LoadedTrace out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool header_done = false;
    while (pos < data.size()) {
        const auto nl = data.find('\n', pos);
        const bool complete = nl != std::string::npos;
        const std::string line = data.substr(pos, complete ? nl - pos : std::string::npos);
        pos = complete ? nl + 1 : data.size();
        ++line_no;

        Json j;
        bool parsed = true;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error&) {
            parsed = false;
        }
        if (!header_done) {
            if (!parsed || !complete || !j.is_object() || !j.contains("schema_version")) {
                throw Error(ErrorCode::corrupt_header, name + ": unreadable header");
            }
            if (j.at("schema_version") != kTraceSchemaVersion) {
                throw Error(ErrorCode::schema_mismatch,
                            name + ": schema_version " + j.at("schema_version").dump() + " is not supported");
            }
            try {
                out.trace.session_id = j.at("session_id").get<std::string>();
                out.trace.task_kind = j.at("task_kind").get<TaskKind>();
                out.trace.model_id = j.at("model_id").get<std::string>();
                out.trace.user_id = j.at("user_id").get<std::string>();
                out.trace.created_at = j.at("created_at").get<Millis>();
            } catch (const Json::exception& e) {
                throw Error(ErrorCode::corrupt_header, name + ": " + e.what());
            }
            header_done = true;
            continue;
        }
        if (!complete || !parsed) {
            if (pos < data.size()) throw Error(ErrorCode::io_failure, name + ": corrupt record at line " + std::to_string(line_no));
            out.truncated_tail = true;
            out.warnings.push_back(name + ": discarded partial record at line " + std::to_string(line_no));
            break;
        }
        try {
            out.trace.events.push_back(j.get<TraceEvent>());
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::schema_mismatch, name + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!header_done) throw Error(ErrorCode::corrupt_header, name + ": empty file");
    validate_trace(out.trace);
    return out;
}

inline LoadedTrace load_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    return parse_trace(in, path.string());
}

/// Every *.jsonl below root, sorted by path.
inline std::vector<std::filesystem::path> list_traces(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::exists(root)) return out;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace hle
