#pragma once

#include <cstdlib>
#include <map>
#include <string>

#include <httplib.h>
// <resolv.h> leaks this macro and it collides with Eigen parameter names
#undef _res

#include "hle/lm/gateway.hpp"

namespace hle {

/// Per-model endpoint settings from the gateway config file.
struct ModelEndpoint {
    std::string model_id;
    std::string url;        // e.g. http://localhost:8080/v1/completions
    std::string auth_env;   // name of the env var holding the bearer token; may be empty
    std::string api_model;  // model name sent on the wire; defaults to model_id
    double timeout_s = 30.0;
};

inline ModelEndpoint parse_model_endpoint(const std::string& model_id, const Json& j) {
    ModelEndpoint e;
    e.model_id = model_id;
    e.url = j.at("endpoint").get<std::string>();
    e.auth_env = j.value("auth_env", std::string{});
    e.api_model = j.value("api_model", model_id);
    if (j.contains("defaults")) e.timeout_s = j.at("defaults").value("timeout_s", e.timeout_s);
    return e;
}

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

inline SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::invalid_argument, "endpoint without scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

/// Completion-style JSON API client: {model, prompt, temperature, top_k,
/// max_tokens, stop, n} -> {choices: [{text, finish_reason}]}.
class HttpBackend final : public LmBackend {
public:
    explicit HttpBackend(ModelEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

    std::string model_id() const override { return endpoint_.model_id; }

    std::vector<Completion> complete(const Prompt& prompt, const DecodingParams& params) override {
        params.validate();
        const auto [base, path] = split_url(endpoint_.url);
        httplib::Client client(base);
        const auto secs = static_cast<time_t>(endpoint_.timeout_s);
        const auto usecs = static_cast<time_t>((endpoint_.timeout_s - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);

        httplib::Headers headers;
        if (!endpoint_.auth_env.empty()) {
            if (const char* token = std::getenv(endpoint_.auth_env.c_str())) {
                headers.emplace("Authorization", std::string("Bearer ") + token);
            }
        }
        Json body{{"model", endpoint_.api_model},
                  {"prompt", prompt.text},
                  {"temperature", params.temperature},
                  {"max_tokens", params.max_tokens},
                  {"stop", params.stop_sequences},
                  {"n", params.num_completions}};
        if (params.top_k) body["top_k"] = *params.top_k;

        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            throw Error(ErrorCode::backend_failure,
                        endpoint_.url + " unreachable: " + httplib::to_string(res.error()));
        }
        if (res->status == 429) throw Error(ErrorCode::rate_limited, endpoint_.url);
        if (res->status < 200 || res->status >= 300) {
            throw Error(ErrorCode::backend_failure, endpoint_.url + " returned HTTP " + std::to_string(res->status));
        }
        std::vector<Completion> out;
        try {
            const auto j = Json::parse(res->body);
            for (const auto& choice : j.at("choices")) {
                Completion c;
                c.text = choice.at("text").get<std::string>();
                const auto reason = choice.value("finish_reason", std::string{});
                c.finish_reason = reason == "stop" ? FinishReason::stop_sequence
                                  : reason == "length" ? FinishReason::length
                                                       : FinishReason::backend;
                out.push_back(std::move(c));
            }
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::backend_failure, std::string("malformed completion response: ") + e.what());
        }
        return out;
    }

private:
    ModelEndpoint endpoint_;
};

}  // namespace hle
