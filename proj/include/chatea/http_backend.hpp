#pragma once

#include <chrono>
#include <cstdlib>
#include <string>

#include <httplib.h>
// glibc's resolv.h, pulled in by httplib, leaks a `_res` macro that breaks
// Eigen's sources when both end up in one translation unit.
#ifdef _res
#undef _res
#endif
#include <json.hpp>

#include "chatea/backend.hpp"

namespace chatea {

struct HttpBackendConfig {
    std::string base_url;  // e.g. "http://localhost:8089/v1"
    std::string model;
    std::string api_key_env = "CHATEA_API_KEY";
    int timeout_seconds = 120;
};

// Chat-completion client: POST {base_url}/chat/completions with bearer auth
// from the configured environment variable. 429 and 5xx raise TransportError
// (retried by ChatClient); other non-2xx surface the body verbatim.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
        const auto scheme_end = cfg_.base_url.find("://");
        if (scheme_end == std::string::npos)
            throw std::invalid_argument("base_url must include a scheme: " + cfg_.base_url);
        const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            host_ = cfg_.base_url;
            path_prefix_ = "";
        } else {
            host_ = cfg_.base_url.substr(0, path_start);
            path_prefix_ = cfg_.base_url.substr(path_start);
        }
        if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
    }

    ChatReply send(const ChatRequest& request) override {
        httplib::Client client(host_);
        client.set_connection_timeout(cfg_.timeout_seconds);
        client.set_read_timeout(cfg_.timeout_seconds);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
        for (const auto& m : request.messages)
            msgs.push_back({{"role", role_name(m.role)}, {"content", m.content}});
        const nlohmann::ordered_json body{{"model", request.model},
                                          {"messages", msgs},
                                          {"temperature", request.temperature},
                                          {"max_tokens", request.max_tokens}};

        const auto start = std::chrono::steady_clock::now();
        auto res = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(),
                               "application/json");
        const auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();

        if (!res) throw TransportError("connection to " + host_ + " failed: " +
                                       httplib::to_string(res.error()));
        if (res->status == 429 || res->status >= 500)
            throw TransportError("transient status " + std::to_string(res->status) + ": " + res->body);
        if (res->status < 200 || res->status >= 300) throw ApiError(res->status, res->body);

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ApiError(res->status, std::string("unparseable body: ") + e.what());
        }

        ChatReply reply;
        reply.latency_us = elapsed;
        try {
            reply.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw ApiError(res->status, "missing choices[0].message.content: " + res->body);
        }
        if (j.contains("usage")) {
            reply.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
            reply.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
        }
        if (reply.prompt_tokens == 0 && reply.completion_tokens == 0) {
            reply.prompt_tokens = estimate_tokens(request);
            reply.completion_tokens = estimate_tokens(reply.content);
            reply.estimated_tokens = true;
        }
        return reply;
    }

    std::string id() const override { return "http:" + host_ + "/" + cfg_.model; }

    const HttpBackendConfig& config() const { return cfg_; }

    // Startup reachability probe; any HTTP status counts as reachable.
    bool reachable() const {
        httplib::Client client(host_);
        client.set_connection_timeout(5);
        auto res = client.Get(path_prefix_.empty() ? "/" : path_prefix_);
        return static_cast<bool>(res);
    }

private:
    HttpBackendConfig cfg_;
    std::string host_;
    std::string path_prefix_;
    std::string api_key_;
};

}  // namespace chatea
