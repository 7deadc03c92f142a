#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "chatea/kg.hpp"
#include "chatea/rng.hpp"

namespace chatea {

enum class Role { System, User, Assistant };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        default: return "assistant";
    }
}

inline Role role_from_name(const std::string& s) {
    if (s == "system") return Role::System;
    if (s == "user") return Role::User;
    if (s == "assistant") return Role::Assistant;
    throw std::invalid_argument("unknown chat role: " + s);
}

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;

    std::uint64_t digest() const {
        std::uint64_t h = fnv1a(model);
        char buf[64];
        std::snprintf(buf, sizeof buf, "|t=%.6f|m=%d", temperature, max_tokens);
        h = fnv1a(buf, std::strlen(buf), h);
        for (const auto& m : messages) {
            h = fnv1a(role_name(m.role), h);
            h = fnv1a("\x1f", h);
            h = fnv1a(m.content, h);
            h = fnv1a("\x1e", h);
        }
        return h;
    }
};

struct ChatReply {
    std::string content;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t latency_us = 0;
    bool estimated_tokens = false;
};

class ChatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Retryable: connection failures, timeouts, 429 and 5xx statuses.
class TransportError : public ChatError {
public:
    using ChatError::ChatError;
};

// Non-retryable server rejection; carries the response body verbatim.
class ApiError : public ChatError {
public:
    ApiError(int status, const std::string& body)
        : ChatError("chat API error, status " + std::to_string(status) + ": " + body),
          status_(status),
          body_(body) {}
    int status() const { return status_; }
    const std::string& body() const { return body_; }

private:
    int status_;
    std::string body_;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatReply send(const ChatRequest& request) = 0;
    virtual std::string id() const = 0;
};

// Documented token estimate for backends that report no usage: the number of
// whitespace-separated pieces of the text.
inline std::int64_t estimate_tokens(const std::string& text) {
    std::int64_t n = 0;
    bool in_piece = false;
    for (char c : text) {
        const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!ws && !in_piece) ++n;
        in_piece = !ws;
    }
    return n;
}

inline std::int64_t estimate_tokens(const ChatRequest& request) {
    std::int64_t n = 0;
    for (const auto& m : request.messages) n += estimate_tokens(m.content);
    return n;
}

// Bounds the number of in-flight chat calls.
class RateLimiter {
public:
    explicit RateLimiter(std::size_t max_in_flight = 4) : limit_(max_in_flight ? max_in_flight : 1) {}

    class Guard {
    public:
        explicit Guard(RateLimiter& limiter) : limiter_(limiter) { limiter_.acquire(); }
        ~Guard() { limiter_.release(); }
        Guard(const Guard&) = delete;
        Guard& operator=(const Guard&) = delete;

    private:
        RateLimiter& limiter_;
    };

private:
    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return in_flight_ < limit_; });
        ++in_flight_;
    }
    void release() {
        {
            std::lock_guard lock(mu_);
            --in_flight_;
        }
        cv_.notify_one();
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t limit_;
    std::size_t in_flight_ = 0;
};

// Token and time accounting, per target entity and global. Time is the sum of
// reply latencies, so replayed runs reproduce it exactly.
class UsageLedger {
public:
    struct Slice {
        std::int64_t prompt_tokens = 0;
        std::int64_t completion_tokens = 0;
        std::int64_t latency_us = 0;
        std::int64_t calls = 0;
        bool estimated = false;

        std::int64_t total_tokens() const { return prompt_tokens + completion_tokens; }

        Slice& operator+=(const Slice& o) {
            prompt_tokens += o.prompt_tokens;
            completion_tokens += o.completion_tokens;
            latency_us += o.latency_us;
            calls += o.calls;
            estimated = estimated || o.estimated;
            return *this;
        }
        bool operator==(const Slice&) const = default;
    };

    void record(EntityId target, const ChatReply& reply) {
        Slice s;
        s.prompt_tokens = reply.prompt_tokens;
        s.completion_tokens = reply.completion_tokens;
        s.latency_us = reply.latency_us;
        s.calls = 1;
        s.estimated = reply.estimated_tokens;
        std::lock_guard lock(mu_);
        per_target_[target] += s;
        global_ += s;
    }

    Slice global() const {
        std::lock_guard lock(mu_);
        return global_;
    }

    Slice for_target(EntityId target) const {
        std::lock_guard lock(mu_);
        auto it = per_target_.find(target);
        return it == per_target_.end() ? Slice{} : it->second;
    }

    std::map<EntityId, Slice> per_target() const {
        std::lock_guard lock(mu_);
        return per_target_;
    }

private:
    mutable std::mutex mu_;
    std::map<EntityId, Slice> per_target_;
    Slice global_;
};

struct RetryPolicy {
    std::size_t max_attempts = 3;
    std::chrono::milliseconds initial_backoff{200};

    std::chrono::milliseconds backoff(std::size_t attempt) const {
        return initial_backoff * (std::size_t{1} << attempt);
    }
};

// Shared front door to any backend: admission limiting, retry with
// exponential backoff on transient failures, and usage recording. Safe to
// call from multiple workers.
class ChatClient {
public:
    ChatClient(std::shared_ptr<ChatBackend> backend, RetryPolicy retry = {},
               std::shared_ptr<RateLimiter> limiter = nullptr,
               std::shared_ptr<UsageLedger> ledger = nullptr)
        : backend_(std::move(backend)),
          retry_(retry),
          limiter_(limiter ? std::move(limiter) : std::make_shared<RateLimiter>()),
          ledger_(std::move(ledger)) {}

    ChatReply chat(const ChatRequest& request, EntityId accounting_target = -1) {
        RateLimiter::Guard guard(*limiter_);
        std::size_t attempt = 0;
        while (true) {
            try {
                ChatReply reply = backend_->send(request);
                if (ledger_ && accounting_target >= 0) ledger_->record(accounting_target, reply);
                if (observer_) observer_(request, reply);
                return reply;
            } catch (const TransportError&) {
                ++attempt;
                if (attempt >= retry_.max_attempts) throw;
                std::this_thread::sleep_for(retry_.backoff(attempt - 1));
            }
        }
    }

    using Observer = std::function<void(const ChatRequest&, const ChatReply&)>;
    void set_observer(Observer obs) { observer_ = std::move(obs); }

    const std::shared_ptr<UsageLedger>& ledger() const { return ledger_; }
    const std::shared_ptr<ChatBackend>& backend() const { return backend_; }

private:
    std::shared_ptr<ChatBackend> backend_;
    RetryPolicy retry_;
    std::shared_ptr<RateLimiter> limiter_;
    std::shared_ptr<UsageLedger> ledger_;
    Observer observer_;
};

}  // namespace chatea
