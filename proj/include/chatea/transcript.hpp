#pragma once

#include <deque>
#include <memory>
#include <fstream>
#include <mutex>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "chatea/backend.hpp"

namespace chatea {

// JSONL transcript: one {"request": ..., "reply": ...} object per line.
// Recording any live run turns it into a replayable fixture.

struct TranscriptRecord {
    ChatRequest request;
    ChatReply reply;
};

inline nlohmann::ordered_json request_to_json(const ChatRequest& r) {
    nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
    for (const auto& m : r.messages)
        msgs.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    return nlohmann::ordered_json{{"model", r.model},
                                  {"messages", msgs},
                                  {"temperature", r.temperature},
                                  {"max_tokens", r.max_tokens}};
}

inline ChatRequest request_from_json(const nlohmann::json& j) {
    ChatRequest r;
    r.model = j.at("model").get<std::string>();
    for (const auto& m : j.at("messages"))
        r.messages.push_back({role_from_name(m.at("role").get<std::string>()),
                              m.at("content").get<std::string>()});
    r.temperature = j.at("temperature").get<double>();
    r.max_tokens = j.at("max_tokens").get<int>();
    return r;
}

inline nlohmann::ordered_json reply_to_json(const ChatReply& r) {
    return nlohmann::ordered_json{{"content", r.content},
                                  {"prompt_tokens", r.prompt_tokens},
                                  {"completion_tokens", r.completion_tokens},
                                  {"latency_us", r.latency_us},
                                  {"estimated_tokens", r.estimated_tokens}};
}

inline ChatReply reply_from_json(const nlohmann::json& j) {
    ChatReply r;
    r.content = j.at("content").get<std::string>();
    r.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
    r.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
    r.latency_us = j.at("latency_us").get<std::int64_t>();
    r.estimated_tokens = j.value("estimated_tokens", false);
    return r;
}

inline std::vector<TranscriptRecord> load_transcript(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open transcript: " + path);
    std::vector<TranscriptRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        records.push_back({request_from_json(j.at("request")), reply_from_json(j.at("reply"))});
    }
    return records;
}

// Appends request/reply pairs to a JSONL file; writes are serialized.
class TranscriptRecorder {
public:
    explicit TranscriptRecorder(const std::string& path)
        : out_(path, std::ios::trunc) {
        if (!out_) throw std::runtime_error("cannot open transcript for write: " + path);
    }

    void record(const ChatRequest& request, const ChatReply& reply) {
        nlohmann::ordered_json j{{"request", request_to_json(request)},
                                 {"reply", reply_to_json(reply)}};
        std::lock_guard lock(mu_);
        out_ << j.dump() << '\n';
        out_.flush();
    }

private:
    std::mutex mu_;
    std::ofstream out_;
};

// Raised when a replay meets a request the transcript does not contain.
class ScriptMissError : public ChatError {
public:
    using ChatError::ChatError;
};

// Replays recorded replies. Requests match by content digest; repeated
// identical requests consume recorded replies in order.
class ScriptedBackend : public ChatBackend {
public:
    explicit ScriptedBackend(std::vector<TranscriptRecord> records, std::string id = "scripted") {
        id_ = std::move(id);
        for (auto& rec : records) by_digest_[rec.request.digest()].push_back(std::move(rec.reply));
    }

    static std::shared_ptr<ScriptedBackend> from_file(const std::string& path) {
        return std::make_shared<ScriptedBackend>(load_transcript(path), "scripted:" + path);
    }

    ChatReply send(const ChatRequest& request) override {
        std::lock_guard lock(mu_);
        auto it = by_digest_.find(request.digest());
        if (it == by_digest_.end() || it->second.empty()) {
            std::string head = request.messages.empty() ? "" : request.messages.back().content;
            if (head.size() > 160) head.resize(160);
            throw ScriptMissError("transcript has no reply for request digest " +
                                  std::to_string(request.digest()) + "; last message begins: " + head);
        }
        ChatReply reply = it->second.front();
        it->second.pop_front();
        return reply;
    }

    std::string id() const override { return id_; }

    std::size_t remaining() const {
        std::lock_guard lock(mu_);
        std::size_t n = 0;
        for (const auto& [_, q] : by_digest_) n += q.size();
        return n;
    }

private:
    mutable std::mutex mu_;
    std::string id_;
    std::unordered_map<std::uint64_t, std::deque<ChatReply>> by_digest_;
};

}  // namespace chatea
