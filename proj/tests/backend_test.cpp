#include "chatea/backend.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "chatea/cards.hpp"
#include "chatea/oracle.hpp"
#include "chatea/http_backend.hpp"
#include "chatea/prompts.hpp"
#include "chatea/transcript.hpp"
#include "test_support.hpp"

using namespace chatea;
using chatea::testing::TempDir;
using chatea::testing::make_kg;

namespace {

class FlakyBackend : public ChatBackend {
public:
    explicit FlakyBackend(int failures_before_success) : remaining_(failures_before_success) {}
    ChatReply send(const ChatRequest&) override {
        ++calls;
        if (remaining_-- > 0) throw TransportError("synthetic outage");
        ChatReply r;
        r.content = "ok";
        r.prompt_tokens = 100;
        r.completion_tokens = 50;
        r.latency_us = 1000;
        return r;
    }
    std::string id() const override { return "flaky"; }
    int calls = 0;

private:
    int remaining_;
};

class SlowBackend : public ChatBackend {
public:
    ChatReply send(const ChatRequest&) override {
        const int now = ++in_flight;
        int seen = max_in_flight.load();
        while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --in_flight;
        return ChatReply{"ok", 1, 1, 10, false};
    }
    std::string id() const override { return "slow"; }
    std::atomic<int> in_flight{0};
    std::atomic<int> max_in_flight{0};
};

ChatRequest simple_request(const std::string& text) {
    ChatRequest r;
    r.model = "test-model";
    r.messages.push_back({Role::System, "sys"});
    r.messages.push_back({Role::User, text});
    return r;
}

}  // namespace

TEST(ChatClientTest, RetriesTransientFailures) {
    auto backend = std::make_shared<FlakyBackend>(2);
    RetryPolicy retry;
    retry.max_attempts = 3;
    retry.initial_backoff = std::chrono::milliseconds(1);
    ChatClient client(backend, retry);
    const auto reply = client.chat(simple_request("hello"));
    EXPECT_EQ(reply.content, "ok");
    EXPECT_EQ(backend->calls, 3);
}

TEST(ChatClientTest, ExhaustedRetriesThrowTransport) {
    auto backend = std::make_shared<FlakyBackend>(10);
    RetryPolicy retry;
    retry.max_attempts = 3;
    retry.initial_backoff = std::chrono::milliseconds(1);
    ChatClient client(backend, retry);
    EXPECT_THROW(client.chat(simple_request("hello")), TransportError);
    EXPECT_EQ(backend->calls, 3);
}

TEST(ChatClientTest, ApiErrorsSurfaceVerbatim) {
    class Reject : public ChatBackend {
    public:
        ChatReply send(const ChatRequest&) override {
            throw ApiError(404, "{\"error\": \"no such model\"}");
        }
        std::string id() const override { return "reject"; }
    };
    ChatClient client(std::make_shared<Reject>());
    try {
        client.chat(simple_request("hello"));
        FAIL() << "expected ApiError";
    } catch (const ApiError& e) {
        EXPECT_EQ(e.status(), 404);
        EXPECT_EQ(e.body(), "{\"error\": \"no such model\"}");
    }
}

TEST(UsageLedgerTest, TotalsAreSums) {
    auto ledger = std::make_shared<UsageLedger>();
    ChatClient client(std::make_shared<FlakyBackend>(0), RetryPolicy{}, nullptr, ledger);
    for (int i = 0; i < 3; ++i) client.chat(simple_request("x"), /*target=*/7);

    const auto slice = ledger->for_target(7);
    EXPECT_EQ(slice.prompt_tokens, 300);
    EXPECT_EQ(slice.completion_tokens, 150);
    EXPECT_EQ(slice.calls, 3);

    client.chat(simple_request("y"), 9);
    const auto global = ledger->global();
    UsageLedger::Slice sum;
    for (const auto& [_, s] : ledger->per_target()) sum += s;
    EXPECT_EQ(global, sum);
}

TEST(RateLimiterTest, InFlightNeverExceedsLimit) {
    auto backend = std::make_shared<SlowBackend>();
    const std::size_t limit = 3;
    ChatClient client(backend, RetryPolicy{}, std::make_shared<RateLimiter>(limit));
    std::vector<std::thread> threads;
    for (int t = 0; t < 12; ++t)
        threads.emplace_back([&] { client.chat(simple_request("x")); });
    for (auto& t : threads) t.join();
    EXPECT_LE(backend->max_in_flight.load(), static_cast<int>(limit));
    EXPECT_GE(backend->max_in_flight.load(), 1);
}

TEST(EstimateTokensTest, WhitespacePieces) {
    EXPECT_EQ(estimate_tokens(""), 0);
    EXPECT_EQ(estimate_tokens("one"), 1);
    EXPECT_EQ(estimate_tokens("  two\tpieces \n here "), 3);
}

TEST(TranscriptTest, RoundtripAndReplay) {
    TempDir dir("transcript");
    const std::string path = dir.file("t.jsonl");

    const auto request = simple_request("what is the case-study reply?");
    ChatReply reply;
    reply.content = chatea::testing::read_file(std::string(CHATEA_FIXTURE_DIR
                                                           "/reply_case_output.txt"));
    reply.prompt_tokens = 42;
    reply.completion_tokens = 17;
    reply.latency_us = 123456;
    {
        TranscriptRecorder rec(path);
        rec.record(request, reply);
    }

    const auto records = load_transcript(path);
    ASSERT_EQ(records.size(), 1u);
    EXPECT_EQ(records[0].request.messages, request.messages);
    EXPECT_EQ(records[0].reply.content, reply.content);
    EXPECT_EQ(records[0].reply.latency_us, 123456);

    auto scripted = ScriptedBackend::from_file(path);
    const auto replayed = scripted->send(request);
    EXPECT_EQ(replayed.content, reply.content);  // recorded content verbatim
    // queue exhausted: a second identical request misses
    EXPECT_THROW(scripted->send(request), ScriptMissError);
    EXPECT_THROW(scripted->send(simple_request("unseen")), ScriptMissError);
}

TEST(TranscriptTest, ReplayIsDeterministic) {
    std::vector<TranscriptRecord> records;
    for (int i = 0; i < 5; ++i) {
        TranscriptRecord r;
        r.request = simple_request("q" + std::to_string(i));
        r.reply = {"a" + std::to_string(i), i, i, i * 10, false};
        records.push_back(r);
    }
    ScriptedBackend a(records), b(records);
    for (int i = 4; i >= 0; --i) {  // lookup is by digest, not record order
        EXPECT_EQ(a.send(simple_request("q" + std::to_string(i))).content,
                  "a" + std::to_string(i));
        EXPECT_EQ(b.send(simple_request("q" + std::to_string(i))).content,
                  "a" + std::to_string(i));
    }
    EXPECT_EQ(a.remaining(), 0u);
}

TEST(HttpBackendTest, TalksToLocalServer) {
    httplib::Server server;
    std::string seen_auth, seen_body;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        seen_body = req.body;
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hi there"}}],)"
                        R"("usage":{"prompt_tokens":11,"completion_tokens":3}})",
                        "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("CHATEA_API_KEY", "sk-test", 1);
    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    cfg.model = "test-model";
    HttpChatBackend backend(cfg);
    EXPECT_TRUE(backend.reachable());

    const auto reply = backend.send(simple_request("ping"));
    EXPECT_EQ(reply.content, "hi there");
    EXPECT_EQ(reply.prompt_tokens, 11);
    EXPECT_EQ(reply.completion_tokens, 3);
    EXPECT_FALSE(reply.estimated_tokens);
    EXPECT_EQ(seen_auth, "Bearer sk-test");
    EXPECT_NE(seen_body.find("\"model\":\"test-model\""), std::string::npos);
    EXPECT_NE(seen_body.find("\"messages\":["), std::string::npos);

    server.stop();
    server_thread.join();
}

TEST(HttpBackendTest, TransientAndFatalStatuses) {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        const int n = ++hits;
        if (n == 1) {
            res.status = 500;
            res.set_content("boom", "text/plain");
        } else if (n == 2) {
            res.set_content(R"({"choices":[{"message":{"content":"recovered"}}]})",
                            "application/json");
        } else {
            res.status = 400;
            res.set_content("{\"error\":\"bad body\"}", "application/json");
        }
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    cfg.model = "m";
    auto backend = std::make_shared<HttpChatBackend>(cfg);
    RetryPolicy retry;
    retry.max_attempts = 3;
    retry.initial_backoff = std::chrono::milliseconds(1);
    ChatClient client(backend, retry);

    // 500 retried, then success; usage absent -> estimated counts
    const auto reply = client.chat(simple_request("ping"));
    EXPECT_EQ(reply.content, "recovered");
    EXPECT_TRUE(reply.estimated_tokens);

    // 400 surfaces verbatim, no retry
    try {
        client.chat(simple_request("ping"));
        FAIL() << "expected ApiError";
    } catch (const ApiError& e) {
        EXPECT_EQ(e.status(), 400);
        EXPECT_EQ(e.body(), "{\"error\":\"bad body\"}");
    }
    EXPECT_EQ(hits.load(), 3);

    server.stop();
    server_thread.join();
}

TEST(HttpBackendTest, UnreachableHostFailsTransport) {
    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:1/v1";  // nothing listens on port 1
    cfg.model = "m";
    cfg.timeout_seconds = 1;
    HttpChatBackend backend(cfg);
    EXPECT_FALSE(backend.reachable());
    EXPECT_THROW(backend.send(simple_request("x")), TransportError);
}

namespace {

struct OracleWorld {
    KnowledgeGraph kg1 = make_kg({"Alpha One", "Beta Two"}, {"r"}, {{0, 0, 1, {}, {}}}, "kg1");
    KnowledgeGraph kg2 = make_kg({"Alpha_One", "Beta_Twa"}, {"r"}, {{0, 0, 1, {}, {}}}, "kg2");
    AnchorSet anchors;

    OracleWorld() {
        anchors.pairs = {{0, 0}, {1, 1}};
        anchors.test = anchors.pairs;
    }

    ChatRequest reasoning_request(EntityId main_id, EntityId cand_id) const {
        ChatRequest r;
        r.model = "oracle";
        r.messages.push_back({Role::System, render_system_prompt()});
        r.messages.push_back(
            {Role::User, render_reasoning_prompt(make_card(kg1, main_id, ""),
                                                 make_card(kg2, cand_id, ""))});
        return r;
    }
};

}  // namespace

TEST(OracleBackendTest, GoldGetsPerfectScores) {
    OracleWorld w;
    OracleBackend oracle(w.kg1, w.kg2, w.anchors);
    const auto reply = oracle.send(w.reasoning_request(0, 0));
    EXPECT_EQ(reply.content, canonical_score_line(5, 5, 5, 5));
    const auto parsed = parse_scores(reply.content);
    ASSERT_TRUE(parsed.has_value());
    EXPECT_DOUBLE_EQ(parsed.value().aggregate(), 5.0);
}

TEST(OracleBackendTest, NonGoldStaysBelowThreshold) {
    OracleWorld w;
    OracleBackend oracle(w.kg1, w.kg2, w.anchors);
    const auto reply = oracle.send(w.reasoning_request(0, 1));
    const auto parsed = parse_scores(reply.content);
    ASSERT_TRUE(parsed.has_value());
    EXPECT_LT(parsed.value().aggregate(), 4.0);
    // deterministic for one pair
    EXPECT_EQ(oracle.send(w.reasoning_request(0, 1)).content, reply.content);
}

TEST(OracleBackendTest, RethinkVerdicts) {
    OracleWorld w;
    OracleBackend oracle(w.kg1, w.kg2, w.anchors);
    auto ask = [&](const std::vector<std::pair<std::string, double>>& pairs) {
        ChatRequest r;
        r.model = "oracle";
        r.messages.push_back({Role::System, render_system_prompt()});
        r.messages.push_back({Role::User, render_rethinking_prompt("Alpha One", pairs)});
        return oracle.send(r).content;
    };
    EXPECT_EQ(ask({{"Alpha_One", 5.0}, {"Beta_Twa", 1.5}}), "[YES]");
    EXPECT_EQ(ask({{"Beta_Twa", 4.9}, {"Alpha_One", 4.8}}), "[NO]");   // top is not gold
    EXPECT_EQ(ask({{"Alpha_One", 5.0}, {"Beta_Twa", 4.9}}), "[NO]");   // margin too small
    EXPECT_EQ(ask({{"Alpha_One", 4.0}}), "[YES]");                     // single pair
}

TEST(OracleBackendTest, UnrecognizedPromptGuardsRenderer) {
    OracleWorld w;
    OracleBackend oracle(w.kg1, w.kg2, w.anchors);
    ChatRequest r;
    r.model = "oracle";
    r.messages.push_back({Role::User, "tell me a joke"});
    EXPECT_THROW(oracle.send(r), ChatError);
}

TEST(OracleBackendTest, DescriptionPromptAnswered) {
    OracleWorld w;
    OracleBackend oracle(w.kg1, w.kg2, w.anchors);
    ChatRequest r;
    r.model = "oracle";
    r.messages.push_back({Role::System, render_system_prompt()});
    r.messages.push_back({Role::User, render_description_prompt(make_card(w.kg1, 0, ""))});
    const auto reply = oracle.send(r);
    EXPECT_NE(reply.content.find("Alpha One"), std::string::npos);
    EXPECT_GT(reply.completion_tokens, 0);
}
