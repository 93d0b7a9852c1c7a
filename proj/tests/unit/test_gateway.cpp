#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "eipl/gateway.hpp"
#include "support.hpp"

using namespace eipl;
using eipl::testing::TempDir;
using nlohmann::json;

namespace {

CompletionRequest request(std::string prompt, std::string model = "gpt-4o") {
    CompletionRequest r;
    r.prompt = std::move(prompt);
    r.model_name = std::move(model);
    return r;
}

GatewayError::Kind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const GatewayError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no GatewayError thrown";
    return GatewayError::Kind::StorageFailure;
}

std::string ok_body(const std::string& text) {
    return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}})}}.dump();
}

}  // namespace

TEST(FixtureKey, DependsOnModelAndPrompt) {
    EXPECT_EQ(fixture_key("gpt-4o", "P"), fixture_key("gpt-4o", "P"));
    EXPECT_NE(fixture_key("gpt-4o", "P"), fixture_key("gpt-4", "P"));
    EXPECT_NE(fixture_key("ab", "c"), fixture_key("a", "bc"));
    EXPECT_EQ(fixture_key("m", "p").size(), 64u);
}

TEST(Replay, RecordThenReplayReturnsIdenticalText) {
    TempDir tmp;
    const auto path = tmp / "fixtures.jsonl";
    auto mock = std::make_shared<ScriptedBackend>(std::vector<std::string>{"def foo(s):\n    return s[::-1]\n"});
    RecordingBackend rec(mock, path);
    auto live = rec.complete(request("P"));

    ReplayBackend replay(FixtureStore::load(path));
    auto r = replay.complete(request("P"));
    EXPECT_EQ(r.text, live.text);
    EXPECT_TRUE(r.from_cache);
    EXPECT_EQ(r.backend_id, "replay");

    // Same answer after a "restart".
    ReplayBackend again(FixtureStore::load(path));
    EXPECT_EQ(again.complete(request("P")).text, live.text);
}

TEST(Replay, UnknownPromptIsReplayMiss) {
    ReplayBackend replay{FixtureStore{}};
    EXPECT_EQ(kind_of([&] { replay.complete(request("unknown")); }), GatewayError::Kind::ReplayMiss);
}

TEST(Replay, ModelIsPartOfTheKey) {
    TempDir tmp;
    FixtureRecorder rec(tmp / "f.jsonl");
    rec.record(request("P", "m1"), {"one", "mock", {}, false});
    ReplayBackend replay(FixtureStore::load(tmp / "f.jsonl"));
    EXPECT_EQ(replay.complete(request("P", "m1")).text, "one");
    EXPECT_EQ(kind_of([&] { replay.complete(request("P", "m2")); }), GatewayError::Kind::ReplayMiss);
}

TEST(Recorder, FirstWriteWins) {
    TempDir tmp;
    const auto path = tmp / "f.jsonl";
    {
        FixtureRecorder rec(path);
        EXPECT_TRUE(rec.record(request("P"), {"first", "mock", {}, false}));
        EXPECT_FALSE(rec.record(request("P"), {"second", "mock", {}, false}));
    }
    FixtureRecorder reopened(path);
    EXPECT_FALSE(reopened.record(request("P"), {"third", "mock", {}, false}));
    auto store = FixtureStore::load(path);
    EXPECT_EQ(store.size(), 1u);
    EXPECT_EQ(read_lines(path).size(), 1u);
    EXPECT_EQ(ReplayBackend(store).complete(request("P")).text, "first");
}

TEST(Recorder, PreservesCompletionBytes) {
    TempDir tmp;
    const std::string text = "```python\ndef foo(s):\r\n\treturn s  # \xe0\xa4\x95\n```\n\n";
    FixtureRecorder rec(tmp / "f.jsonl");
    rec.record(request("P"), {text, "mock", {}, false});
    EXPECT_EQ(ReplayBackend(FixtureStore::load(tmp / "f.jsonl")).complete(request("P")).text, text);
}

TEST(FixtureStore, TruncatedLineNamesLineNumber) {
    TempDir tmp;
    const auto path = tmp / "f.jsonl";
    {
        FixtureRecorder rec(path);
        rec.record(request("A"), {"a", "mock", {}, false});
        rec.record(request("B"), {"b", "mock", {}, false});
        rec.record(request("C"), {"c", "mock", {}, false});
    }
    const std::string data = read_file(path);
    const auto second_end = data.find('\n', data.find('\n') + 1);
    // Cut the second record short, byte-wise, and keep the third line.
    std::string corrupted = data.substr(0, second_end - 7) + data.substr(second_end);
    eipl::testing::write_text(path, corrupted);
    try {
        FixtureStore::load(path);
        FAIL();
    } catch (const FixtureParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(FixtureStore, KeyMismatchRejected) {
    TempDir tmp;
    json bad = {{"key", "0000"}, {"model", "m"}, {"prompt", "p"}, {"completion", "c"}};
    eipl::testing::write_text(tmp / "f.jsonl", bad.dump() + "\n");
    EXPECT_THROW(FixtureStore::load(tmp / "f.jsonl"), FixtureParseError);
}

TEST(FixtureStore, MissingFileIsEmpty) {
    TempDir tmp;
    EXPECT_EQ(FixtureStore::load(tmp / "none.jsonl").size(), 0u);
}

TEST(Scripted, ExhaustsAfterQueue) {
    ScriptedBackend mock({"one", "two"});
    EXPECT_EQ(mock.complete(request("a")).text, "one");
    EXPECT_EQ(mock.complete(request("b")).text, "two");
    EXPECT_EQ(kind_of([&] { mock.complete(request("c")); }), GatewayError::Kind::MockExhausted);
    EXPECT_EQ(mock.calls(), 3u);
    EXPECT_EQ(mock.prompts(), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Scripted, QueuedFailures) {
    ScriptedBackend mock;
    mock.push_failure(GatewayError::Kind::BackendUnavailable);
    mock.push("ok");
    EXPECT_EQ(kind_of([&] { mock.complete(request("a")); }), GatewayError::Kind::BackendUnavailable);
    EXPECT_EQ(mock.complete(request("a")).text, "ok");
}

TEST(Live, NoKeyIsUnavailable) {
    int calls = 0;
    LiveBackend live({}, [&](const HttpCall&) {
        ++calls;
        return HttpReply{200, ok_body("x"), {}};
    });
    EXPECT_EQ(kind_of([&] { live.complete(request("P")); }), GatewayError::Kind::BackendUnavailable);
    EXPECT_EQ(calls, 0);
}

TEST(Live, SendsSingleUserMessageAndReturnsTextVerbatim) {
    HttpCall seen;
    LiveConfig cfg;
    cfg.api_key = "k";
    LiveBackend live(cfg, [&](const HttpCall& c) {
        seen = c;
        return HttpReply{200, ok_body("def foo():\n  return 1\n"), {}};
    });
    auto r = live.complete(request("Prompt text"));
    EXPECT_EQ(r.text, "def foo():\n  return 1\n");
    EXPECT_FALSE(r.from_cache);
    auto body = json::parse(seen.body);
    EXPECT_EQ(body["model"], "gpt-4o");
    EXPECT_EQ(body["temperature"], 0.0);
    ASSERT_EQ(body["messages"].size(), 1u);
    EXPECT_EQ(body["messages"][0]["role"], "user");
    EXPECT_EQ(body["messages"][0]["content"], "Prompt text");
    bool auth = false;
    for (const auto& [k, v] : seen.headers) auth |= k == "Authorization" && v == "Bearer k";
    EXPECT_TRUE(auth);
}

TEST(Live, RetriesTransientFailuresAtMostThreeTimes) {
    LiveConfig cfg;
    cfg.api_key = "k";
    cfg.initial_backoff = Millis{1};
    cfg.max_attempts = 10;  // clamped to 3
    std::atomic<int> calls{0};
    LiveBackend live(cfg, [&](const HttpCall&) {
        ++calls;
        return HttpReply{503, "", {}};
    });
    EXPECT_EQ(kind_of([&] { live.complete(request("P")); }), GatewayError::Kind::BackendUnavailable);
    EXPECT_EQ(calls, 3);
}

TEST(Live, RecoversAfterRateLimit) {
    LiveConfig cfg;
    cfg.api_key = "k";
    cfg.initial_backoff = Millis{1};
    int calls = 0;
    LiveBackend live(cfg, [&](const HttpCall&) {
        return ++calls < 3 ? HttpReply{429, "", {}} : HttpReply{200, ok_body("x"), {}};
    });
    EXPECT_EQ(live.complete(request("P")).text, "x");
    EXPECT_EQ(calls, 3);
}

TEST(Live, AuthFailureIsNotRetried) {
    LiveConfig cfg;
    cfg.api_key = "k";
    int calls = 0;
    LiveBackend live(cfg, [&](const HttpCall&) {
        ++calls;
        return HttpReply{401, "", {}};
    });
    EXPECT_EQ(kind_of([&] { live.complete(request("P")); }), GatewayError::Kind::BackendUnavailable);
    EXPECT_EQ(calls, 1);
}

TEST(Live, TotalTimeBoundedByThreeTimeouts) {
    LiveConfig cfg;
    cfg.api_key = "k";
    cfg.initial_backoff = Millis{200};
    auto req = request("P");
    req.timeout = Millis{100};
    LiveBackend live(cfg, [&](const HttpCall& c) {
        // A transport that always uses its whole timeout before failing.
        std::this_thread::sleep_for(c.timeout);
        return HttpReply{0, "", "timeout"};
    });
    auto start = std::chrono::steady_clock::now();
    EXPECT_THROW(live.complete(req), GatewayError);
    auto elapsed = std::chrono::steady_clock::now() - start;
    EXPECT_LE(elapsed, Millis{300 + 50});
}

TEST(Live, UnreachableEndpointIsUnavailable) {
    LiveConfig cfg;
    cfg.api_key = "k";
    cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    cfg.initial_backoff = Millis{1};
    LiveBackend live(cfg);
    auto req = request("P");
    req.timeout = Millis{500};
    EXPECT_EQ(kind_of([&] { live.complete(req); }), GatewayError::Kind::BackendUnavailable);
}
