#include "doctest.h"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "iccl/errors.hpp"
#include "iccl/gateway.hpp"

using namespace iccl;
using gateway::BackendConfig;
using gateway::BackendKind;
using gateway::LmGateway;
using gateway::MockBehavior;
using nlohmann::json;

namespace {

BackendConfig mock_cfg() {
    BackendConfig cfg;
    cfg.backend_kind = BackendKind::mock;
    return cfg;
}

promptkit::RenderedPrompt text_prompt(const std::string& text) {
    promptkit::RenderedPrompt prompt;
    prompt.text = text;
    return prompt;
}

} // namespace

TEST_CASE("mock scoring rule: one token per space-delimited word, -0.1 per char") {
    LmGateway gw(mock_cfg());

    auto scores = gw.score_continuation("any prompt", "background");
    REQUIRE(scores.size() == 1);
    CHECK(scores[0].token_text == "background");
    CHECK(scores[0].logprob == doctest::Approx(-1.0).epsilon(1e-12));

    scores = gw.score_continuation("p", "a b");
    REQUIRE(scores.size() == 2);
    CHECK(scores[0].token_text == "a");
    CHECK(scores[0].logprob == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(scores[1].token_text == "b");
    CHECK(scores[1].logprob == doctest::Approx(-0.1).epsilon(1e-12));

    CHECK_THROWS_AS(gw.score_continuation("p", ""), Error);
}

TEST_CASE("mock token texts rejoin to the continuation") {
    LmGateway gw(mock_cfg());
    for (const std::string continuation :
         {"one", "two words", " leading", "trailing ", "a  double", "x y z"}) {
        const auto scores = gw.score_continuation("p", continuation);
        std::string joined;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (i > 0) joined += " ";
            joined += scores[i].token_text;
        }
        CHECK(joined == continuation);
    }
}

TEST_CASE("mock embedding rule: case-insensitive letter frequencies") {
    LmGateway gw(mock_cfg());

    auto vec = gw.embed("abc");
    REQUIRE(vec.dims == 26);
    CHECK(vec.values[0] == 1.0);
    CHECK(vec.values[1] == 1.0);
    CHECK(vec.values[2] == 1.0);
    for (int i = 3; i < 26; ++i) CHECK(vec.values[i] == 0.0);

    vec = gw.embed("AAB");
    CHECK(vec.values[0] == 2.0);
    CHECK(vec.values[1] == 1.0);

    CHECK_THROWS_AS(gw.embed(""), Error);
    // Determinism.
    CHECK(gw.embed("Mixtral-8x7B") == gw.embed("Mixtral-8x7B"));
}

TEST_CASE("mock generation routes by test tag with label fallback") {
    MockBehavior behavior;
    behavior.predictions = {{"test_17", "background"}};
    behavior.fallback_text = "method";
    LmGateway gw(mock_cfg(), behavior);

    CHECK(gw.generate(text_prompt("...[INST]x[/INST]\n# test:test_17")) == "background");
    CHECK(gw.generate(text_prompt("untagged prompt")) == "method");
    CHECK(gw.generate(text_prompt("...\n# test:unknown_id")) == "method");
}

TEST_CASE("rigged mock answers gold only for ascending-complexity demo order") {
    MockBehavior behavior;
    behavior.rigged = gateway::RiggedGenerator{{{"t1", "result"}}, "wrong"};
    LmGateway gw(mock_cfg(), behavior);

    // method (e^0.6) before background (e^1.0): ascending.
    const std::string ascending =
        "[INST]u1[/INST]method</s>[INST]u2[/INST]background</s>[INST]test[/INST]\n# test:t1";
    CHECK(gw.generate(text_prompt(ascending)) == "result");

    const std::string descending =
        "[INST]u1[/INST]background</s>[INST]u2[/INST]method</s>[INST]test[/INST]\n# test:t1";
    CHECK(gw.generate(text_prompt(descending)) == "wrong");

    // ChatML extraction path.
    const std::string chatml = "<|im_start|>user u<|im_end|>\n<|im_start|>assistant "
                               "ab<|im_end|>\n<|im_start|>assistant abcd<|im_end|>\n# test:t1";
    CHECK(gw.generate(text_prompt(chatml)) == "result");
}

TEST_CASE("http backend speaks the native protocol with retries") {
    httplib::Server server;
    std::atomic<int> generate_calls{0}, fail_calls{0};
    std::string seen_auth, seen_prompt;
    double seen_temperature = -1.0;

    server.Post("/v1/generate", [&](const httplib::Request& req, httplib::Response& res) {
        ++generate_calls;
        seen_auth = req.get_header_value("Authorization");
        const json body = json::parse(req.body);
        seen_prompt = body.at("prompt").get<std::string>();
        seen_temperature = body.at("temperature").get<double>();
        res.set_content(
            json{{"request_id", body.at("request_id")}, {"text", "background"}}.dump(),
            "application/json");
    });
    server.Post("/v1/score", [&](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        res.set_content(json{{"request_id", body.at("request_id")},
                             {"tokens", json::array({{{"text", "background"}, {"logprob", -1.0}}})}}
                            .dump(),
                        "application/json");
    });
    server.Post("/v1/embed", [&](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        res.set_content(json{{"request_id", body.at("request_id")},
                             {"dims", 2},
                             {"values", json::array({1.0, 2.0})}}
                            .dump(),
                        "application/json");
    });
    server.Post("/v1/flaky", [&](const httplib::Request&, httplib::Response& res) {
        ++fail_calls;
        res.status = 500;
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread listener([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    BackendConfig cfg;
    cfg.backend_kind = BackendKind::http;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.model_name = "unit-model";
    cfg.max_retries = 2;
    cfg.timeout_seconds = 5.0;

    setenv("LLM_API_KEY", "sk-unit-test", 1);
    LmGateway gw(cfg);

    SUBCASE("generate round trip, bearer auth, temperature 0") {
        CHECK(gw.generate(text_prompt("Sentence: x\nLabel:")) == "background");
        CHECK(generate_calls == 1);
        CHECK(seen_auth == "Bearer sk-unit-test");
        CHECK(seen_temperature == 0.0);
        CHECK(seen_prompt == "Sentence: x\nLabel:");
    }

    SUBCASE("the mock routing tag never reaches the server") {
        CHECK(gw.generate(text_prompt("Sentence: x\nLabel:\n# test:t9")) == "background");
        CHECK(seen_prompt == "Sentence: x\nLabel:");
    }

    SUBCASE("score and embed round trips") {
        const auto scores = gw.score_continuation("p", "background");
        REQUIRE(scores.size() == 1);
        CHECK(scores[0].logprob == -1.0);
        const auto vec = gw.embed("abc");
        CHECK(vec.dims == 2);
        CHECK(vec.values == std::vector<double>({1.0, 2.0}));
    }

    SUBCASE("an unreachable endpoint raises after the retry budget") {
        BackendConfig dead = cfg;
        dead.base_url = "http://127.0.0.1:1"; // nothing listens here
        dead.max_retries = 1;
        dead.timeout_seconds = 0.5;
        LmGateway bad(dead);
        try {
            bad.generate(text_prompt("x"));
            FAIL_CHECK("expected Transport or Timeout");
        } catch (const Error& e) {
            CHECK((e.code() == Errc::transport || e.code() == Errc::timeout));
        }
    }

    server.stop();
    listener.join();
}

TEST_CASE("http backend maps status classes onto error kinds") {
    httplib::Server server;
    std::atomic<int> calls_500{0};
    server.Post("/v1/generate", [&](const httplib::Request&, httplib::Response& res) {
        ++calls_500;
        res.status = 500;
    });
    server.Post("/v1/score", [&](const httplib::Request&, httplib::Response& res) {
        res.status = 501;
    });
    server.Post("/v1/embed", [&](const httplib::Request&, httplib::Response& res) {
        res.status = 403;
        res.set_content("forbidden", "text/plain");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread listener([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    BackendConfig cfg;
    cfg.backend_kind = BackendKind::http;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.max_retries = 2;
    cfg.timeout_seconds = 5.0;
    LmGateway gw(cfg);

    // 500 three times (1 try + 2 retries) then Transport.
    try {
        gw.generate(text_prompt("x"));
        FAIL_CHECK("expected Transport");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::transport);
    }
    CHECK(calls_500 == 3);

    try {
        gw.score_continuation("p", "c");
        FAIL_CHECK("expected UnsupportedByBackend");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unsupported_by_backend);
    }

    try {
        gw.embed("abc");
        FAIL_CHECK("expected BackendRefused");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::backend_refused);
    }

    server.stop();
    listener.join();
}

TEST_CASE("a response carrying the wrong request id is a transport error") {
    httplib::Server server;
    server.Post("/v1/generate", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"request_id", "someone-else"}, {"text", "x"}}.dump(),
                        "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread listener([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    BackendConfig cfg;
    cfg.backend_kind = BackendKind::http;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.max_retries = 0;
    cfg.timeout_seconds = 5.0;
    LmGateway gw(cfg);
    try {
        gw.generate(text_prompt("x"));
        FAIL_CHECK("expected Transport");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::transport);
    }
    server.stop();
    listener.join();
}

TEST_CASE("openai dialect slices echoed logprobs at the continuation boundary") {
    httplib::Server server;
    json seen_body;
    server.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_body = json::parse(req.body);
        const json logprobs = {{"tokens", json::array({"ab", "cd", "ef"})},
                               {"token_logprobs", json::array({nullptr, -0.5, -1.5})},
                               {"text_offset", json::array({0, 2, 4})}};
        res.set_content(
            json{{"choices", json::array({{{"text", ""}, {"logprobs", logprobs}}})}}.dump(),
            "application/json");
    });
    server.Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(
            json{{"data", json::array({{{"embedding", json::array({0.5, 0.5})}}})}}.dump(),
            "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread listener([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    BackendConfig cfg;
    cfg.backend_kind = BackendKind::http;
    cfg.api_style = gateway::ApiStyle::openai;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.timeout_seconds = 5.0;
    LmGateway gw(cfg);

    const auto scores = gw.score_continuation("ab", "cdef");
    REQUIRE(scores.size() == 2);
    CHECK(scores[0].token_text == "cd");
    CHECK(scores[0].logprob == -0.5);
    CHECK(scores[1].token_text == "ef");
    CHECK(scores[1].logprob == -1.5);
    CHECK(seen_body.at("echo") == true);
    CHECK(seen_body.at("max_tokens") == 0);
    CHECK(seen_body.at("prompt") == "abcdef");

    const auto vec = gw.embed("abc");
    CHECK(vec.values == std::vector<double>({0.5, 0.5}));

    server.stop();
    listener.join();
}

TEST_CASE("backend config invariants") {
    BackendConfig cfg = mock_cfg();
    cfg.max_in_flight = 0;
    CHECK_THROWS_AS(gateway::validate_backend_config(cfg), Error);
    cfg = mock_cfg();
    cfg.timeout_seconds = 0.0;
    CHECK_THROWS_AS(gateway::validate_backend_config(cfg), Error);
    cfg = mock_cfg();
    cfg.backend_kind = BackendKind::http;
    cfg.base_url = "";
    CHECK_THROWS_AS(gateway::validate_backend_config(cfg), Error);
}

TEST_CASE("gateway is callable concurrently under max_in_flight") {
    BackendConfig cfg = mock_cfg();
    cfg.max_in_flight = 2;
    LmGateway gw(cfg);
    std::atomic<int> completed{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&gw, &completed, i] {
            const auto scores = gw.score_continuation("p", "word" + std::to_string(i));
            if (scores.size() == 1) ++completed;
        });
    for (auto& t : threads) t.join();
    CHECK(completed == 8);
}
