#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "iccl/errors.hpp"
#include "iccl/gateway.hpp"

namespace iccl::gateway {

using nlohmann::json;

namespace {

struct SplitUrl {
    std::string host_port;    // scheme://host:port, what httplib::Client wants
    std::string path_prefix;  // optional mount path, no trailing slash
};

SplitUrl split_base_url(const std::string& base_url) {
    const std::size_t scheme = base_url.find("://");
    if (scheme == std::string::npos)
        raise(Errc::config_invalid, "base_url must include a scheme: " + base_url);
    const std::size_t slash = base_url.find('/', scheme + 3);
    if (slash == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, slash), prefix};
}

json parse_body(const httplib::Result& res) {
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        raise(Errc::transport, std::string("unparseable response body: ") + e.what());
    }
}

// POST with bounded retries. Transport failures and 5xx retry up to
// max_retries; 4xx refuses immediately; 501 marks a missing capability.
json post_json(const BackendConfig& cfg, const std::string& path, const json& body) {
    const SplitUrl url = split_base_url(cfg.base_url);
    httplib::Client client(url.host_port);
    const auto timeout =
        std::chrono::microseconds(static_cast<long long>(cfg.timeout_seconds * 1e6));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    if (const char* key = std::getenv("LLM_API_KEY"); key && *key)
        client.set_default_headers({{"Authorization", std::string("Bearer ") + key}});

    std::string failure = "no attempt made";
    bool timed_out = false;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(25LL << (attempt - 1)));
        httplib::Result res = client.Post(url.path_prefix + path, body.dump(), "application/json");
        if (!res) {
            timed_out = res.error() == httplib::Error::ConnectionTimeout;
            failure = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 501)
            raise(Errc::unsupported_by_backend, "server does not implement " + path);
        if (res->status >= 500) {
            timed_out = false;
            failure = "status " + std::to_string(res->status);
            continue;
        }
        if (res->status >= 400)
            raise(Errc::backend_refused,
                  "status " + std::to_string(res->status) + " from " + path + ": " + res->body);
        json reply = parse_body(res);
        if (reply.contains("request_id") && body.contains("request_id") &&
            reply["request_id"] != body["request_id"])
            raise(Errc::transport, "response request_id does not match request");
        return reply;
    }
    if (timed_out)
        raise(Errc::timeout, "request to " + path + " timed out after " +
                                 std::to_string(cfg.max_retries + 1) + " attempts");
    raise(Errc::transport, "request to " + path + " failed after " +
                               std::to_string(cfg.max_retries + 1) + " attempts: " + failure);
}

std::string strip_mock_tag(const std::string& text) {
    const std::size_t line_start = text.rfind('\n');
    if (line_start == std::string::npos) return text;
    if (text.compare(line_start + 1, 7, "# test:") == 0) return text.substr(0, line_start);
    return text;
}

} // namespace

HttpBackend::HttpBackend() = default;

std::string HttpBackend::next_request_id() {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    return "req-" + std::to_string(++counter_);
}

std::string HttpBackend::generate(const promptkit::RenderedPrompt& prompt,
                                  const BackendConfig& cfg) {
    const std::string text = strip_mock_tag(prompt.text);
    if (cfg.api_style == ApiStyle::openai) {
        json body = {{"model", cfg.model_name},
                     {"prompt", text},
                     {"temperature", 0},
                     {"max_tokens", cfg.gen_max_tokens}};
        json reply = post_json(cfg, "/v1/completions", body);
        if (!reply.contains("choices") || reply["choices"].empty() ||
            !reply["choices"][0].contains("text"))
            raise(Errc::transport, "completion response lacks choices[0].text");
        return reply["choices"][0]["text"].get<std::string>();
    }

    json messages = json::array();
    for (const promptkit::Message& m : prompt.messages)
        messages.push_back({{"role", m.role}, {"content", m.content}});
    json body = {{"request_id", next_request_id()}, {"model", cfg.model_name},
                 {"prompt", text},                  {"messages", messages},
                 {"temperature", 0},                {"max_tokens", cfg.gen_max_tokens}};
    json reply = post_json(cfg, "/v1/generate", body);
    if (!reply.contains("text") || !reply["text"].is_string())
        raise(Errc::transport, "generate response lacks a text field");
    return reply["text"].get<std::string>();
}

std::vector<TokenScore> HttpBackend::score_continuation(const std::string& prompt,
                                                        const std::string& continuation,
                                                        const BackendConfig& cfg) {
    if (cfg.api_style == ApiStyle::openai) {
        // Echoed-logprob trick: send prompt+continuation with max_tokens 0
        // and keep the tokens whose text offset falls inside the continuation.
        json body = {{"model", cfg.model_name}, {"prompt", prompt + continuation},
                     {"temperature", 0},        {"max_tokens", 0},
                     {"echo", true},            {"logprobs", 0}};
        json reply = post_json(cfg, "/v1/completions", body);
        if (!reply.contains("choices") || reply["choices"].empty() ||
            reply["choices"][0]["logprobs"].is_null())
            raise(Errc::unsupported_by_backend, "endpoint did not echo logprobs");
        const json& lp = reply["choices"][0]["logprobs"];
        std::vector<TokenScore> scores;
        for (std::size_t i = 0; i < lp["tokens"].size(); ++i) {
            if (lp["text_offset"][i].get<std::size_t>() < prompt.size()) continue;
            if (lp["token_logprobs"][i].is_null())
                raise(Errc::unsupported_by_backend, "null logprob inside continuation");
            scores.push_back(
                {lp["tokens"][i].get<std::string>(), lp["token_logprobs"][i].get<double>()});
        }
        return scores;
    }

    json body = {{"request_id", next_request_id()},
                 {"model", cfg.model_name},
                 {"prompt", prompt},
                 {"continuation", continuation}};
    json reply = post_json(cfg, "/v1/score", body);
    if (!reply.contains("tokens") || !reply["tokens"].is_array())
        raise(Errc::unsupported_by_backend, "score response lacks a tokens array");
    std::vector<TokenScore> scores;
    for (const json& tok : reply["tokens"])
        scores.push_back({tok.at("text").get<std::string>(), tok.at("logprob").get<double>()});
    return scores;
}

EmbeddingVector HttpBackend::embed(const std::string& text, const BackendConfig& cfg) {
    if (cfg.api_style == ApiStyle::openai) {
        json body = {{"model", cfg.model_name}, {"input", text}};
        json reply = post_json(cfg, "/v1/embeddings", body);
        if (!reply.contains("data") || reply["data"].empty())
            raise(Errc::transport, "embeddings response lacks data[0]");
        EmbeddingVector vec;
        vec.values = reply["data"][0].at("embedding").get<std::vector<double>>();
        vec.dims = static_cast<int>(vec.values.size());
        return vec;
    }

    json body = {{"request_id", next_request_id()}, {"model", cfg.model_name}, {"text", text}};
    json reply = post_json(cfg, "/v1/embed", body);
    EmbeddingVector vec;
    vec.values = reply.at("values").get<std::vector<double>>();
    vec.dims = reply.value("dims", static_cast<int>(vec.values.size()));
    if (vec.dims != static_cast<int>(vec.values.size()))
        raise(Errc::transport, "embedding dims does not match values length");
    return vec;
}

} // namespace iccl::gateway
