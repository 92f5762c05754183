#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include "iccl/promptkit.hpp"

namespace iccl::gateway {

enum class BackendKind { http, mock };

// Wire dialect for the http backend: "native" speaks the project protocol
// (/v1/generate, /v1/score, /v1/embed); "openai" adapts onto
// OpenAI-compatible completion endpoints with echoed logprobs.
enum class ApiStyle { native, openai };

struct BackendConfig {
    std::string base_url;
    std::string model_name;
    double timeout_seconds = 30.0;
    int max_in_flight = 4;
    int max_retries = 2;
    BackendKind backend_kind = BackendKind::mock;
    ApiStyle api_style = ApiStyle::native;
    int gen_max_tokens = 64;
};

void validate_backend_config(const BackendConfig& cfg);

struct TokenScore {
    std::string token_text;
    double logprob = 0.0; // natural-log units

    bool operator==(const TokenScore& other) const = default;
};

struct EmbeddingVector {
    int dims = 0;
    std::vector<double> values;

    bool operator==(const EmbeddingVector& other) const = default;
};

// Answer-is-correct-iff-demos-arrive-easy-to-hard generator, used by the
// plumbing sanity experiment. The mock recomputes each in-prompt label's
// complexity under its own scoring rule and answers gold only when the
// sequence is non-decreasing.
struct RiggedGenerator {
    std::map<std::string, std::string> gold_by_test_id;
    std::string wrong_text = "order-not-curriculum";
};

struct MockBehavior {
    std::map<std::string, std::string> predictions; // test id -> completion
    std::string fallback_text;                      // used when no tag / no table entry
    std::optional<RiggedGenerator> rigged;
};

class LmBackend {
  public:
    virtual ~LmBackend() = default;
    virtual std::string generate(const promptkit::RenderedPrompt& prompt,
                                 const BackendConfig& cfg) = 0;
    virtual std::vector<TokenScore> score_continuation(const std::string& prompt,
                                                       const std::string& continuation,
                                                       const BackendConfig& cfg) = 0;
    virtual EmbeddingVector embed(const std::string& text, const BackendConfig& cfg) = 0;
};

// Deterministic offline backend. Normative rules:
//   scoring    — continuation split on single spaces, each token's
//                logprob = -0.1 * character count;
//   embedding  — 26-dim case-insensitive letter-frequency counts;
//   generation — lookup keyed by the trailing "# test:<id>" line,
//                fallback to a fixed string otherwise.
class MockBackend final : public LmBackend {
  public:
    explicit MockBackend(MockBehavior behavior = {});

    std::string generate(const promptkit::RenderedPrompt& prompt,
                         const BackendConfig& cfg) override;
    std::vector<TokenScore> score_continuation(const std::string& prompt,
                                               const std::string& continuation,
                                               const BackendConfig& cfg) override;
    EmbeddingVector embed(const std::string& text, const BackendConfig& cfg) override;

    // Complexity of a label string under the mock scoring rule; exposed so
    // the rigged generator and tests share one definition.
    static double mock_complexity(const std::string& label_text);

  private:
    MockBehavior behavior_;
};

// HTTP JSON backend over cpp-httplib. Requests carry an explicit
// request_id echoed by native-protocol servers; transport failures and
// 5xx responses are retried up to max_retries, 4xx is refused outright.
// LLM_API_KEY, when set, is sent as a bearer token.
class HttpBackend final : public LmBackend {
  public:
    HttpBackend();

    std::string generate(const promptkit::RenderedPrompt& prompt,
                         const BackendConfig& cfg) override;
    std::vector<TokenScore> score_continuation(const std::string& prompt,
                                               const std::string& continuation,
                                               const BackendConfig& cfg) override;
    EmbeddingVector embed(const std::string& text, const BackendConfig& cfg) override;

  private:
    std::string next_request_id();
    std::uint64_t counter_ = 0;
};

// Single boundary to model capabilities. Bounds concurrent requests at
// cfg.max_in_flight; safe to share across threads.
class LmGateway {
  public:
    explicit LmGateway(BackendConfig cfg, MockBehavior mock_behavior = {});

    std::string generate(const promptkit::RenderedPrompt& prompt);
    std::vector<TokenScore> score_continuation(const std::string& prompt,
                                               const std::string& continuation);
    EmbeddingVector embed(const std::string& text);

    const BackendConfig& config() const { return cfg_; }

  private:
    BackendConfig cfg_;
    std::unique_ptr<LmBackend> backend_;
    std::counting_semaphore<> in_flight_;
};

} // namespace iccl::gateway
