#include "iccl/gateway.hpp"

#include <cmath>
#include <mutex>

#include "iccl/errors.hpp"

namespace iccl::gateway {

void validate_backend_config(const BackendConfig& cfg) {
    if (cfg.max_in_flight < 1) raise(Errc::config_invalid, "max_in_flight must be >= 1");
    if (cfg.timeout_seconds <= 0) raise(Errc::config_invalid, "timeout must be > 0");
    if (cfg.max_retries < 0) raise(Errc::config_invalid, "max_retries must be >= 0");
    if (cfg.backend_kind == BackendKind::http && cfg.base_url.empty())
        raise(Errc::config_invalid, "http backend requires base_url");
}

MockBackend::MockBackend(MockBehavior behavior) : behavior_(std::move(behavior)) {}

namespace {

// Trailing "# test:<id>" line appended by promptkit when targeting the mock.
std::optional<std::string> parse_test_tag(const std::string& text) {
    const std::size_t line_start = text.rfind('\n');
    const std::string last = line_start == std::string::npos ? text : text.substr(line_start + 1);
    constexpr const char* kPrefix = "# test:";
    if (last.rfind(kPrefix, 0) != 0) return std::nullopt;
    return last.substr(std::char_traits<char>::length(kPrefix));
}

std::vector<std::string> split_on_spaces(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (c == ' ') {
            tokens.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    tokens.push_back(current);
    return tokens;
}

// In-prompt assistant label spans, in appearance order. Handles the three
// concrete families plus the generic flattening.
std::vector<std::string> extract_label_spans(const std::string& text) {
    std::vector<std::string> spans;
    auto collect = [&](const std::string& open, const std::string& close) {
        std::size_t pos = 0;
        while (true) {
            const std::size_t start = text.find(open, pos);
            if (start == std::string::npos) break;
            const std::size_t body = start + open.size();
            const std::size_t end = text.find(close, body);
            if (end == std::string::npos) break; // unanswered final turn
            spans.push_back(text.substr(body, end - body));
            pos = end + close.size();
        }
    };
    if (text.find("<|im_start|>assistant ") != std::string::npos)
        collect("<|im_start|>assistant ", "<|im_end|>");
    else if (text.find("[/INST]") != std::string::npos)
        collect("[/INST]", "</s>");
    else
        collect("assistant: ", "\n");
    return spans;
}

} // namespace

double MockBackend::mock_complexity(const std::string& label_text) {
    double sum_logprob = 0.0;
    for (const std::string& token : split_on_spaces(label_text))
        sum_logprob += -0.1 * static_cast<double>(token.size());
    return std::exp(-sum_logprob);
}

std::string MockBackend::generate(const promptkit::RenderedPrompt& prompt, const BackendConfig&) {
    const std::optional<std::string> tag =
        prompt.test_id_tag ? prompt.test_id_tag : parse_test_tag(prompt.text);

    if (behavior_.rigged) {
        std::vector<std::string> labels = extract_label_spans(prompt.text);
        bool ascending = true;
        for (std::size_t i = 1; i < labels.size(); ++i)
            if (mock_complexity(labels[i - 1]) > mock_complexity(labels[i])) ascending = false;
        if (!ascending || !tag) return behavior_.rigged->wrong_text;
        auto it = behavior_.rigged->gold_by_test_id.find(*tag);
        return it == behavior_.rigged->gold_by_test_id.end() ? behavior_.rigged->wrong_text
                                                             : it->second;
    }

    if (tag) {
        auto it = behavior_.predictions.find(*tag);
        if (it != behavior_.predictions.end()) return it->second;
    }
    return behavior_.fallback_text;
}

std::vector<TokenScore> MockBackend::score_continuation(const std::string&,
                                                        const std::string& continuation,
                                                        const BackendConfig&) {
    std::vector<TokenScore> scores;
    for (const std::string& token : split_on_spaces(continuation))
        scores.push_back({token, -0.1 * static_cast<double>(token.size())});
    return scores;
}

EmbeddingVector MockBackend::embed(const std::string& text, const BackendConfig&) {
    EmbeddingVector vec;
    vec.dims = 26;
    vec.values.assign(26, 0.0);
    for (unsigned char c : text) {
        if (c >= 'a' && c <= 'z') vec.values[c - 'a'] += 1.0;
        else if (c >= 'A' && c <= 'Z') vec.values[c - 'A'] += 1.0;
    }
    return vec;
}

LmGateway::LmGateway(BackendConfig cfg, MockBehavior mock_behavior)
    : cfg_(std::move(cfg)), in_flight_(cfg_.max_in_flight >= 1 ? cfg_.max_in_flight : 1) {
    validate_backend_config(cfg_);
    if (cfg_.backend_kind == BackendKind::mock)
        backend_ = std::make_unique<MockBackend>(std::move(mock_behavior));
    else
        backend_ = std::make_unique<HttpBackend>();
}

namespace {

struct SlotGuard {
    std::counting_semaphore<>& sem;
    explicit SlotGuard(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
    ~SlotGuard() { sem.release(); }
};

} // namespace

std::string LmGateway::generate(const promptkit::RenderedPrompt& prompt) {
    if (prompt.text.empty() && prompt.messages.empty())
        raise(Errc::precondition, "generate requires a nonempty prompt");
    SlotGuard guard(in_flight_);
    return backend_->generate(prompt, cfg_);
}

std::vector<TokenScore> LmGateway::score_continuation(const std::string& prompt,
                                                      const std::string& continuation) {
    if (continuation.empty())
        raise(Errc::precondition, "score_continuation requires a nonempty continuation");
    SlotGuard guard(in_flight_);
    return backend_->score_continuation(prompt, continuation, cfg_);
}

EmbeddingVector LmGateway::embed(const std::string& text) {
    if (text.empty()) raise(Errc::precondition, "embed requires nonempty text");
    SlotGuard guard(in_flight_);
    return backend_->embed(text, cfg_);
}

} // namespace iccl::gateway
