#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "anchor_rag/generate.hpp"
#include "anchor_rag/index.hpp"
#include "anchor_rag/predict.hpp"

namespace anchor_rag::backends {

enum class BackendErrorKind {
    Transport,          // connect/read failure or timeout; retryable
    Protocol,           // unexpected HTTP status; not retryable
    Auth,               // 401/403; not retryable
    RateLimited,        // 429; retryable
    MalformedResponse,  // body does not match the wire contract; not retryable
};

const char* backend_error_kind_name(BackendErrorKind kind);

class BackendError : public std::runtime_error {
public:
    BackendError(BackendErrorKind kind, const std::string& message, int http_status = 0, int attempts = 1);

    BackendErrorKind kind() const { return kind_; }
    int http_status() const { return http_status_; }  // 0 when no response arrived
    int attempts() const { return attempts_; }
    bool retryable() const {
        return kind_ == BackendErrorKind::Transport || kind_ == BackendErrorKind::RateLimited;
    }

private:
    BackendErrorKind kind_;
    int http_status_;
    int attempts_;
};

struct BackendConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::string api_key_env = "ANCHOR_RAG_API_KEY";  // bearer token read from this env var when set
    int timeout_ms = 10000;
    int max_retries = 2;         // total attempts = 1 + max_retries
    int backoff_initial_ms = 250;  // doubles per retry, capped at 30000 per wait
};

/// POST {base_url}/v1/fill-mask with {"text", "mask_token": "[MASK]", "top_k"};
/// expects {"predictions": [{"token", "prob"}, ...]}. Out-of-order or duplicate
/// entries are repaired with a warning on stderr; negative/missing probs or
/// empty tokens raise a malformed-response error.
predict::TopKDistribution remote_fill_mask(const BackendConfig& config, const std::string& text, int top_k);

/// POST {base_url}/v1/embed with {"texts"}; expects {"vectors": [[...], ...]},
/// one equal-length row per input text. An empty input list returns an empty
/// result without any network call.
std::vector<index::EmbeddingVector> remote_embed(const BackendConfig& config,
                                                 const std::vector<std::string>& texts);

/// POST {base_url}/v1/generate with {"prompt", "max_tokens", "greedy"};
/// expects {"text", "tokens": [{"token", "prob"}, ...]}. When "tokens" is
/// absent or any entry omits "prob", all step probs are recorded as 1.0 and
/// the result is flagged probability-free.
generate::GenerationResult remote_generate(const BackendConfig& config, const std::string& prompt,
                                           int max_tokens, bool greedy = true);

class RemoteFillMask final : public predict::FillMaskPredictor {
public:
    explicit RemoteFillMask(BackendConfig config) : config_(std::move(config)) {}

    predict::TopKDistribution fill_mask(const predict::MaskedQuery& query, int k) const override;

private:
    BackendConfig config_;
};

class RemoteEmbedder final : public index::Embedder {
public:
    RemoteEmbedder(BackendConfig config, int dimension) : config_(std::move(config)), dimension_(dimension) {}

    std::vector<index::EmbeddingVector> embed(const std::vector<std::string>& texts) const override;
    std::string id() const override { return "remote"; }
    int dimension() const override { return dimension_; }

private:
    BackendConfig config_;
    int dimension_;
};

class RemoteGenerator final : public generate::Generator {
public:
    explicit RemoteGenerator(BackendConfig config) : config_(std::move(config)) {}

    generate::GenerationResult generate(const generate::Prompt& prompt, int max_tokens) const override;
    std::string id() const override { return "remote"; }

private:
    BackendConfig config_;
};

}  // namespace anchor_rag::backends
