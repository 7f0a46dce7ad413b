#include "anchor_rag/backends.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "anchor_rag/common.hpp"

namespace anchor_rag::backends {

namespace {

constexpr int kBackoffCapMs = 30000;

nlohmann::json post_once(const BackendConfig& config, const std::string& path, const nlohmann::json& body) {
    httplib::Client client(config.base_url);
    client.set_connection_timeout(0, config.timeout_ms * 1000LL);
    client.set_read_timeout(0, config.timeout_ms * 1000LL);
    client.set_write_timeout(0, config.timeout_ms * 1000LL);

    httplib::Headers headers;
    if (!config.api_key_env.empty()) {
        if (const char* key = std::getenv(config.api_key_env.c_str()); key != nullptr && *key != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw BackendError(BackendErrorKind::Transport,
                           "POST " + path + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
        throw BackendError(BackendErrorKind::Auth, "POST " + path + ": authentication rejected", res->status);
    }
    if (res->status == 429) {
        throw BackendError(BackendErrorKind::RateLimited, "POST " + path + ": rate limited", res->status);
    }
    if (res->status != 200) {
        throw BackendError(BackendErrorKind::Protocol,
                           "POST " + path + ": unexpected status " + std::to_string(res->status), res->status);
    }
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(BackendErrorKind::MalformedResponse,
                           "POST " + path + ": response is not JSON: " + e.what(), res->status);
    }
}

nlohmann::json post_with_retries(const BackendConfig& config, const std::string& path,
                                 const nlohmann::json& body) {
    const int max_attempts = 1 + std::max(0, config.max_retries);
    int backoff_ms = std::max(1, config.backoff_initial_ms);
    for (int attempt = 1;; ++attempt) {
        try {
            return post_once(config, path, body);
        } catch (const BackendError& e) {
            if (!e.retryable() || attempt >= max_attempts) {
                throw BackendError(e.kind(), e.what(), e.http_status(), attempt);
            }
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(std::min(backoff_ms, kBackoffCapMs)));
        backoff_ms = std::min(backoff_ms * 2, kBackoffCapMs);
    }
}

[[noreturn]] void malformed(const std::string& path, const std::string& detail) {
    throw BackendError(BackendErrorKind::MalformedResponse, "POST " + path + ": " + detail, 200);
}

}  // namespace

const char* backend_error_kind_name(BackendErrorKind kind) {
    switch (kind) {
        case BackendErrorKind::Transport: return "transport";
        case BackendErrorKind::Protocol: return "protocol";
        case BackendErrorKind::Auth: return "auth";
        case BackendErrorKind::RateLimited: return "rate-limited";
        case BackendErrorKind::MalformedResponse: return "malformed-response";
    }
    return "unknown";
}

BackendError::BackendError(BackendErrorKind kind, const std::string& message, int http_status, int attempts)
    : std::runtime_error(std::string(backend_error_kind_name(kind)) + ": " + message),
      kind_(kind),
      http_status_(http_status),
      attempts_(attempts) {}

predict::TopKDistribution remote_fill_mask(const BackendConfig& config, const std::string& text, int top_k) {
    const std::string path = "/v1/fill-mask";
    nlohmann::json body;
    body["text"] = text;
    body["mask_token"] = "[MASK]";
    body["top_k"] = top_k;
    const nlohmann::json res = post_with_retries(config, path, body);

    if (!res.contains("predictions") || !res["predictions"].is_array()) {
        malformed(path, "missing 'predictions' array");
    }
    if (res["predictions"].empty()) {
        malformed(path, "'predictions' is empty");
    }
    std::vector<predict::TopKDistribution::Entry> entries;
    for (const auto& item : res["predictions"]) {
        if (!item.is_object() || !item.contains("token") || !item["token"].is_string() ||
            !item.contains("prob") || !item["prob"].is_number()) {
            malformed(path, "prediction rows need a string 'token' and numeric 'prob'");
        }
        const std::string token = item["token"].get<std::string>();
        const double prob = item["prob"].get<double>();
        if (token.empty()) malformed(path, "prediction token is empty");
        if (prob < 0.0) malformed(path, "prediction probability is negative");
        entries.push_back({token, prob});
    }

    const auto order = [](const predict::TopKDistribution::Entry& a, const predict::TopKDistribution::Entry& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    };
    bool repaired = !std::is_sorted(entries.begin(), entries.end(), order);
    std::stable_sort(entries.begin(), entries.end(), order);
    // Drop lower-probability duplicates of the same token rather than rejecting.
    std::vector<predict::TopKDistribution::Entry> unique_entries;
    std::set<std::string> seen;
    for (auto& e : entries) {
        if (!seen.insert(e.first).second) {
            repaired = true;
            continue;
        }
        unique_entries.push_back(std::move(e));
    }
    if (repaired) {
        std::cerr << "warning: fill-mask response re-sorted/deduplicated to satisfy distribution invariants\n";
    }
    try {
        return predict::TopKDistribution::make(unique_entries, top_k);
    } catch (const Error& e) {
        malformed(path, std::string("invalid distribution: ") + e.what());
    }
}

std::vector<index::EmbeddingVector> remote_embed(const BackendConfig& config,
                                                 const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    const std::string path = "/v1/embed";
    nlohmann::json body;
    body["texts"] = texts;
    const nlohmann::json res = post_with_retries(config, path, body);

    if (!res.contains("vectors") || !res["vectors"].is_array()) {
        malformed(path, "missing 'vectors' array");
    }
    const auto& rows = res["vectors"];
    if (rows.size() != texts.size()) {
        malformed(path, "got " + std::to_string(rows.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
    }
    std::vector<index::EmbeddingVector> vectors;
    vectors.reserve(rows.size());
    std::size_t dim = 0;
    for (const auto& row : rows) {
        if (!row.is_array() || row.empty()) {
            malformed(path, "vector rows must be non-empty number arrays");
        }
        if (dim == 0) {
            dim = row.size();
        } else if (row.size() != dim) {
            malformed(path, "vector rows have inconsistent lengths");
        }
        index::EmbeddingVector vec;
        vec.components.reserve(row.size());
        for (const auto& c : row) {
            if (!c.is_number()) malformed(path, "vector components must be numbers");
            vec.components.push_back(c.get<float>());
        }
        vectors.push_back(std::move(vec));
    }
    return vectors;
}

generate::GenerationResult remote_generate(const BackendConfig& config, const std::string& prompt,
                                           int max_tokens, bool greedy) {
    const std::string path = "/v1/generate";
    nlohmann::json body;
    body["prompt"] = prompt;
    body["max_tokens"] = max_tokens;
    body["greedy"] = greedy;
    const nlohmann::json res = post_with_retries(config, path, body);

    if (!res.contains("text") || !res["text"].is_string()) {
        malformed(path, "missing 'text' string");
    }
    generate::GenerationResult result;
    result.text = res["text"].get<std::string>();
    if (res.contains("tokens")) {
        if (!res["tokens"].is_array()) malformed(path, "'tokens' must be an array of objects");
        for (const auto& item : res["tokens"]) {
            if (!item.is_object() || !item.contains("token") || !item["token"].is_string()) {
                malformed(path, "token rows need a string 'token'");
            }
            generate::GenerationStep step;
            step.token = item["token"].get<std::string>();
            if (item.contains("prob")) {
                if (!item["prob"].is_number()) malformed(path, "token 'prob' must be a number");
                step.prob = item["prob"].get<double>();
                if (!(step.prob > 0.0) || step.prob > 1.0) {
                    malformed(path, "token probabilities must lie in (0, 1]");
                }
            } else {
                result.prob_free = true;  // service omits per-token probs
            }
            result.steps.push_back(std::move(step));
        }
    } else {
        result.prob_free = true;
    }
    if (result.prob_free) {
        for (auto& step : result.steps) step.prob = 1.0;
    }
    if (static_cast<int>(result.steps.size()) > max_tokens) {
        malformed(path, "backend returned more tokens than max_tokens");
    }
    if (result.text.empty() && result.steps.empty()) {
        throw Error(ErrorCode::EmptyGeneration, "remote generation returned no text and no tokens");
    }
    result.log_prob = 0.0;
    if (!result.prob_free) {
        for (const auto& step : result.steps) result.log_prob += std::log(step.prob);
    }
    return result;
}

predict::TopKDistribution RemoteFillMask::fill_mask(const predict::MaskedQuery& query, int k) const {
    if (query.mask_position < 0 || query.mask_position >= static_cast<int>(query.tokens.size())) {
        throw Error(ErrorCode::OutOfRange, "fill_mask: mask position out of range");
    }
    std::string text;
    for (std::size_t i = 0; i < query.tokens.size(); ++i) {
        if (i > 0) text += " ";
        if (static_cast<int>(i) == query.mask_position) {
            text += "[MASK]";
        } else {
            text += query.tokens[i].surface;
        }
    }
    return remote_fill_mask(config_, text, k);
}

std::vector<index::EmbeddingVector> RemoteEmbedder::embed(const std::vector<std::string>& texts) const {
    auto vectors = remote_embed(config_, texts);
    for (const auto& vec : vectors) {
        if (vec.dimension() != dimension_) {
            throw BackendError(BackendErrorKind::MalformedResponse,
                               "embed: backend returned dimension " + std::to_string(vec.dimension()) +
                                   ", configured " + std::to_string(dimension_),
                               200);
        }
    }
    return vectors;
}

generate::GenerationResult RemoteGenerator::generate(const generate::Prompt& prompt, int max_tokens) const {
    return remote_generate(config_, prompt.text, max_tokens);
}

}  // namespace anchor_rag::backends
