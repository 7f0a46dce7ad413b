#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace anchor_rag::config {

/// Settings for one run. Precedence when assembling: defaults, then a config
/// file, then command-line flags.
struct RunConfig {
    std::string corpus_path;
    std::string index_path = "index";
    std::string dataset_path;
    std::string json = "report.json";
    std::string mode = "anchor-rag";          // anchor-rag | naive-rag | no-retrieval
    std::string predictor = "ngram";          // ngram | remote
    std::string embedder = "hashed";          // hashed | remote
    std::string generator = "extractive";     // extractive | scripted | remote
    std::string template_id = "default-v1";
    std::string base_url = "http://127.0.0.1:8080";
    std::string api_key_env = "ANCHOR_RAG_API_KEY";
    int k = 10;                 // fill-mask candidates per masked position
    int top_n = 5;              // retrieved chunks kept
    double alpha = 0.2;         // anchor budget fraction of content tokens
    int m_max = 3;              // anchor count cap
    std::optional<double> tau;  // entropy floor; unset = keep all candidates
    double temperature = 0.1;   // retrieval weight softmax temperature
    int window = 100;           // chunk size in tokens
    int overlap = 20;           // chunk overlap in tokens
    int dimension = 256;        // embedding dimension
    std::uint64_t seed = 42;
    int prompt_budget = 1024;   // prompt size cap in word tokens
    int max_tokens = 64;        // generation length cap
    int workers = 1;
    int timeout_ms = 10000;
    int max_retries = 2;
    int backoff_initial_ms = 250;
    int gen_docs = 200;         // synthetic corpus size
    int gen_questions = 50;     // synthetic dataset size
};

struct FieldInfo {
    std::string key;
    std::string type;  // "string" | "int" | "uint" | "double" | "double-or-off"
    std::string default_value;
    std::string description;
};

/// One entry per settable key, in declaration order.
const std::vector<FieldInfo>& schema();

/// Current value of one key, in the same textual form parse accepts.
/// Throws Error{ConfigError} on unknown keys.
std::string get_value(const RunConfig& cfg, const std::string& key);

/// Sets one key from text. Throws Error{ConfigError} on unknown keys or
/// unparsable values.
void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value);

/// Applies a flat key=value file ('#' comments and blank lines ignored; later
/// lines win). Throws Error{ConfigError} with the offending line number.
void load_file(RunConfig& cfg, const std::filesystem::path& path);

/// Range and enum checks across all fields. Throws Error{ConfigError}.
void validate(const RunConfig& cfg);

/// "key=value" lines for every schema key, sorted by key. Two configs are
/// equivalent exactly when their canonical strings match.
std::string canonical_string(const RunConfig& cfg);

/// 16 hex digits hashed from the canonical string.
std::string fingerprint(const RunConfig& cfg);

}  // namespace anchor_rag::config
