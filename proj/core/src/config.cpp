#include "anchor_rag/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <climits>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "anchor_rag/common.hpp"

namespace anchor_rag::config {

namespace {

std::string format_double(double v) {
    std::array<char, 64> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) {
        throw Error(ErrorCode::ConfigError, "config: '" + key + "' needs a number, got '" + value + "'");
    }
    return out;
}

long long parse_int(const std::string& key, const std::string& value) {
    long long out = 0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) {
        throw Error(ErrorCode::ConfigError, "config: '" + key + "' needs an integer, got '" + value + "'");
    }
    return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) {
        throw Error(ErrorCode::ConfigError,
                    "config: '" + key + "' needs a non-negative integer, got '" + value + "'");
    }
    return out;
}

struct Field {
    FieldInfo info;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

Field string_field(std::string key, std::string RunConfig::*member, std::string description,
                   const RunConfig& defaults) {
    Field f;
    f.info = FieldInfo{key, "string", defaults.*member, std::move(description)};
    f.get = [member](const RunConfig& c) { return c.*member; };
    f.set = [member](RunConfig& c, const std::string& v) { c.*member = v; };
    return f;
}

Field int_field(std::string key, int RunConfig::*member, std::string description, const RunConfig& defaults) {
    Field f;
    f.info = FieldInfo{key, "int", std::to_string(defaults.*member), std::move(description)};
    f.get = [member](const RunConfig& c) { return std::to_string(c.*member); };
    f.set = [member, key](RunConfig& c, const std::string& v) {
        const long long parsed = parse_int(key, v);
        if (parsed < INT_MIN || parsed > INT_MAX) {
            throw Error(ErrorCode::ConfigError, "config: '" + key + "' is out of range");
        }
        c.*member = static_cast<int>(parsed);
    };
    return f;
}

Field uint_field(std::string key, std::uint64_t RunConfig::*member, std::string description,
                 const RunConfig& defaults) {
    Field f;
    f.info = FieldInfo{key, "uint", std::to_string(defaults.*member), std::move(description)};
    f.get = [member](const RunConfig& c) { return std::to_string(c.*member); };
    f.set = [member, key](RunConfig& c, const std::string& v) { c.*member = parse_uint(key, v); };
    return f;
}

Field double_field(std::string key, double RunConfig::*member, std::string description,
                   const RunConfig& defaults) {
    Field f;
    f.info = FieldInfo{key, "double", format_double(defaults.*member), std::move(description)};
    f.get = [member](const RunConfig& c) { return format_double(c.*member); };
    f.set = [member, key](RunConfig& c, const std::string& v) { c.*member = parse_double(key, v); };
    return f;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        const RunConfig defaults;
        std::vector<Field> t;
        t.push_back(string_field("corpus_path", &RunConfig::corpus_path, "corpus JSONL file", defaults));
        t.push_back(string_field("index_path", &RunConfig::index_path, "index directory", defaults));
        t.push_back(string_field("dataset_path", &RunConfig::dataset_path, "QA dataset JSONL file", defaults));
        t.push_back(string_field("json", &RunConfig::json, "metrics report output file", defaults));
        t.push_back(string_field("mode", &RunConfig::mode, "anchor-rag, naive-rag, or no-retrieval", defaults));
        t.push_back(string_field("predictor", &RunConfig::predictor, "fill-mask backend: ngram or remote",
                                 defaults));
        t.push_back(string_field("embedder", &RunConfig::embedder, "embedding backend: hashed or remote",
                                 defaults));
        t.push_back(string_field("generator", &RunConfig::generator,
                                 "generation backend: extractive, scripted, or remote", defaults));
        t.push_back(string_field("template_id", &RunConfig::template_id, "prompt template id", defaults));
        t.push_back(string_field("base_url", &RunConfig::base_url, "remote backend base URL", defaults));
        t.push_back(string_field("api_key_env", &RunConfig::api_key_env,
                                 "environment variable holding the bearer token", defaults));
        t.push_back(int_field("k", &RunConfig::k, "fill-mask candidates per masked position", defaults));
        t.push_back(int_field("top_n", &RunConfig::top_n, "retrieved chunks kept", defaults));
        t.push_back(double_field("alpha", &RunConfig::alpha, "anchor budget fraction", defaults));
        t.push_back(int_field("m_max", &RunConfig::m_max, "anchor count cap", defaults));
        {
            Field f;
            const RunConfig d;
            f.info = FieldInfo{"tau", "double-or-off", d.tau ? format_double(*d.tau) : "off",
                               "entropy floor for anchors, or 'off'"};
            f.get = [](const RunConfig& c) { return c.tau ? format_double(*c.tau) : "off"; };
            f.set = [](RunConfig& c, const std::string& v) {
                if (v == "off") {
                    c.tau.reset();
                } else {
                    c.tau = parse_double("tau", v);
                }
            };
            t.push_back(std::move(f));
        }
        t.push_back(double_field("temperature", &RunConfig::temperature,
                                 "retrieval weight softmax temperature", defaults));
        t.push_back(int_field("window", &RunConfig::window, "chunk size in tokens", defaults));
        t.push_back(int_field("overlap", &RunConfig::overlap, "chunk overlap in tokens", defaults));
        t.push_back(int_field("dimension", &RunConfig::dimension, "embedding dimension", defaults));
        t.push_back(uint_field("seed", &RunConfig::seed, "hashing and fixture seed", defaults));
        t.push_back(int_field("prompt_budget", &RunConfig::prompt_budget, "prompt cap in word tokens",
                              defaults));
        t.push_back(int_field("max_tokens", &RunConfig::max_tokens, "generation length cap", defaults));
        t.push_back(int_field("workers", &RunConfig::workers, "evaluation threads", defaults));
        t.push_back(int_field("timeout_ms", &RunConfig::timeout_ms, "remote call timeout", defaults));
        t.push_back(int_field("max_retries", &RunConfig::max_retries, "remote retry limit", defaults));
        t.push_back(int_field("backoff_initial_ms", &RunConfig::backoff_initial_ms,
                              "first retry wait, doubling per attempt", defaults));
        t.push_back(int_field("gen_docs", &RunConfig::gen_docs, "synthetic corpus size", defaults));
        t.push_back(int_field("gen_questions", &RunConfig::gen_questions, "synthetic dataset size", defaults));
        return t;
    }();
    return table;
}

const Field& field_by_key(const std::string& key) {
    for (const auto& f : fields()) {
        if (f.info.key == key) return f;
    }
    throw Error(ErrorCode::ConfigError, "config: unknown key '" + key + "'");
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void require(bool ok, const std::string& message) {
    if (!ok) throw Error(ErrorCode::ConfigError, "config: " + message);
}

}  // namespace

const std::vector<FieldInfo>& schema() {
    static const std::vector<FieldInfo> infos = [] {
        std::vector<FieldInfo> out;
        for (const auto& f : fields()) out.push_back(f.info);
        return out;
    }();
    return infos;
}

std::string get_value(const RunConfig& cfg, const std::string& key) { return field_by_key(key).get(cfg); }

void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    field_by_key(key).set(cfg, value);
}

void load_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::ConfigError, "config: cannot open " + path.string());
    }
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::ConfigError, "config: " + path.string() + " line " +
                                                    std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        try {
            apply_kv(cfg, key, value);
        } catch (const Error& e) {
            throw Error(ErrorCode::ConfigError,
                        "config: " + path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void validate(const RunConfig& cfg) {
    require(cfg.mode == "anchor-rag" || cfg.mode == "naive-rag" || cfg.mode == "no-retrieval",
            "mode must be anchor-rag, naive-rag, or no-retrieval");
    require(cfg.predictor == "ngram" || cfg.predictor == "remote", "predictor must be ngram or remote");
    require(cfg.embedder == "hashed" || cfg.embedder == "remote", "embedder must be hashed or remote");
    require(cfg.generator == "extractive" || cfg.generator == "scripted" || cfg.generator == "remote",
            "generator must be extractive, scripted, or remote");
    require(!cfg.template_id.empty(), "template_id must not be empty");
    require(cfg.k >= 2, "k must be >= 2");
    require(cfg.top_n >= 1, "top_n must be >= 1");
    require(cfg.alpha > 0.0, "alpha must be > 0");
    require(cfg.m_max >= 1, "m_max must be >= 1");
    require(!cfg.tau || !std::isnan(*cfg.tau), "tau must be a number or 'off'");
    require(cfg.temperature > 0.0, "temperature must be > 0");
    require(cfg.window >= 1, "window must be >= 1");
    require(cfg.overlap >= 0 && cfg.overlap < cfg.window, "overlap must satisfy 0 <= overlap < window");
    require(cfg.dimension >= 8, "dimension must be >= 8");
    require(cfg.prompt_budget >= 1, "prompt_budget must be >= 1");
    require(cfg.max_tokens >= 1, "max_tokens must be >= 1");
    require(cfg.workers >= 1, "workers must be >= 1");
    require(cfg.timeout_ms >= 1, "timeout_ms must be >= 1");
    require(cfg.max_retries >= 0, "max_retries must be >= 0");
    require(cfg.backoff_initial_ms >= 1, "backoff_initial_ms must be >= 1");
    require(cfg.gen_docs >= 1, "gen_docs must be >= 1");
    require(cfg.gen_questions >= 1, "gen_questions must be >= 1");
}

std::string canonical_string(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& f : fields()) pairs.emplace_back(f.info.key, f.get(cfg));
    std::sort(pairs.begin(), pairs.end());
    std::string out;
    for (const auto& [key, value] : pairs) {
        out += key;
        out += "=";
        out += value;
        out += "\n";
    }
    return out;
}

std::string fingerprint(const RunConfig& cfg) {
    const std::string canonical = canonical_string(cfg);
    const std::uint64_t hash = fnv1a64(canonical.data(), canonical.size());
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << hash;
    return out.str();
}

}  // namespace anchor_rag::config
