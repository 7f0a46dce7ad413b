#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace anchor_rag {

// Error codes shared across the pipeline. Exit-code mapping lives in the CLI:
// config/usage problems -> 2, data problems -> 3, backend problems -> 4.
enum class ErrorCode {
    EmptyCorpus,
    EmptyDistribution,
    OutOfRange,
    NoCandidates,
    DimensionMismatch,
    InvalidParameters,
    DuplicateId,
    EmptyIndex,
    UnknownTemplate,
    EmptyGeneration,
    AllGenerationsEmpty,
    DataFormat,
    ConfigError,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// FNV-1a 64-bit over raw bytes. Stable across platforms; used for hashed
// embeddings and config fingerprints.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t state = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        state ^= p[i];
        state *= 0x100000001b3ULL;
    }
    return state;
}

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t state = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), state);
}

// splitmix64: tiny fully-specified PRNG. std::uniform_* distributions are not
// portable across standard libraries, so seeded fixtures use this instead.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

    // Uniform double in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

}  // namespace anchor_rag
