#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "anchor_rag/eval.hpp"
#include "anchor_rag/index.hpp"

namespace anchor_rag::fixtures {

struct SyntheticData {
    std::vector<index::Document> docs;
    std::vector<eval::QAExample> questions;
};

/// Seeded company-founding corpus. Each document carries one fact sentence
/// ("<Entity> was founded in <year> in <city>.") plus two filler sentences;
/// the fact leads in even-numbered documents and trails in odd-numbered ones.
/// Entity lead tokens are unique across the corpus, so each of the first
/// n_questions documents is the sole support for its question ("<Entity> was
/// founded in which year?", gold answer = the fact sentence verbatim).
SyntheticData make_synthetic(int n_docs, int n_questions, std::uint64_t seed);

/// Checks the unique-support property: every question's entity lead token
/// occurs in exactly one document, and that document contains the gold answer
/// verbatim. Throws Error{DataFormat} on violation.
void verify_unique_support(const SyntheticData& data);

void write_jsonl(const SyntheticData& data, const std::filesystem::path& corpus_path,
                 const std::filesystem::path& dataset_path);

}  // namespace anchor_rag::fixtures
