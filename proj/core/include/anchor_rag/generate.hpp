#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anchor_rag/anchor.hpp"
#include "anchor_rag/index.hpp"

namespace anchor_rag::generate {

struct PromptPassage {
    std::string chunk_id;
    std::string text;
    double weight = 0.0;
};

/// Rendered prompt plus the structured fields it was rendered from, so local
/// generators can work from structure instead of re-parsing the text.
struct Prompt {
    std::string text;
    std::string template_id;
    std::string question;
    std::vector<std::string> anchor_tokens;
    std::vector<PromptPassage> passages;  // weight descending
};

struct GenerationStep {
    std::string token;
    double prob = 1.0;  // in (0, 1]
};

struct GenerationResult {
    std::string text;
    std::vector<GenerationStep> steps;
    double log_prob = 0.0;  // sum of ln(step prob); 0 when there are no steps
    bool prob_free = false;  // true when the producing backend reports no probabilities
};

/// Returns the template body for a registered template id.
/// Throws Error{UnknownTemplate}.
const std::string& prompt_template(const std::string& id);

std::vector<std::string> known_templates();

/// Renders the template with passages ("[chunk_id] text" lines, weight
/// descending), anchor tokens, and the question. Template lines whose
/// placeholders all expand to nothing are dropped. If the rendered prompt
/// exceeds `budget` word tokens, the lowest-weight passage is removed and the
/// prompt re-rendered until it fits or no passages remain (the passage-free
/// prompt is returned even if still over).
Prompt assemble_prompt(const std::string& question, const std::vector<anchor::Anchor>& anchors,
                       const std::vector<index::RetrievalResult>& retrieved, const std::string& template_id,
                       int budget);

class Generator {
public:
    virtual ~Generator() = default;
    virtual GenerationResult generate(const Prompt& prompt, int max_tokens) const = 0;
    virtual std::string id() const = 0;
};

/// Runs the generator, truncates the result to max_tokens steps, validates step
/// probabilities, and recomputes log_prob so it always matches the steps.
/// Throws Error{EmptyGeneration} when the result has neither text nor steps.
GenerationResult generate(const Generator& generator, const Prompt& prompt, int max_tokens);

/// Product of step probabilities; 1.0 for probability-free or step-free
/// results. Throws Error{InvalidParameters} on probabilities outside (0, 1].
double sequence_prob(const GenerationResult& result);

/// Offline generator: picks the passage sentence with the most anchor-token
/// occurrences (ties: earlier passage, then earlier sentence); with no matches
/// it falls back to the first sentence of the first passage. Output steps are
/// the sentence's whitespace-separated words, capped at max_tokens, each with
/// probability 1. Throws Error{EmptyGeneration} when the prompt has no passages.
class ExtractiveStubGenerator final : public Generator {
public:
    GenerationResult generate(const Prompt& prompt, int max_tokens) const override;
    std::string id() const override { return "extractive-v1"; }
};

/// Canned-response generator keyed by the prompt's first passage chunk id (or
/// by the question when the prompt has no passages). An unmatched key returns
/// the fallback when one is set and throws Error{InvalidParameters} otherwise.
class ScriptedGenerator final : public Generator {
public:
    explicit ScriptedGenerator(std::map<std::string, GenerationResult> responses,
                               std::optional<GenerationResult> fallback = std::nullopt)
        : responses_(std::move(responses)), fallback_(std::move(fallback)) {}

    GenerationResult generate(const Prompt& prompt, int max_tokens) const override;
    std::string id() const override { return "scripted"; }

private:
    std::map<std::string, GenerationResult> responses_;
    std::optional<GenerationResult> fallback_;
};

struct GenerationRecord {
    std::string chunk_id;
    double weight = 0.0;
    GenerationResult result;
};

struct AnswerCandidate {
    std::string answer;      // raw text from the first supporting generation
    std::string normalized;  // grouping key
    std::vector<std::pair<std::string, double>> per_doc;  // (chunk id, conditional prob), record order
    double marginal_prob = 0.0;  // sum of weight * conditional prob over per_doc
};

/// One single-passage prompt and one generation per retrieved chunk.
/// Chunks whose generator raises Error{EmptyGeneration} are skipped.
std::vector<GenerationRecord> generate_per_chunk(const std::vector<index::RetrievalResult>& retrieved,
                                                 const Generator& generator, const std::string& question,
                                                 const std::vector<anchor::Anchor>& anchors,
                                                 const std::string& template_id, int budget, int max_tokens);

/// Groups records by normalized answer text; each group's marginal_prob is
/// sum(weight * sequence_prob) over its records. Records with empty result text
/// are skipped. Returns groups sorted by (marginal_prob desc, normalized asc).
/// Throws Error{AllGenerationsEmpty} if nothing survives.
std::vector<AnswerCandidate> marginalize_groups(const std::vector<GenerationRecord>& records);

/// Answer selection over retrieved chunks: generate_per_chunk, group identical
/// normalized answers, return the highest-marginal group (ties: lexicographic
/// normalized answer).
AnswerCandidate marginalize(const std::vector<index::RetrievalResult>& retrieved, const Generator& generator,
                            const std::string& question, const std::vector<anchor::Anchor>& anchors,
                            const std::string& template_id, int budget, int max_tokens);

}  // namespace anchor_rag::generate
