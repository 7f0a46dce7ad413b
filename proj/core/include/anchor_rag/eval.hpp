#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "anchor_rag/anchor.hpp"
#include "anchor_rag/generate.hpp"
#include "anchor_rag/index.hpp"
#include "anchor_rag/predict.hpp"

namespace anchor_rag::eval {

struct QAExample {
    std::string id;
    std::string question;
    std::vector<std::string> gold_answers;  // never empty
};

/// One question-answer pair per line: {"id", "question", "answers": [...]}.
/// Enforces unique ids and non-empty answer lists. Throws Error{DataFormat}
/// with the offending line number.
std::vector<QAExample> load_dataset_jsonl(const std::filesystem::path& path);

/// 1.0 when the normalized prediction equals any normalized gold, else 0.0.
double exact_match(const std::string& prediction, const std::vector<std::string>& golds);

/// Best token-level F1 against any gold, on normalized token multisets; both
/// sides empty scores 1.0, exactly one side empty scores 0.0.
double f1(const std::string& prediction, const std::vector<std::string>& golds);

/// Fraction of the prediction's non-stopword normalized token occurrences that
/// appear in neither the evidence texts nor the question. A prediction with no
/// such tokens scores 0.0. A lexical proxy: it flags unsupported wording, not
/// factual wrongness.
double hallucination_rate(const std::string& prediction, const std::vector<std::string>& evidence,
                          const std::string& question);

/// Distinct-n: unique normalized token n-grams across all responses divided by
/// the total n-gram count; 0.0 when there are no n-grams.
double diversity(const std::vector<std::string>& responses, int n);

enum class Mode { AnchorRag, NaiveRag, NoRetrieval };

/// Accepts "anchor-rag", "naive-rag", "no-retrieval"; throws Error{ConfigError}.
Mode parse_mode(const std::string& name);
std::string mode_name(Mode mode);

struct PipelineOptions {
    Mode mode = Mode::AnchorRag;
    int k = 10;
    anchor::SelectionPolicy policy;
    int top_n = 5;
    double temperature = 0.1;
    std::string template_id = "default-v1";
    int prompt_budget = 1024;
    int max_tokens = 64;
};

/// Wiring for one configured run. The generator is always required; index and
/// embedder are required unless mode is NoRetrieval; the predictor is required
/// only for AnchorRag. All referenced components must be safe for concurrent
/// const use when run_eval is given more than one worker.
struct Pipeline {
    const index::Index* index = nullptr;
    const index::Embedder* embedder = nullptr;
    const predict::FillMaskPredictor* predictor = nullptr;
    const generate::Generator* generator = nullptr;
    PipelineOptions options;
};

struct AskResult {
    std::string answer;
    std::string normalized_answer;
    double marginal_prob = 0.0;
    std::vector<anchor::Anchor> anchors;
    std::vector<index::RetrievalResult> retrieved;
    std::vector<generate::AnswerCandidate> candidates;  // marginal_prob desc
};

/// Runs one question through the configured pipeline. In AnchorRag mode a
/// question with no usable anchor candidates falls back to whole-question
/// retrieval instead of failing.
AskResult ask_question(const Pipeline& pipeline, const std::string& question);

struct ExampleResult {
    std::string id;
    std::string question;
    std::string prediction;
    double em = 0.0;
    double f1 = 0.0;
    double hallucination = 0.0;
    bool failed = false;
    std::string error;
    std::vector<std::string> anchors;
    std::vector<std::string> retrieved_chunks;
};

struct MetricsReport {
    std::string mode;
    std::string config_fingerprint;
    int n_examples = 0;
    int n_failed = 0;
    double em = 0.0;
    double f1 = 0.0;
    double hallucination_rate = 0.0;
    double distinct1 = 0.0;
    double distinct2 = 0.0;
    std::vector<ExampleResult> per_example;
};

/// Scores every example (failed ones count as 0 and are flagged) and averages.
/// Examples are processed by `workers` threads but reported in dataset order.
/// Throws Error{DataFormat} on an empty dataset.
MetricsReport run_eval(const Pipeline& pipeline, const std::vector<QAExample>& dataset, int workers,
                       const std::string& config_fingerprint);

/// Stable pretty-printed JSON form of a report (alphabetical keys, no
/// timestamps), so equal reports serialize to identical bytes.
std::string report_json(const MetricsReport& report);

/// Fixed-width summary table for terminal output.
std::string report_table(const MetricsReport& report);

}  // namespace anchor_rag::eval
