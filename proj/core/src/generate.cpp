#include "anchor_rag/generate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "anchor_rag/common.hpp"
#include "anchor_rag/text.hpp"

namespace anchor_rag::resources {
const char* prompt_default_v1();
}

namespace anchor_rag::generate {

namespace {

const std::map<std::string, std::string>& template_registry() {
    static const std::map<std::string, std::string> registry = {
        {"default-v1", resources::prompt_default_v1()},
    };
    return registry;
}

std::string expand_passages(const std::vector<PromptPassage>& passages) {
    std::string out;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        if (i > 0) out += "\n";
        out += "[" + passages[i].chunk_id + "] " + passages[i].text;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

/// Substitutes {{passages}}, {{anchors}}, {{question}} line by line; a line whose
/// placeholders all expand to nothing is dropped entirely.
std::string render_template(const std::string& body, const std::string& passages, const std::string& anchors,
                            const std::string& question) {
    const std::map<std::string, const std::string*> fields = {
        {"{{passages}}", &passages},
        {"{{anchors}}", &anchors},
        {"{{question}}", &question},
    };
    std::string out;
    std::istringstream lines(body);
    std::string line;
    bool first = true;
    while (std::getline(lines, line)) {
        bool has_placeholder = false;
        bool any_content = false;
        std::string rendered = line;
        for (const auto& [key, value] : fields) {
            std::size_t pos;
            while ((pos = rendered.find(key)) != std::string::npos) {
                has_placeholder = true;
                if (!value->empty()) any_content = true;
                rendered = rendered.substr(0, pos) + *value + rendered.substr(pos + key.size());
            }
        }
        if (has_placeholder && !any_content) continue;
        if (!first) out += "\n";
        out += rendered;
        first = false;
    }
    return out;
}

int word_count(const std::string& text_in) { return static_cast<int>(text::tokenize(text_in).size()); }

std::vector<std::string> whitespace_split(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string word;
    while (in >> word) out.push_back(word);
    return out;
}

std::vector<std::string> step_tokens(const GenerationResult& result) {
    std::vector<std::string> tokens;
    tokens.reserve(result.steps.size());
    for (const auto& step : result.steps) tokens.push_back(step.token);
    return tokens;
}

}  // namespace

const std::string& prompt_template(const std::string& id) {
    const auto& registry = template_registry();
    auto it = registry.find(id);
    if (it == registry.end()) {
        throw Error(ErrorCode::UnknownTemplate, "prompt_template: unknown template '" + id + "'");
    }
    return it->second;
}

std::vector<std::string> known_templates() {
    std::vector<std::string> ids;
    for (const auto& [id, body] : template_registry()) ids.push_back(id);
    return ids;
}

Prompt assemble_prompt(const std::string& question, const std::vector<anchor::Anchor>& anchors,
                       const std::vector<index::RetrievalResult>& retrieved, const std::string& template_id,
                       int budget) {
    if (budget < 1) {
        throw Error(ErrorCode::InvalidParameters, "assemble_prompt: budget must be >= 1");
    }
    const std::string& body = prompt_template(template_id);

    Prompt prompt;
    prompt.template_id = template_id;
    prompt.question = question;
    for (const auto& a : anchors) prompt.anchor_tokens.push_back(a.token.normalized);
    for (const auto& r : retrieved) {
        prompt.passages.push_back(PromptPassage{r.chunk.chunk_id, r.chunk.text, r.weight});
    }
    std::stable_sort(prompt.passages.begin(), prompt.passages.end(),
                     [](const PromptPassage& a, const PromptPassage& b) { return a.weight > b.weight; });

    const std::string anchors_text = join(prompt.anchor_tokens, ", ");
    while (true) {
        prompt.text = render_template(body, expand_passages(prompt.passages), anchors_text, question);
        if (word_count(prompt.text) <= budget || prompt.passages.empty()) break;
        prompt.passages.pop_back();  // lowest weight; latest retrieval rank on ties
    }
    return prompt;
}

GenerationResult generate(const Generator& generator, const Prompt& prompt, int max_tokens) {
    if (max_tokens < 1) {
        throw Error(ErrorCode::InvalidParameters, "generate: max_tokens must be >= 1");
    }
    GenerationResult result = generator.generate(prompt, max_tokens);
    if (static_cast<int>(result.steps.size()) > max_tokens) {
        result.steps.resize(static_cast<std::size_t>(max_tokens));
        result.text = join(step_tokens(result), " ");
    }
    if (result.text.empty() && result.steps.empty()) {
        throw Error(ErrorCode::EmptyGeneration,
                    "generate: generator '" + generator.id() + "' produced no output");
    }
    result.log_prob = 0.0;
    for (const auto& step : result.steps) {
        if (!(step.prob > 0.0) || step.prob > 1.0) {
            throw Error(ErrorCode::DataFormat, "generate: generator '" + generator.id() +
                                                   "' returned a step probability outside (0, 1]");
        }
        result.log_prob += std::log(step.prob);
    }
    return result;
}

double sequence_prob(const GenerationResult& result) {
    if (result.prob_free) return 1.0;
    double prob = 1.0;
    for (const auto& step : result.steps) {
        if (!(step.prob > 0.0) || step.prob > 1.0) {
            throw Error(ErrorCode::InvalidParameters, "sequence_prob: step probability outside (0, 1]");
        }
        prob *= step.prob;
    }
    return prob;
}

GenerationResult ExtractiveStubGenerator::generate(const Prompt& prompt, int max_tokens) const {
    if (prompt.passages.empty()) {
        throw Error(ErrorCode::EmptyGeneration, "extractive generator: prompt has no passages");
    }
    std::vector<std::string> anchor_set = prompt.anchor_tokens;
    std::sort(anchor_set.begin(), anchor_set.end());

    std::string best_sentence;
    int best_score = -1;
    for (const auto& passage : prompt.passages) {
        for (const auto& sentence : text::sentence_split(passage.text)) {
            int score = 0;
            for (const auto& tok : text::tokenize(sentence)) {
                if (std::binary_search(anchor_set.begin(), anchor_set.end(), tok.normalized)) ++score;
            }
            if (score > best_score) {
                best_score = score;
                best_sentence = sentence;
            }
        }
    }
    if (best_score < 0) {
        throw Error(ErrorCode::EmptyGeneration, "extractive generator: passages contain no sentences");
    }

    GenerationResult result;
    std::vector<std::string> words = whitespace_split(best_sentence);
    if (static_cast<int>(words.size()) > max_tokens) {
        words.resize(static_cast<std::size_t>(max_tokens));
    }
    for (const auto& word : words) result.steps.push_back(GenerationStep{word, 1.0});
    result.text = join(words, " ");
    return result;
}

GenerationResult ScriptedGenerator::generate(const Prompt& prompt, int /*max_tokens*/) const {
    const std::string key = prompt.passages.empty() ? prompt.question : prompt.passages[0].chunk_id;
    auto it = responses_.find(key);
    if (it == responses_.end()) {
        if (fallback_) return *fallback_;
        throw Error(ErrorCode::InvalidParameters, "scripted generator: no response for key '" + key + "'");
    }
    return it->second;
}

std::vector<GenerationRecord> generate_per_chunk(const std::vector<index::RetrievalResult>& retrieved,
                                                 const Generator& generator, const std::string& question,
                                                 const std::vector<anchor::Anchor>& anchors,
                                                 const std::string& template_id, int budget, int max_tokens) {
    std::vector<GenerationRecord> records;
    records.reserve(retrieved.size());
    for (const auto& r : retrieved) {
        const std::vector<index::RetrievalResult> single = {r};
        const Prompt prompt = assemble_prompt(question, anchors, single, template_id, budget);
        GenerationRecord record;
        record.chunk_id = r.chunk.chunk_id;
        record.weight = r.weight;
        try {
            record.result = generate(generator, prompt, max_tokens);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::EmptyGeneration) continue;
            throw;
        }
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<AnswerCandidate> marginalize_groups(const std::vector<GenerationRecord>& records) {
    std::map<std::string, AnswerCandidate> groups;
    for (const auto& record : records) {
        if (record.result.text.empty()) continue;
        const std::string key = text::normalize_answer(record.result.text);
        auto [it, inserted] = groups.try_emplace(key);
        AnswerCandidate& group = it->second;
        if (inserted) {
            group.answer = record.result.text;
            group.normalized = key;
        }
        const double conditional = sequence_prob(record.result);
        group.per_doc.emplace_back(record.chunk_id, conditional);
        group.marginal_prob += record.weight * conditional;
    }
    if (groups.empty()) {
        throw Error(ErrorCode::AllGenerationsEmpty, "marginalize: every generation produced empty text");
    }
    std::vector<AnswerCandidate> candidates;
    candidates.reserve(groups.size());
    for (auto& [key, group] : groups) candidates.push_back(std::move(group));
    std::stable_sort(candidates.begin(), candidates.end(), [](const AnswerCandidate& a, const AnswerCandidate& b) {
        if (a.marginal_prob != b.marginal_prob) return a.marginal_prob > b.marginal_prob;
        return a.normalized < b.normalized;
    });
    return candidates;
}

AnswerCandidate marginalize(const std::vector<index::RetrievalResult>& retrieved, const Generator& generator,
                            const std::string& question, const std::vector<anchor::Anchor>& anchors,
                            const std::string& template_id, int budget, int max_tokens) {
    if (retrieved.empty()) {
        throw Error(ErrorCode::InvalidParameters, "marginalize: no retrieved chunks");
    }
    const auto records = generate_per_chunk(retrieved, generator, question, anchors, template_id, budget, max_tokens);
    return marginalize_groups(records).front();
}

}  // namespace anchor_rag::generate
