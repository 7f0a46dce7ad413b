#include "anchor_rag/eval.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "anchor_rag/common.hpp"
#include "anchor_rag/text.hpp"

namespace anchor_rag::eval {

namespace {

std::vector<std::string> answer_tokens(const std::string& answer) {
    std::vector<std::string> tokens;
    std::istringstream in(text::normalize_answer(answer));
    std::string word;
    while (in >> word) tokens.push_back(word);
    return tokens;
}

double token_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    if (pred.empty() || gold.empty()) return 0.0;
    std::map<std::string, int> gold_counts;
    for (const auto& tok : gold) ++gold_counts[tok];
    int common = 0;
    for (const auto& tok : pred) {
        auto it = gold_counts.find(tok);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
    const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::vector<QAExample> load_dataset_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::DataFormat, "load_dataset_jsonl: cannot open " + path.string());
    }
    std::vector<QAExample> examples;
    std::set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = "load_dataset_jsonl: " + path.string() + " line " + std::to_string(line_no);
        QAExample ex;
        try {
            const nlohmann::json row = nlohmann::json::parse(line);
            ex.id = row.at("id").get<std::string>();
            ex.question = row.at("question").get<std::string>();
            ex.gold_answers = row.at("answers").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::DataFormat, where + ": " + e.what());
        }
        if (ex.gold_answers.empty()) {
            throw Error(ErrorCode::DataFormat, where + ": 'answers' must not be empty");
        }
        if (!seen_ids.insert(ex.id).second) {
            throw Error(ErrorCode::DataFormat, where + ": duplicate id '" + ex.id + "'");
        }
        examples.push_back(std::move(ex));
    }
    return examples;
}

double exact_match(const std::string& prediction, const std::vector<std::string>& golds) {
    const std::string pred = text::normalize_answer(prediction);
    for (const auto& gold : golds) {
        if (pred == text::normalize_answer(gold)) return 1.0;
    }
    return 0.0;
}

double f1(const std::string& prediction, const std::vector<std::string>& golds) {
    const auto pred = answer_tokens(prediction);
    double best = 0.0;
    for (const auto& gold : golds) {
        best = std::max(best, token_f1(pred, answer_tokens(gold)));
    }
    return best;
}

double hallucination_rate(const std::string& prediction, const std::vector<std::string>& evidence,
                          const std::string& question) {
    std::set<std::string> allowed;
    for (const auto& tok : text::tokenize(question)) allowed.insert(tok.normalized);
    for (const auto& chunk : evidence) {
        for (const auto& tok : text::tokenize(chunk)) allowed.insert(tok.normalized);
    }
    int content = 0;
    int unsupported = 0;
    for (const auto& tok : text::tokenize(prediction)) {
        if (tok.is_stopword) continue;
        ++content;
        if (allowed.find(tok.normalized) == allowed.end()) ++unsupported;
    }
    if (content == 0) return 0.0;
    return static_cast<double>(unsupported) / static_cast<double>(content);
}

double diversity(const std::vector<std::string>& responses, int n) {
    if (n < 1) {
        throw Error(ErrorCode::InvalidParameters, "diversity: n must be >= 1");
    }
    std::set<std::string> unique;
    long long total = 0;
    for (const auto& text_in : responses) {
        const auto tokens = text::tokenize(text_in);
        if (static_cast<int>(tokens.size()) < n) continue;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
            std::string gram;
            for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
                if (j > 0) gram += " ";
                gram += tokens[i + j].normalized;
            }
            unique.insert(std::move(gram));
            ++total;
        }
    }
    if (total == 0) return 0.0;
    return static_cast<double>(unique.size()) / static_cast<double>(total);
}

Mode parse_mode(const std::string& name) {
    if (name == "anchor-rag") return Mode::AnchorRag;
    if (name == "naive-rag") return Mode::NaiveRag;
    if (name == "no-retrieval") return Mode::NoRetrieval;
    throw Error(ErrorCode::ConfigError, "parse_mode: unknown mode '" + name + "'");
}

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::AnchorRag: return "anchor-rag";
        case Mode::NaiveRag: return "naive-rag";
        case Mode::NoRetrieval: return "no-retrieval";
    }
    throw Error(ErrorCode::ConfigError, "mode_name: bad mode value");
}

AskResult ask_question(const Pipeline& pipeline, const std::string& question) {
    const auto& opt = pipeline.options;
    if (pipeline.generator == nullptr) {
        throw Error(ErrorCode::InvalidParameters, "ask_question: no generator configured");
    }
    const bool retrieving = opt.mode != Mode::NoRetrieval;
    if (retrieving && (pipeline.index == nullptr || pipeline.embedder == nullptr)) {
        throw Error(ErrorCode::InvalidParameters, "ask_question: retrieval mode needs index and embedder");
    }
    if (opt.mode == Mode::AnchorRag && pipeline.predictor == nullptr) {
        throw Error(ErrorCode::InvalidParameters, "ask_question: anchor mode needs a fill-mask predictor");
    }

    AskResult result;
    if (opt.mode == Mode::AnchorRag) {
        const auto tokens = text::tokenize(question);
        try {
            result.anchors = anchor::scan_anchors(tokens, *pipeline.predictor, opt.k, opt.policy).anchors;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoCandidates) throw;
            // Question has no content tokens: fall back to whole-question retrieval.
        }
    }

    if (retrieving) {
        result.retrieved = index::retrieve(*pipeline.index, *pipeline.embedder, result.anchors, question,
                                           opt.top_n, opt.temperature);
        const auto records = generate::generate_per_chunk(result.retrieved, *pipeline.generator, question,
                                                          result.anchors, opt.template_id, opt.prompt_budget,
                                                          opt.max_tokens);
        result.candidates = generate::marginalize_groups(records);
        result.answer = result.candidates.front().answer;
        result.normalized_answer = result.candidates.front().normalized;
        result.marginal_prob = result.candidates.front().marginal_prob;
    } else {
        const auto prompt =
            generate::assemble_prompt(question, result.anchors, {}, opt.template_id, opt.prompt_budget);
        const auto gen = generate::generate(*pipeline.generator, prompt, opt.max_tokens);
        if (gen.text.empty()) {
            throw Error(ErrorCode::AllGenerationsEmpty, "ask_question: generation produced empty text");
        }
        generate::AnswerCandidate only;
        only.answer = gen.text;
        only.normalized = text::normalize_answer(gen.text);
        only.marginal_prob = generate::sequence_prob(gen);
        result.answer = only.answer;
        result.normalized_answer = only.normalized;
        result.marginal_prob = only.marginal_prob;
        result.candidates.push_back(std::move(only));
    }
    return result;
}

MetricsReport run_eval(const Pipeline& pipeline, const std::vector<QAExample>& dataset, int workers,
                       const std::string& config_fingerprint) {
    if (workers < 1) {
        throw Error(ErrorCode::InvalidParameters, "run_eval: workers must be >= 1");
    }
    if (dataset.empty()) {
        throw Error(ErrorCode::DataFormat, "run_eval: dataset is empty");
    }
    MetricsReport report;
    report.mode = mode_name(pipeline.options.mode);
    report.config_fingerprint = config_fingerprint;
    report.n_examples = static_cast<int>(dataset.size());
    report.per_example.resize(dataset.size());

    const auto score_one = [&](std::size_t i) {
        const QAExample& ex = dataset[i];
        ExampleResult row;
        row.id = ex.id;
        row.question = ex.question;
        try {
            const AskResult asked = ask_question(pipeline, ex.question);
            row.prediction = asked.answer;
            for (const auto& a : asked.anchors) row.anchors.push_back(a.token.normalized);
            std::vector<std::string> evidence;
            for (const auto& r : asked.retrieved) {
                row.retrieved_chunks.push_back(r.chunk.chunk_id);
                evidence.push_back(r.chunk.text);
            }
            row.em = exact_match(asked.answer, ex.gold_answers);
            row.f1 = f1(asked.answer, ex.gold_answers);
            row.hallucination = hallucination_rate(asked.answer, evidence, ex.question);
        } catch (const Error& e) {
            row.failed = true;
            row.error = e.what();
        }
        report.per_example[i] = std::move(row);
    };

    if (workers == 1 || dataset.size() <= 1) {
        for (std::size_t i = 0; i < dataset.size(); ++i) score_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        const int n_threads = std::min<int>(workers, static_cast<int>(dataset.size()));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&]() {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= dataset.size()) return;
                    score_one(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    std::vector<std::string> predictions;
    for (const auto& row : report.per_example) {
        if (row.failed) ++report.n_failed;
        report.em += row.em;
        report.f1 += row.f1;
        report.hallucination_rate += row.hallucination;
        predictions.push_back(row.prediction);
    }
    const auto n = static_cast<double>(report.per_example.size());
    report.em /= n;
    report.f1 /= n;
    report.hallucination_rate /= n;
    report.distinct1 = diversity(predictions, 1);
    report.distinct2 = diversity(predictions, 2);
    return report;
}

std::string report_json(const MetricsReport& report) {
    nlohmann::json j;
    j["mode"] = report.mode;
    j["config_fingerprint"] = report.config_fingerprint;
    j["n_examples"] = report.n_examples;
    j["n_failed"] = report.n_failed;
    j["aggregates"] = {
        {"em", report.em},
        {"f1", report.f1},
        {"hallucination_rate", report.hallucination_rate},
        {"distinct1", report.distinct1},
        {"distinct2", report.distinct2},
    };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.per_example) {
        nlohmann::json r;
        r["id"] = row.id;
        r["question"] = row.question;
        r["prediction"] = row.prediction;
        r["em"] = row.em;
        r["f1"] = row.f1;
        r["hallucination"] = row.hallucination;
        r["failed"] = row.failed;
        if (row.failed) r["error"] = row.error;
        r["anchors"] = row.anchors;
        r["retrieved_chunks"] = row.retrieved_chunks;
        rows.push_back(std::move(r));
    }
    j["per_example"] = std::move(rows);
    return j.dump(2) + "\n";
}

std::string report_table(const MetricsReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "mode               " << report.mode << "\n";
    out << "examples           " << report.n_examples << " (" << report.n_failed << " failed)\n";
    out << "em                 " << report.em << "\n";
    out << "f1                 " << report.f1 << "\n";
    out << "hallucination_rate " << report.hallucination_rate << "\n";
    out << "distinct-1         " << report.distinct1 << "\n";
    out << "distinct-2         " << report.distinct2 << "\n";
    out << "fingerprint        " << report.config_fingerprint << "\n";
    return out.str();
}

}  // namespace anchor_rag::eval
