#include "anchor_rag/fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "anchor_rag/common.hpp"
#include "anchor_rag/text.hpp"

namespace anchor_rag::fixtures {

namespace {

const std::vector<std::string> kLeadPrefixes = {
    "bel", "cor", "dal", "fen", "gor", "hal", "jes", "kel", "lor", "mar",
    "nol", "por", "quin", "ral", "sil", "tor", "ul", "ven", "wex", "yar",
};

const std::vector<std::string> kLeadSuffixes = {
    "ba", "co", "dex", "fin", "gate", "lin", "mond", "nex", "pora", "quest",
    "rix", "son", "tew", "tron", "vale", "wick", "xor", "yne", "zor", "mir",
};

const std::vector<std::string> kTrailWords = {
    "dynamics", "systems", "industries", "holdings", "logistics", "materials",
    "instruments", "networks", "partners", "ventures", "fabrication", "robotics",
};

const std::vector<std::string> kCities = {
    "springfield", "riverton", "oakdale", "maplewood", "lakeside", "hillcrest",
    "brookfield", "clearwater", "fairview", "greenfield", "kingsport", "norwood",
    "pinehurst", "redmondale", "stonebridge", "westbrook", "ashford", "elmira",
};

const std::vector<std::string> kSectors = {
    "textile", "shipping", "ceramics", "forestry", "printing", "brewing",
    "packaging", "glassware", "milling", "tooling", "dyeing", "tanning",
};

std::string capitalize(std::string word) {
    if (!word.empty() && word[0] >= 'a' && word[0] <= 'z') {
        word[0] = static_cast<char>(word[0] - 'a' + 'A');
    }
    return word;
}

std::string pad4(int n) {
    std::ostringstream out;
    out << std::setw(4) << std::setfill('0') << n;
    return out.str();
}

template <typename T>
const T& pick(const std::vector<T>& pool, SplitMix64& rng) {
    return pool[static_cast<std::size_t>(rng.below(pool.size()))];
}

}  // namespace

SyntheticData make_synthetic(int n_docs, int n_questions, std::uint64_t seed) {
    if (n_docs < 1 || n_questions < 1) {
        throw Error(ErrorCode::InvalidParameters, "make_synthetic: counts must be >= 1");
    }
    if (n_questions > n_docs) {
        throw Error(ErrorCode::InvalidParameters, "make_synthetic: more questions than documents");
    }

    std::vector<std::string> leads;
    leads.reserve(kLeadPrefixes.size() * kLeadSuffixes.size());
    for (const auto& p : kLeadPrefixes) {
        for (const auto& s : kLeadSuffixes) leads.push_back(p + s);
    }

    SplitMix64 rng{seed};
    // Fisher-Yates, so lead-token assignment varies with the seed.
    for (std::size_t i = leads.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(leads[i], leads[j]);
    }

    SyntheticData data;
    data.docs.reserve(static_cast<std::size_t>(n_docs));
    data.questions.reserve(static_cast<std::size_t>(n_questions));
    for (int i = 0; i < n_docs; ++i) {
        std::string lead = leads[static_cast<std::size_t>(i) % leads.size()];
        if (static_cast<std::size_t>(i) >= leads.size()) {
            lead += std::to_string(static_cast<std::size_t>(i) / leads.size());
        }
        const std::string entity = capitalize(lead) + " " + capitalize(pick(kTrailWords, rng));
        const int year = 1950 + static_cast<int>(rng.below(71));
        const std::string& city = pick(kCities, rng);

        const std::string fact =
            entity + " was founded in " + std::to_string(year) + " in " + capitalize(city) + ".";
        const std::string filler1 = "The " + pick(kSectors, rng) + " sector in " +
                                    capitalize(pick(kCities, rng)) + " includes many firms.";
        const std::string filler2 = "Analysts describe the " + pick(kSectors, rng) + " market in " +
                                    capitalize(pick(kCities, rng)) + " as stable.";

        index::Document doc;
        doc.id = "doc-" + pad4(i);
        doc.title = entity;
        doc.text = (i % 2 == 0) ? fact + " " + filler1 + " " + filler2
                                : filler1 + " " + filler2 + " " + fact;
        data.docs.push_back(std::move(doc));

        if (i < n_questions) {
            eval::QAExample ex;
            ex.id = "q-" + pad4(i);
            ex.question = entity + " was founded in which year?";
            ex.gold_answers = {fact};
            data.questions.push_back(std::move(ex));
        }
    }
    verify_unique_support(data);
    return data;
}

void verify_unique_support(const SyntheticData& data) {
    std::vector<std::set<std::string>> doc_tokens;
    doc_tokens.reserve(data.docs.size());
    for (const auto& doc : data.docs) {
        std::set<std::string> tokens;
        for (const auto& tok : text::tokenize(doc.text)) tokens.insert(tok.normalized);
        doc_tokens.push_back(std::move(tokens));
    }
    for (const auto& q : data.questions) {
        const auto q_tokens = text::tokenize(q.question);
        if (q_tokens.empty()) {
            throw Error(ErrorCode::DataFormat, "verify_unique_support: empty question " + q.id);
        }
        const std::string& lead = q_tokens.front().normalized;
        int support = -1;
        for (std::size_t d = 0; d < data.docs.size(); ++d) {
            if (doc_tokens[d].count(lead) == 0) continue;
            if (support >= 0) {
                throw Error(ErrorCode::DataFormat, "verify_unique_support: token '" + lead +
                                                       "' of " + q.id + " appears in multiple documents");
            }
            support = static_cast<int>(d);
        }
        if (support < 0) {
            throw Error(ErrorCode::DataFormat,
                        "verify_unique_support: token '" + lead + "' of " + q.id + " appears in no document");
        }
        if (q.gold_answers.empty() ||
            data.docs[static_cast<std::size_t>(support)].text.find(q.gold_answers.front()) == std::string::npos) {
            throw Error(ErrorCode::DataFormat, "verify_unique_support: gold answer of " + q.id +
                                                   " is missing from its supporting document");
        }
    }
}

void write_jsonl(const SyntheticData& data, const std::filesystem::path& corpus_path,
                 const std::filesystem::path& dataset_path) {
    {
        std::ofstream out(corpus_path, std::ios::binary);
        if (!out) throw Error(ErrorCode::DataFormat, "write_jsonl: cannot write " + corpus_path.string());
        for (const auto& doc : data.docs) {
            nlohmann::json row;
            row["id"] = doc.id;
            row["title"] = doc.title;
            row["text"] = doc.text;
            out << row.dump() << "\n";
        }
    }
    {
        std::ofstream out(dataset_path, std::ios::binary);
        if (!out) throw Error(ErrorCode::DataFormat, "write_jsonl: cannot write " + dataset_path.string());
        for (const auto& q : data.questions) {
            nlohmann::json row;
            row["id"] = q.id;
            row["question"] = q.question;
            row["answers"] = q.gold_answers;
            out << row.dump() << "\n";
        }
    }
}

}  // namespace anchor_rag::fixtures
