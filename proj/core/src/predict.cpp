#include "anchor_rag/predict.hpp"

#include <algorithm>
#include <cmath>

#include "anchor_rag/common.hpp"

namespace anchor_rag::predict {

TopKDistribution TopKDistribution::make(std::vector<Entry> entries, int k) {
    if (k < 1) throw Error(ErrorCode::InvalidParameters, "top-k size must be >= 1");
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (entries.size() > static_cast<std::size_t>(k)) entries.resize(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].second <= 0.0)
            throw Error(ErrorCode::InvalidParameters, "distribution entry with non-positive probability");
        if (i > 0 && entries[i].first == entries[i - 1].first)
            throw Error(ErrorCode::InvalidParameters, "duplicate token in distribution: " + entries[i].first);
        sum += entries[i].second;
    }
    // Duplicates may be non-adjacent after the probability sort.
    std::vector<Entry> lex(entries);
    std::sort(lex.begin(), lex.end());
    for (std::size_t i = 1; i < lex.size(); ++i)
        if (lex[i].first == lex[i - 1].first)
            throw Error(ErrorCode::InvalidParameters, "duplicate token in distribution: " + lex[i].first);
    if (sum > 1.0 + 1e-9)
        throw Error(ErrorCode::InvalidParameters, "distribution mass exceeds 1");
    TopKDistribution dist;
    dist.entries_ = std::move(entries);
    dist.k_ = k;
    return dist;
}

TopKDistribution TopKDistribution::renormalized() const {
    TopKDistribution out = *this;
    double sum = 0.0;
    for (const auto& [token, prob] : out.entries_) sum += prob;
    if (sum > 0.0)
        for (auto& [token, prob] : out.entries_) prob /= sum;
    return out;
}

NgramModel NgramModel::train(const std::vector<std::string>& corpus, BackoffWeights weights,
                             const text::StopwordList& stopwords) {
    NgramModel model;
    model.weights_ = weights;
    for (const std::string& doc : corpus) {
        for (const std::string& sentence : text::sentence_split(doc)) {
            std::vector<text::Token> toks = text::tokenize(sentence, stopwords);
            for (std::size_t i = 0; i < toks.size(); ++i) {
                const std::string& w = toks[i].normalized;
                ++model.unigram_[w];
                ++model.total_unigrams_;
                if (i >= 1) ++model.bigram_[{toks[i - 1].normalized, w}];
                if (i >= 1 && i + 1 < toks.size())
                    ++model.trigram_[{toks[i - 1].normalized, w, toks[i + 1].normalized}];
            }
        }
    }
    if (model.total_unigrams_ == 0)
        throw Error(ErrorCode::EmptyCorpus, "training corpus contains no tokens");
    return model;
}

std::vector<TopKDistribution::Entry> NgramModel::trigram_level(const std::optional<std::string>& left2,
                                                               const std::optional<std::string>& left1,
                                                               const std::optional<std::string>& right1) const {
    std::map<std::string, long> counts;
    long total = 0;
    if (left1 && right1) {
        for (const auto& [key, count] : trigram_) {
            if (std::get<0>(key) == *left1 && std::get<2>(key) == *right1) {
                counts[std::get<1>(key)] += count;
                total += count;
            }
        }
    } else if (left1 && left2 && !right1) {
        // Mask at the end of the sequence: the triple table still carries
        // evidence keyed on the two left neighbors.
        for (const auto& [key, count] : trigram_) {
            if (std::get<0>(key) == *left2 && std::get<1>(key) == *left1) {
                counts[std::get<2>(key)] += count;
                total += count;
            }
        }
    }
    std::vector<TopKDistribution::Entry> out;
    if (total == 0) return out;
    for (const auto& [token, count] : counts)
        out.emplace_back(token, static_cast<double>(count) / static_cast<double>(total));
    return out;
}

std::vector<TopKDistribution::Entry> NgramModel::bigram_level(const std::optional<std::string>& left1) const {
    std::vector<TopKDistribution::Entry> out;
    if (!left1) return out;
    std::map<std::string, long> counts;
    long total = 0;
    for (const auto& [key, count] : bigram_) {
        if (key.first == *left1) {
            counts[key.second] += count;
            total += count;
        }
    }
    if (total == 0) return out;
    for (const auto& [token, count] : counts)
        out.emplace_back(token, static_cast<double>(count) / static_cast<double>(total));
    return out;
}

std::vector<TopKDistribution::Entry> NgramModel::unigram_level() const {
    std::vector<TopKDistribution::Entry> out;
    for (const auto& [token, count] : unigram_)
        out.emplace_back(token, static_cast<double>(count) / static_cast<double>(total_unigrams_));
    return out;
}

TopKDistribution NgramModel::fill_mask(const MaskedQuery& query, int k) const {
    const auto& toks = query.tokens;
    const int p = query.mask_position;
    const int n = static_cast<int>(toks.size());
    std::optional<std::string> left1, left2, right1;
    if (p >= 1) left1 = toks[static_cast<std::size_t>(p - 1)].normalized;
    if (p >= 2) left2 = toks[static_cast<std::size_t>(p - 2)].normalized;
    if (p + 1 < n) right1 = toks[static_cast<std::size_t>(p + 1)].normalized;

    auto tri = trigram_level(left2, left1, right1);
    auto bi = bigram_level(left1);
    auto uni = unigram_level();

    double lambda_total = 0.0;
    if (!tri.empty()) lambda_total += weights_.trigram;
    if (!bi.empty()) lambda_total += weights_.bigram;
    if (!uni.empty()) lambda_total += weights_.unigram;

    if (lambda_total <= 0.0) {
        // No scoring evidence at any level: uniform over the first min(k, V)
        // vocabulary tokens.
        std::vector<TopKDistribution::Entry> entries;
        for (const auto& [token, count] : unigram_) {
            if (static_cast<int>(entries.size()) >= k) break;
            entries.emplace_back(token, 0.0);
        }
        if (entries.empty()) throw Error(ErrorCode::EmptyDistribution, "model has an empty vocabulary");
        for (auto& e : entries) e.second = 1.0 / static_cast<double>(entries.size());
        return TopKDistribution::make(std::move(entries), k);
    }

    std::map<std::string, double> mixed;
    auto add_level = [&](const std::vector<TopKDistribution::Entry>& level, double lambda) {
        if (level.empty() || lambda <= 0.0) return;
        const double w = lambda / lambda_total;
        for (const auto& [token, prob] : level) mixed[token] += w * prob;
    };
    add_level(tri, weights_.trigram);
    add_level(bi, weights_.bigram);
    add_level(uni, weights_.unigram);

    double sum = 0.0;
    for (const auto& [token, score] : mixed) sum += score;
    std::vector<TopKDistribution::Entry> entries;
    entries.reserve(mixed.size());
    for (const auto& [token, score] : mixed)
        if (score > 0.0) entries.emplace_back(token, score / sum);
    return TopKDistribution::make(std::move(entries), k);
}

TopKDistribution fill_mask(const FillMaskPredictor& predictor, const MaskedQuery& query, int k) {
    if (k < 1) throw Error(ErrorCode::InvalidParameters, "fill_mask requires k >= 1");
    if (query.mask_position < 0 || query.mask_position >= static_cast<int>(query.tokens.size()))
        throw Error(ErrorCode::OutOfRange, "mask position outside the token sequence");
    return predictor.fill_mask(query, k);
}

}  // namespace anchor_rag::predict
