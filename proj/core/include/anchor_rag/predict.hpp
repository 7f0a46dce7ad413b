#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anchor_rag/text.hpp"

namespace anchor_rag::predict {

/// A token sequence with one position hidden from the predictor. The token at
/// mask_position stays in the sequence for bookkeeping only.
struct MaskedQuery {
    std::vector<text::Token> tokens;
    int mask_position = 0;
};

/// Truncated predictive distribution over candidate tokens for one masked
/// position. Entries are sorted by probability descending, ties broken by
/// lexicographic token order; all probabilities are positive, tokens distinct,
/// and the total mass never exceeds 1 (+1e-9 slack).
class TopKDistribution {
public:
    using Entry = std::pair<std::string, double>;

    /// Validating constructor: sorts, checks invariants, truncates to k.
    /// Throws Error{InvalidParameters} on duplicate tokens or non-positive
    /// probabilities, Error{EmptyDistribution} never (empty is legal here;
    /// entropy() rejects it instead).
    static TopKDistribution make(std::vector<Entry> entries, int k);

    const std::vector<Entry>& entries() const { return entries_; }
    int k() const { return k_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    /// Copy with probabilities rescaled to sum to 1. Entropy and downstream
    /// comparisons between backends operate on this form.
    TopKDistribution renormalized() const;

private:
    std::vector<Entry> entries_;
    int k_ = 0;
};

/// Anything that can fill a single masked position with a top-k distribution.
class FillMaskPredictor {
public:
    virtual ~FillMaskPredictor() = default;
    virtual TopKDistribution fill_mask(const MaskedQuery& query, int k) const = 0;
};

struct BackoffWeights {
    double trigram = 0.6;
    double bigram = 0.3;
    double unigram = 0.1;
};

/// Deterministic desk-scale fill-mask backend: interpolated trigram model with
/// per-level backoff. Counts are collected within sentences over normalized
/// tokens. Immutable once trained; safe for concurrent queries.
///
/// Level definitions for a mask at position p with neighbors l2=t[p-2],
/// l1=t[p-1], r1=t[p+1]:
///   trigram: P(w | l1, _, r1) from centered triples when r1 exists;
///            P(w | l2, l1, _) from the same triple table when the mask is at
///            the end of the sequence and two left neighbors exist
///   bigram:  P(w | l1, _) from left-adjacent pairs
///   unigram: P(w)
/// A level with no evidence contributes nothing and its weight is spread over
/// the remaining levels. With no evidence at any level the result is uniform
/// over the min(k, |vocabulary|) lexicographically first tokens.
class NgramModel final : public FillMaskPredictor {
public:
    /// Tokenizes and sentence-splits every document, then counts. Throws
    /// Error{EmptyCorpus} when no tokens survive.
    static NgramModel train(const std::vector<std::string>& corpus,
                            BackoffWeights weights = {},
                            const text::StopwordList& stopwords = text::StopwordList::shipped());

    TopKDistribution fill_mask(const MaskedQuery& query, int k) const override;

    const std::map<std::string, long>& unigrams() const { return unigram_; }
    const std::map<std::pair<std::string, std::string>, long>& bigrams() const { return bigram_; }
    const std::map<std::tuple<std::string, std::string, std::string>, long>& trigrams() const { return trigram_; }
    const BackoffWeights& weights() const { return weights_; }

    /// Per-level conditional distributions, exposed for oracle tests. Empty
    /// result means the level has no evidence for that context.
    std::vector<TopKDistribution::Entry> trigram_level(const std::optional<std::string>& left2,
                                                       const std::optional<std::string>& left1,
                                                       const std::optional<std::string>& right1) const;
    std::vector<TopKDistribution::Entry> bigram_level(const std::optional<std::string>& left1) const;
    std::vector<TopKDistribution::Entry> unigram_level() const;

private:
    std::map<std::string, long> unigram_;
    std::map<std::pair<std::string, std::string>, long> bigram_;
    std::map<std::tuple<std::string, std::string, std::string>, long> trigram_;
    long total_unigrams_ = 0;
    BackoffWeights weights_;
};

/// Validates the query and delegates to the backend.
/// Throws Error{OutOfRange} for a bad mask position, Error{InvalidParameters}
/// for k < 1; backend errors propagate.
TopKDistribution fill_mask(const FillMaskPredictor& predictor, const MaskedQuery& query, int k);

}  // namespace anchor_rag::predict
