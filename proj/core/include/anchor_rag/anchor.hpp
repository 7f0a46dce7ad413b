#pragma once

#include <optional>
#include <vector>

#include "anchor_rag/predict.hpp"
#include "anchor_rag/text.hpp"

namespace anchor_rag::anchor {

/// How many anchors to keep and which candidates qualify.
/// m = clamp(ceil(alpha * n_candidates), 1, m_max); candidates additionally
/// need entropy >= tau when tau is set.
struct SelectionPolicy {
    double alpha = 0.2;
    int m_max = 3;
    std::optional<double> tau;  // disabled by default
};

/// One scored candidate position (every non-stopword token gets one).
struct AnchorCandidate {
    int position = 0;
    text::Token token;
    predict::TopKDistribution distribution;
    double entropy_nats = 0.0;
    bool selected = false;
};

/// A selected anchor with the surrounding tokens used to form its retrieval
/// query (up to `window` tokens each side, anchor excluded).
struct Anchor {
    int position = 0;
    text::Token token;
    double entropy_nats = 0.0;
    std::vector<text::Token> context_window;
};

/// Shannon entropy in nats of the renormalized distribution.
/// Throws Error{EmptyDistribution} on an empty input.
double entropy(const predict::TopKDistribution& dist);

/// Marks one position as masked. Throws Error{OutOfRange}.
predict::MaskedQuery mask_at(const std::vector<text::Token>& tokens, int position);

/// Number of anchors to select from n_candidates under the policy.
int select_anchor_count(int n_candidates, const SelectionPolicy& policy);

struct AnchorScan {
    std::vector<AnchorCandidate> candidates;  // position ascending
    std::vector<Anchor> anchors;              // position ascending
};

/// Masks every non-stopword token, scores predictive entropy, and selects the
/// top-m highest-entropy positions (ties: earlier position wins). Throws
/// Error{NoCandidates} when every token is a stopword — callers fall back to
/// whole-question retrieval. Backend errors propagate.
AnchorScan scan_anchors(const std::vector<text::Token>& tokens, const predict::FillMaskPredictor& predictor,
                        int k, const SelectionPolicy& policy, int context_window = 5);

/// scan_anchors, selected anchors only.
std::vector<Anchor> identify_anchors(const std::vector<text::Token>& tokens,
                                     const predict::FillMaskPredictor& predictor, int k,
                                     const SelectionPolicy& policy, int context_window = 5);

}  // namespace anchor_rag::anchor
