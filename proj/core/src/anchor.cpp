#include "anchor_rag/anchor.hpp"

#include <algorithm>
#include <cmath>

#include "anchor_rag/common.hpp"

namespace anchor_rag::anchor {

double entropy(const predict::TopKDistribution& dist) {
    if (dist.empty()) throw Error(ErrorCode::EmptyDistribution, "entropy of an empty distribution");
    const auto renorm = dist.renormalized();
    double h = 0.0;
    for (const auto& [token, prob] : renorm.entries()) {
        if (prob > 0.0) h -= prob * std::log(prob);
    }
    return h;
}

predict::MaskedQuery mask_at(const std::vector<text::Token>& tokens, int position) {
    if (position < 0 || position >= static_cast<int>(tokens.size()))
        throw Error(ErrorCode::OutOfRange, "mask position outside the token sequence");
    return predict::MaskedQuery{tokens, position};
}

int select_anchor_count(int n_candidates, const SelectionPolicy& policy) {
    if (n_candidates <= 0) return 0;
    int m = static_cast<int>(std::ceil(policy.alpha * static_cast<double>(n_candidates)));
    return std::clamp(m, 1, policy.m_max);
}

AnchorScan scan_anchors(const std::vector<text::Token>& tokens, const predict::FillMaskPredictor& predictor,
                        int k, const SelectionPolicy& policy, int context_window) {
    if (tokens.empty()) throw Error(ErrorCode::InvalidParameters, "cannot scan an empty token sequence");
    if (k < 2) throw Error(ErrorCode::InvalidParameters, "anchor scoring requires k >= 2");

    AnchorScan scan;
    for (const auto& tok : tokens) {
        if (tok.is_stopword) continue;
        AnchorCandidate cand;
        cand.position = tok.position;
        cand.token = tok;
        cand.distribution = predict::fill_mask(predictor, mask_at(tokens, tok.position), k);
        cand.entropy_nats = entropy(cand.distribution);
        scan.candidates.push_back(std::move(cand));
    }
    if (scan.candidates.empty())
        throw Error(ErrorCode::NoCandidates, "every token is a stopword; no anchor candidates");

    std::vector<const AnchorCandidate*> eligible;
    for (const auto& cand : scan.candidates) {
        if (policy.tau && cand.entropy_nats < *policy.tau) continue;
        eligible.push_back(&cand);
    }
    std::stable_sort(eligible.begin(), eligible.end(), [](const AnchorCandidate* a, const AnchorCandidate* b) {
        if (a->entropy_nats != b->entropy_nats) return a->entropy_nats > b->entropy_nats;
        return a->position < b->position;
    });
    const int m = select_anchor_count(static_cast<int>(scan.candidates.size()), policy);
    if (eligible.size() > static_cast<std::size_t>(m)) eligible.resize(static_cast<std::size_t>(m));

    for (const AnchorCandidate* cand : eligible) {
        Anchor a;
        a.position = cand->position;
        a.token = cand->token;
        a.entropy_nats = cand->entropy_nats;
        const int n = static_cast<int>(tokens.size());
        for (int i = std::max(0, cand->position - context_window);
             i <= std::min(n - 1, cand->position + context_window); ++i) {
            if (i == cand->position) continue;
            a.context_window.push_back(tokens[static_cast<std::size_t>(i)]);
        }
        scan.anchors.push_back(std::move(a));
    }
    std::sort(scan.anchors.begin(), scan.anchors.end(),
              [](const Anchor& a, const Anchor& b) { return a.position < b.position; });
    for (auto& cand : scan.candidates)
        cand.selected = std::any_of(scan.anchors.begin(), scan.anchors.end(),
                                    [&](const Anchor& a) { return a.position == cand.position; });
    return scan;
}

std::vector<Anchor> identify_anchors(const std::vector<text::Token>& tokens,
                                     const predict::FillMaskPredictor& predictor, int k,
                                     const SelectionPolicy& policy, int context_window) {
    return scan_anchors(tokens, predictor, k, policy, context_window).anchors;
}

}  // namespace anchor_rag::anchor
