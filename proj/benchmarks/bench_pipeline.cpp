#include <benchmark/benchmark.h>

#include "anchor_rag/anchor.hpp"
#include "anchor_rag/fixtures.hpp"
#include "anchor_rag/index.hpp"
#include "anchor_rag/predict.hpp"
#include "anchor_rag/text.hpp"

namespace {

namespace ar = anchor_rag;

const ar::fixtures::SyntheticData& data() {
    static const auto d = ar::fixtures::make_synthetic(400, 50, 42);
    return d;
}

std::vector<std::string> corpus_texts() {
    std::vector<std::string> texts;
    for (const auto& doc : data().docs) texts.push_back(doc.text);
    return texts;
}

void bm_tokenize(benchmark::State& state) {
    const std::string& text = data().docs[0].text;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ar::text::tokenize(text));
    }
}
BENCHMARK(bm_tokenize);

void bm_embed_hashed(benchmark::State& state) {
    const std::vector<std::string> texts = {data().docs[0].text};
    for (auto _ : state) {
        benchmark::DoNotOptimize(ar::index::embed_hashed(texts, 256, 42));
    }
}
BENCHMARK(bm_embed_hashed);

void bm_index_search(benchmark::State& state) {
    const ar::index::HashedEmbedder embedder(256, 42);
    const auto index = ar::index::Index::build(data().docs, embedder, {100, 20});
    const auto query = embedder.embed({data().questions[0].question});
    for (auto _ : state) {
        benchmark::DoNotOptimize(index.search(query[0], 5));
    }
}
BENCHMARK(bm_index_search);

void bm_fill_mask(benchmark::State& state) {
    const auto model = ar::predict::NgramModel::train(corpus_texts());
    const auto tokens = ar::text::tokenize(data().questions[0].question);
    const ar::predict::MaskedQuery query{tokens, 0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.fill_mask(query, 10));
    }
}
BENCHMARK(bm_fill_mask);

void bm_scan_anchors(benchmark::State& state) {
    const auto model = ar::predict::NgramModel::train(corpus_texts());
    const auto tokens = ar::text::tokenize(data().questions[0].question);
    const ar::anchor::SelectionPolicy policy;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ar::anchor::scan_anchors(tokens, model, 10, policy));
    }
}
BENCHMARK(bm_scan_anchors);

}  // namespace

BENCHMARK_MAIN();
