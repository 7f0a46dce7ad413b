#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "anchor_rag/anchor.hpp"
#include "anchor_rag/text.hpp"

namespace anchor_rag::index {

struct Document {
    std::string id;
    std::string title;
    std::string text;
};

/// One document per line: {"id", "title", "text"}. Throws Error{DataFormat}
/// with the offending line number.
std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path);

/// A sliding token window of one document. `text` is the verbatim slice of the
/// document covering the window's tokens; token_span is [start, end) into the
/// document's token sequence.
struct Chunk {
    std::string doc_id;
    std::string chunk_id;
    std::string text;
    int span_start = 0;
    int span_end = 0;
};

/// Fixed-dimension embedding; components are stored as 32-bit floats so the
/// persisted form round-trips bit-exactly.
struct EmbeddingVector {
    std::vector<float> components;

    int dimension() const { return static_cast<int>(components.size()); }
};

struct RetrievalResult {
    Chunk chunk;
    double similarity = 0.0;  // cosine, in [-1, 1]
    double weight = 0.0;      // softmax over the final result set; sums to 1
};

struct ChunkingConfig {
    int window = 100;
    int overlap = 20;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const = 0;
    virtual std::string id() const = 0;
    virtual int dimension() const = 0;
    virtual std::uint64_t seed() const { return 0; }
};

/// Cosine similarity; 0 when either vector has zero norm so empty texts rank
/// last instead of aborting. Throws Error{DimensionMismatch}.
double cosine(const EmbeddingVector& q, const EmbeddingVector& d);

/// Deterministic bag-of-words embedding: each normalized non-stopword token is
/// hashed (seeded FNV-1a) into one of `dimension` buckets, counted, and the
/// result L2-normalized. A text with no content tokens maps to the zero vector.
std::vector<EmbeddingVector> embed_hashed(const std::vector<std::string>& texts, int dimension,
                                          std::uint64_t seed);

class HashedEmbedder final : public Embedder {
public:
    HashedEmbedder(int dimension, std::uint64_t seed);

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override;
    std::string id() const override { return "hashed-v1"; }
    int dimension() const override { return dimension_; }
    std::uint64_t seed() const override { return seed_; }

private:
    int dimension_;
    std::uint64_t seed_;
};

/// Sliding token windows of `window` tokens with stride window - overlap; the
/// final partial window is kept when non-empty. Requires window > overlap >= 0
/// (Error{InvalidParameters} otherwise).
std::vector<Chunk> chunk_document(const Document& doc, int window, int overlap,
                                  const text::StopwordList& stopwords = text::StopwordList::shipped());

/// Immutable exact flat (full-scan) cosine index over document chunks.
///
/// Persisted layout (directory):
///   manifest.json  - format version, dimension, chunking config, embedder id,
///                    seed, chunk/document counts
///   vectors.f32    - row-major little-endian float32, one row per chunk
///   chunks.jsonl   - one JSON object per chunk, in row order
class Index {
public:
    /// Chunks, embeds, and stores every document. Throws Error{EmptyCorpus},
    /// Error{DuplicateId}; embedder failures propagate tagged with the chunk id.
    static Index build(const std::vector<Document>& corpus, const Embedder& embedder,
                       const ChunkingConfig& chunking);

    /// Assembles an index directly from chunk metadata and precomputed vectors
    /// (used by load() and by oracle tests).
    static Index from_vectors(std::vector<Chunk> chunks, std::vector<EmbeddingVector> vectors,
                              std::string embedder_id, std::uint64_t seed, ChunkingConfig chunking);

    void save(const std::filesystem::path& dir) const;
    static Index load(const std::filesystem::path& dir);

    struct Hit {
        int row = 0;
        double similarity = 0.0;
    };
    /// Exact full scan: top-n rows by cosine, ties broken by lower row index.
    std::vector<Hit> search(const EmbeddingVector& query, int top_n) const;

    std::size_t size() const { return chunks_.size(); }
    const std::vector<Chunk>& chunks() const { return chunks_; }
    const std::vector<EmbeddingVector>& vectors() const { return vectors_; }
    int dimension() const { return dimension_; }
    const std::string& embedder_id() const { return embedder_id_; }
    std::uint64_t seed() const { return seed_; }
    const ChunkingConfig& chunking() const { return chunking_; }

private:
    std::vector<Chunk> chunks_;
    std::vector<EmbeddingVector> vectors_;
    int dimension_ = 0;
    std::string embedder_id_;
    std::uint64_t seed_ = 0;
    ChunkingConfig chunking_;
};

/// softmax(scores / temperature), computed with max-subtraction so large
/// scores do not overflow. Requires temperature > 0 and at least one score.
std::vector<double> softmax_weights(const std::vector<double>& scores, double temperature);

/// Anchor-keyed retrieval: one query per anchor (anchor token followed by its
/// context window, space-joined), exact top-n scan per query, union fused by
/// maximum similarity, truncated to top_n, weighted by softmax(sim/temperature).
/// With no anchors the whole question is the single query.
/// Throws Error{EmptyIndex} on an empty index.
std::vector<RetrievalResult> retrieve(const Index& index, const Embedder& embedder,
                                      const std::vector<anchor::Anchor>& anchors, const std::string& question,
                                      int top_n, double temperature);

}  // namespace anchor_rag::index
