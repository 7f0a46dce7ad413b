#include "anchor_rag/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "anchor_rag/common.hpp"

namespace anchor_rag::index {

namespace {

constexpr int kFormatVersion = 1;

void write_f32_le(std::ostream& out, float value) {
    std::uint32_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    const unsigned char bytes[4] = {
        static_cast<unsigned char>(bits & 0xff),
        static_cast<unsigned char>((bits >> 8) & 0xff),
        static_cast<unsigned char>((bits >> 16) & 0xff),
        static_cast<unsigned char>((bits >> 24) & 0xff),
    };
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

float read_f32_le(const unsigned char* bytes) {
    std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
                         (static_cast<std::uint32_t>(bytes[2]) << 16) |
                         (static_cast<std::uint32_t>(bytes[3]) << 24);
    float value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
}

}  // namespace

std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::DataFormat, "load_corpus_jsonl: cannot open " + path.string());
    }
    std::vector<Document> docs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Document doc;
        try {
            const nlohmann::json row = nlohmann::json::parse(line);
            doc.id = row.at("id").get<std::string>();
            doc.title = row.at("title").get<std::string>();
            doc.text = row.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::DataFormat, "load_corpus_jsonl: " + path.string() + " line " +
                                                   std::to_string(line_no) + ": " + e.what());
        }
        if (doc.text.empty()) {
            throw Error(ErrorCode::DataFormat, "load_corpus_jsonl: " + path.string() + " line " +
                                                   std::to_string(line_no) + ": 'text' must not be empty");
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

double cosine(const EmbeddingVector& q, const EmbeddingVector& d) {
    if (q.dimension() != d.dimension()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "cosine: dimension mismatch (" + std::to_string(q.dimension()) + " vs " +
                        std::to_string(d.dimension()) + ")");
    }
    double dot = 0.0;
    double nq = 0.0;
    double nd = 0.0;
    for (int i = 0; i < q.dimension(); ++i) {
        const double a = q.components[static_cast<std::size_t>(i)];
        const double b = d.components[static_cast<std::size_t>(i)];
        dot += a * b;
        nq += a * a;
        nd += b * b;
    }
    if (nq == 0.0 || nd == 0.0) return 0.0;
    return dot / (std::sqrt(nq) * std::sqrt(nd));
}

std::vector<EmbeddingVector> embed_hashed(const std::vector<std::string>& texts, int dimension,
                                          std::uint64_t seed) {
    if (dimension < 1) {
        throw Error(ErrorCode::InvalidParameters, "embed_hashed: dimension must be >= 1");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text_in : texts) {
        std::vector<double> counts(static_cast<std::size_t>(dimension), 0.0);
        bool any = false;
        for (const auto& tok : text::tokenize(text_in)) {
            if (tok.is_stopword) continue;
            const std::uint64_t h = fnv1a64(tok.normalized.data(), tok.normalized.size(), seed);
            counts[static_cast<std::size_t>(h % static_cast<std::uint64_t>(dimension))] += 1.0;
            any = true;
        }
        EmbeddingVector vec;
        vec.components.resize(static_cast<std::size_t>(dimension), 0.0f);
        if (any) {
            double norm = 0.0;
            for (double c : counts) norm += c * c;
            norm = std::sqrt(norm);
            for (std::size_t i = 0; i < counts.size(); ++i) {
                vec.components[i] = static_cast<float>(counts[i] / norm);
            }
        }
        out.push_back(std::move(vec));
    }
    return out;
}

HashedEmbedder::HashedEmbedder(int dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {
    if (dimension < 1) {
        throw Error(ErrorCode::InvalidParameters, "HashedEmbedder: dimension must be >= 1");
    }
}

std::vector<EmbeddingVector> HashedEmbedder::embed(const std::vector<std::string>& texts) const {
    return embed_hashed(texts, dimension_, seed_);
}

std::vector<Chunk> chunk_document(const Document& doc, int window, int overlap,
                                  const text::StopwordList& stopwords) {
    if (window < 1 || overlap < 0 || overlap >= window) {
        throw Error(ErrorCode::InvalidParameters,
                    "chunk_document: require window >= 1 and 0 <= overlap < window");
    }
    // Token byte offsets refer to the normalized text, so slice from that form.
    const std::string normalized_text = text::nfc(doc.text);
    const auto tokens = text::tokenize(normalized_text, stopwords);
    std::vector<Chunk> chunks;
    if (tokens.empty()) return chunks;

    const int n = static_cast<int>(tokens.size());
    const int stride = window - overlap;
    int start = 0;
    int ordinal = 0;
    while (start < n) {
        int end;
        bool last = false;
        if (start + window >= n) {
            end = n;
            last = true;
        } else {
            end = start + window;
        }
        Chunk chunk;
        chunk.doc_id = doc.id;
        chunk.chunk_id = doc.id + "#" + std::to_string(ordinal);
        chunk.span_start = start;
        chunk.span_end = end;
        const std::size_t byte_begin = tokens[static_cast<std::size_t>(start)].begin;
        const std::size_t byte_end = tokens[static_cast<std::size_t>(end - 1)].end;
        chunk.text = normalized_text.substr(byte_begin, byte_end - byte_begin);
        chunks.push_back(std::move(chunk));
        if (last) break;
        start += stride;
        ++ordinal;
    }
    return chunks;
}

Index Index::build(const std::vector<Document>& corpus, const Embedder& embedder,
                   const ChunkingConfig& chunking) {
    if (corpus.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "Index::build: corpus is empty");
    }
    std::set<std::string> seen;
    std::vector<Chunk> chunks;
    for (const auto& doc : corpus) {
        if (!seen.insert(doc.id).second) {
            throw Error(ErrorCode::DuplicateId, "Index::build: duplicate document id '" + doc.id + "'");
        }
        auto doc_chunks = chunk_document(doc, chunking.window, chunking.overlap);
        std::move(doc_chunks.begin(), doc_chunks.end(), std::back_inserter(chunks));
    }

    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& chunk : chunks) texts.push_back(chunk.text);
    std::vector<EmbeddingVector> vectors;
    if (!texts.empty()) {
        vectors = embedder.embed(texts);
        if (vectors.size() != texts.size()) {
            throw Error(ErrorCode::DataFormat, "Index::build: embedder returned " +
                                                   std::to_string(vectors.size()) + " vectors for " +
                                                   std::to_string(texts.size()) + " chunks");
        }
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            if (vectors[i].dimension() != embedder.dimension()) {
                throw Error(ErrorCode::DimensionMismatch,
                            "Index::build: bad vector dimension for chunk " + chunks[i].chunk_id);
            }
        }
    }
    return from_vectors(std::move(chunks), std::move(vectors), embedder.id(), embedder.seed(), chunking);
}

Index Index::from_vectors(std::vector<Chunk> chunks, std::vector<EmbeddingVector> vectors,
                          std::string embedder_id, std::uint64_t seed, ChunkingConfig chunking) {
    if (chunks.size() != vectors.size()) {
        throw Error(ErrorCode::DataFormat, "Index::from_vectors: chunk/vector count mismatch");
    }
    int dim = 0;
    for (const auto& vec : vectors) {
        if (dim == 0) {
            dim = vec.dimension();
        } else if (vec.dimension() != dim) {
            throw Error(ErrorCode::DimensionMismatch, "Index::from_vectors: inconsistent dimensions");
        }
    }
    Index idx;
    idx.chunks_ = std::move(chunks);
    idx.vectors_ = std::move(vectors);
    idx.dimension_ = dim;
    idx.embedder_id_ = std::move(embedder_id);
    idx.seed_ = seed;
    idx.chunking_ = chunking;
    return idx;
}

void Index::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);

    nlohmann::json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["dimension"] = dimension_;
    manifest["embedder"] = embedder_id_;
    manifest["seed"] = seed_;
    manifest["window"] = chunking_.window;
    manifest["overlap"] = chunking_.overlap;
    manifest["chunk_count"] = chunks_.size();
    {
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        if (!out) throw Error(ErrorCode::DataFormat, "Index::save: cannot write manifest.json");
        out << manifest.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "vectors.f32", std::ios::binary);
        if (!out) throw Error(ErrorCode::DataFormat, "Index::save: cannot write vectors.f32");
        for (const auto& vec : vectors_) {
            for (float c : vec.components) write_f32_le(out, c);
        }
    }
    {
        std::ofstream out(dir / "chunks.jsonl", std::ios::binary);
        if (!out) throw Error(ErrorCode::DataFormat, "Index::save: cannot write chunks.jsonl");
        for (const auto& chunk : chunks_) {
            nlohmann::json row;
            row["doc_id"] = chunk.doc_id;
            row["chunk_id"] = chunk.chunk_id;
            row["text"] = chunk.text;
            row["span_start"] = chunk.span_start;
            row["span_end"] = chunk.span_end;
            out << row.dump() << "\n";
        }
    }
}

Index Index::load(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    {
        std::ifstream in(dir / "manifest.json", std::ios::binary);
        if (!in) throw Error(ErrorCode::DataFormat, "Index::load: missing manifest.json in " + dir.string());
        try {
            in >> manifest;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::DataFormat, std::string("Index::load: bad manifest.json: ") + e.what());
        }
    }
    if (!manifest.contains("format_version") || manifest["format_version"].get<int>() != kFormatVersion) {
        throw Error(ErrorCode::DataFormat, "Index::load: unsupported format version");
    }
    const int dim = manifest.at("dimension").get<int>();
    const auto chunk_count = manifest.at("chunk_count").get<std::size_t>();
    ChunkingConfig chunking;
    chunking.window = manifest.at("window").get<int>();
    chunking.overlap = manifest.at("overlap").get<int>();

    std::vector<Chunk> chunks;
    chunks.reserve(chunk_count);
    {
        std::ifstream in(dir / "chunks.jsonl", std::ios::binary);
        if (!in) throw Error(ErrorCode::DataFormat, "Index::load: missing chunks.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json row;
            try {
                row = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::DataFormat, std::string("Index::load: bad chunk row: ") + e.what());
            }
            Chunk chunk;
            chunk.doc_id = row.at("doc_id").get<std::string>();
            chunk.chunk_id = row.at("chunk_id").get<std::string>();
            chunk.text = row.at("text").get<std::string>();
            chunk.span_start = row.at("span_start").get<int>();
            chunk.span_end = row.at("span_end").get<int>();
            chunks.push_back(std::move(chunk));
        }
    }
    if (chunks.size() != chunk_count) {
        throw Error(ErrorCode::DataFormat, "Index::load: chunk count mismatch with manifest");
    }

    std::vector<EmbeddingVector> vectors;
    vectors.reserve(chunk_count);
    {
        std::ifstream in(dir / "vectors.f32", std::ios::binary);
        if (!in) throw Error(ErrorCode::DataFormat, "Index::load: missing vectors.f32");
        std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const std::size_t expected = chunk_count * static_cast<std::size_t>(dim) * 4;
        if (bytes.size() != expected) {
            throw Error(ErrorCode::DataFormat, "Index::load: vectors.f32 holds " +
                                                   std::to_string(bytes.size()) + " bytes, expected " +
                                                   std::to_string(expected));
        }
        const unsigned char* cursor = bytes.data();
        for (std::size_t row = 0; row < chunk_count; ++row) {
            EmbeddingVector vec;
            vec.components.resize(static_cast<std::size_t>(dim));
            for (int col = 0; col < dim; ++col) {
                vec.components[static_cast<std::size_t>(col)] = read_f32_le(cursor);
                cursor += 4;
            }
            vectors.push_back(std::move(vec));
        }
    }

    return from_vectors(std::move(chunks), std::move(vectors), manifest.at("embedder").get<std::string>(),
                        manifest.at("seed").get<std::uint64_t>(), chunking);
}

std::vector<Index::Hit> Index::search(const EmbeddingVector& query, int top_n) const {
    if (top_n < 1) {
        throw Error(ErrorCode::InvalidParameters, "Index::search: top_n must be >= 1");
    }
    std::vector<Hit> hits;
    hits.reserve(vectors_.size());
    for (std::size_t row = 0; row < vectors_.size(); ++row) {
        hits.push_back(Hit{static_cast<int>(row), cosine(query, vectors_[row])});
    }
    std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.row < b.row;
    });
    if (hits.size() > static_cast<std::size_t>(top_n)) hits.resize(static_cast<std::size_t>(top_n));
    return hits;
}

std::vector<double> softmax_weights(const std::vector<double>& scores, double temperature) {
    if (scores.empty()) {
        throw Error(ErrorCode::InvalidParameters, "softmax_weights: no scores");
    }
    if (!(temperature > 0.0)) {
        throw Error(ErrorCode::InvalidParameters, "softmax_weights: temperature must be > 0");
    }
    double max_scaled = scores[0] / temperature;
    for (double s : scores) max_scaled = std::max(max_scaled, s / temperature);
    std::vector<double> weights(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        weights[i] = std::exp(scores[i] / temperature - max_scaled);
        total += weights[i];
    }
    for (auto& w : weights) w /= total;
    return weights;
}

std::vector<RetrievalResult> retrieve(const Index& index, const Embedder& embedder,
                                      const std::vector<anchor::Anchor>& anchors, const std::string& question,
                                      int top_n, double temperature) {
    if (index.size() == 0) {
        throw Error(ErrorCode::EmptyIndex, "retrieve: index has no chunks");
    }
    if (top_n < 1) {
        throw Error(ErrorCode::InvalidParameters, "retrieve: top_n must be >= 1");
    }
    if (!(temperature > 0.0)) {
        throw Error(ErrorCode::InvalidParameters, "retrieve: temperature must be > 0");
    }

    std::vector<std::string> queries;
    if (anchors.empty()) {
        queries.push_back(question);
    } else {
        for (const auto& a : anchors) {
            std::string q = a.token.normalized;
            for (const auto& ctx : a.context_window) {
                q += " ";
                q += ctx.normalized;
            }
            queries.push_back(std::move(q));
        }
    }

    const auto query_vectors = embedder.embed(queries);
    if (query_vectors.size() != queries.size()) {
        throw Error(ErrorCode::DataFormat, "retrieve: embedder returned wrong vector count");
    }

    // Union of per-query top-n hits, keeping each row's best similarity.
    std::map<int, double> best;
    for (const auto& qv : query_vectors) {
        for (const auto& hit : index.search(qv, top_n)) {
            auto [it, inserted] = best.emplace(hit.row, hit.similarity);
            if (!inserted && hit.similarity > it->second) it->second = hit.similarity;
        }
    }

    std::vector<Index::Hit> fused;
    fused.reserve(best.size());
    for (const auto& [row, sim] : best) fused.push_back(Index::Hit{row, sim});
    std::stable_sort(fused.begin(), fused.end(), [](const Index::Hit& a, const Index::Hit& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.row < b.row;
    });
    if (fused.size() > static_cast<std::size_t>(top_n)) fused.resize(static_cast<std::size_t>(top_n));

    std::vector<double> sims;
    sims.reserve(fused.size());
    for (const auto& hit : fused) sims.push_back(hit.similarity);
    const auto weights = softmax_weights(sims, temperature);

    std::vector<RetrievalResult> results;
    results.reserve(fused.size());
    for (std::size_t i = 0; i < fused.size(); ++i) {
        RetrievalResult r;
        r.chunk = index.chunks()[static_cast<std::size_t>(fused[i].row)];
        r.similarity = fused[i].similarity;
        r.weight = weights[i];
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace anchor_rag::index
