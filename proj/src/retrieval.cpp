#include "fairkg/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "fairkg/error.hpp"
#include "fairkg/text.hpp"

namespace fairkg {

std::string_view to_string(SourceKind kind) {
    switch (kind) {
    case SourceKind::DataReport: return "DataReport";
    case SourceKind::Publication: return "Publication";
    case SourceKind::MetadataRecord: return "MetadataRecord";
    }
    return "DataReport";
}

SourceKind source_kind_from_string(std::string_view s) {
    if (s == "DataReport") return SourceKind::DataReport;
    if (s == "Publication") return SourceKind::Publication;
    if (s == "MetadataRecord") return SourceKind::MetadataRecord;
    throw Error(ErrorCode::InvalidArgument, "unknown source kind: " + std::string(s));
}

namespace {

bool is_heading(std::string_view line) {
    std::size_t hashes = 0;
    while (hashes < line.size() && line[hashes] == '#') ++hashes;
    return hashes > 0 && hashes < line.size() && line[hashes] == ' ';
}

} // namespace

std::vector<Chunk> chunk_document(std::string_view doc, SourceKind kind, std::string_view doi,
                                  const ChunkingOptions& options) {
    if (options.window == 0 || options.overlap >= options.window)
        throw Error(ErrorCode::InvalidArgument, "chunk overlap must be smaller than the window");

    struct Section {
        std::string name;
        std::vector<std::string> tokens;
    };
    std::vector<Section> sections{{"Body", {}}};
    for (const auto& line : text::split_lines(doc)) {
        std::string trimmed = text::trim(line);
        if (is_heading(trimmed)) {
            std::string name = text::trim(std::string_view(trimmed).substr(trimmed.find(' ')));
            sections.push_back({name, {}});
        }
        for (auto& tok : text::split_whitespace(line)) sections.back().tokens.push_back(std::move(tok));
    }

    const std::size_t step = options.window - options.overlap;
    std::vector<Chunk> out;
    std::size_t section_index = 0;
    for (const auto& s : sections) {
        if (s.tokens.empty()) continue;
        std::size_t window_index = 0;
        for (std::size_t start = 0;; start += step) {
            std::size_t end = std::min(start + options.window, s.tokens.size());
            Chunk c;
            c.id = std::string(doi) + "#" + std::string(to_string(kind)) + "/" + std::to_string(section_index) + "/" +
                   std::to_string(window_index++);
            c.source_doi = std::string(doi);
            c.source_kind = kind;
            c.section = s.name;
            c.text = text::join(std::vector<std::string>(s.tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                                         s.tokens.begin() + static_cast<std::ptrdiff_t>(end)),
                                " ");
            out.push_back(std::move(c));
            if (end == s.tokens.size()) break;
        }
        ++section_index;
    }
    if (out.empty()) throw Error(ErrorCode::EmptyDocument, "document has no text to chunk");
    return out;
}

std::string render_record(const MetadataRecord& r) {
    std::string out = "# " + r.title + "\n";
    if (!r.alternative_title.empty()) out += "Also known as: " + r.alternative_title + "\n";
    out += "DOI: " + r.doi + "\n";
    if (!r.authors.empty()) out += "Authors: " + text::join(r.authors, "; ") + "\n";
    if (!r.description.empty()) out += r.description + "\n";
    if (!r.kv_fields.empty()) {
        out += "## Metadata\n";
        for (const auto& [k, v] : r.kv_fields) out += k + ": " + v + "\n";
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<double> HashingEmbeddingProvider::embed_one(std::string_view input) const {
    auto tokens = text::split_whitespace(text::fold_for_matching(input));
    if (tokens.empty()) tokens = text::split_whitespace(input);
    if (tokens.empty()) throw Error(ErrorCode::ProviderError, "cannot embed blank text");
    std::vector<double> v(dimension_, 0.0);
    for (const auto& t : tokens) v[fnv1a64(t) % dimension_] += 1.0;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

std::vector<std::vector<double>> HashingEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

const Chunk* VectorIndex::find(std::string_view id) const {
    auto it = chunks_.find(id);
    return it == chunks_.end() ? nullptr : &it->second;
}

void VectorIndex::upsert(Chunk chunk) {
    if (chunk.text.empty()) throw Error(ErrorCode::InvalidArgument, "chunk text must be non-empty");
    if (dimension_ == 0) dimension_ = chunk.embedding.size();
    if (chunk.embedding.size() != dimension_)
        throw Error(ErrorCode::DimensionMismatch,
                    "chunk " + chunk.id + " has dimension " + std::to_string(chunk.embedding.size()) +
                        ", index expects " + std::to_string(dimension_),
                    {chunk.id});
    double norm = 0.0;
    for (double x : chunk.embedding) norm += x * x;
    if (std::abs(std::sqrt(norm) - 1.0) > 1e-6)
        throw Error(ErrorCode::InvalidArgument, "chunk " + chunk.id + " embedding is not unit length", {chunk.id});
    std::string id = chunk.id;
    chunks_.insert_or_assign(std::move(id), std::move(chunk));
}

void VectorIndex::remove_document(std::string_view doi, SourceKind kind) {
    std::erase_if(chunks_, [&](const auto& kv) {
        return kv.second.source_doi == doi && kv.second.source_kind == kind;
    });
}

nlohmann::json VectorIndex::to_json() const {
    nlohmann::json chunks = nlohmann::json::array();
    for (const auto& [id, c] : chunks_) {
        chunks.push_back({{"id", c.id},
                          {"source_doi", c.source_doi},
                          {"source_kind", to_string(c.source_kind)},
                          {"section", c.section},
                          {"text", c.text},
                          {"embedding", c.embedding}});
    }
    return {{"dimension", dimension_}, {"chunks", chunks}};
}

VectorIndex VectorIndex::from_json(const nlohmann::json& doc) {
    VectorIndex index(doc.value("dimension", std::size_t{0}));
    for (const auto& j : doc.at("chunks")) {
        Chunk c;
        c.id = j.at("id").get<std::string>();
        c.source_doi = j.at("source_doi").get<std::string>();
        c.source_kind = source_kind_from_string(j.at("source_kind").get<std::string>());
        c.section = j.value("section", "");
        c.text = j.at("text").get<std::string>();
        c.embedding = j.at("embedding").get<std::vector<double>>();
        index.upsert(std::move(c));
    }
    return index;
}

namespace {

void normalize(std::vector<double>& v, const std::string& id) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw Error(ErrorCode::ProviderError, "provider returned a zero or non-finite vector for " + id, {id});
    for (double& x : v) x /= norm;
}

constexpr std::size_t kEmbedBatch = 32;

} // namespace

void embed_and_index(VectorIndex& index, std::vector<Chunk> chunks, EmbeddingProvider& provider) {
    const std::size_t expected = index.dimension() ? index.dimension() : provider.dimension();
    for (std::size_t start = 0; start < chunks.size(); start += kEmbedBatch) {
        std::size_t end = std::min(start + kEmbedBatch, chunks.size());
        std::vector<std::string> texts, ids;
        for (std::size_t i = start; i < end; ++i) {
            texts.push_back(chunks[i].text);
            ids.push_back(chunks[i].id);
        }
        std::vector<std::vector<double>> vectors;
        try {
            vectors = provider.embed(texts);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DimensionMismatch) throw;
            throw Error(ErrorCode::ProviderError, "embedding failed for " + text::join(ids, ", ") + ": " + e.what(), ids);
        } catch (const std::exception& e) {
            throw Error(ErrorCode::ProviderError, "embedding failed for " + text::join(ids, ", ") + ": " + e.what(), ids);
        }
        if (vectors.size() != texts.size())
            throw Error(ErrorCode::ProviderError, "provider returned " + std::to_string(vectors.size()) +
                                                      " vectors for " + std::to_string(texts.size()) + " texts",
                        ids);
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            Chunk& c = chunks[start + i];
            if (expected && vectors[i].size() != expected)
                throw Error(ErrorCode::DimensionMismatch,
                            "provider returned dimension " + std::to_string(vectors[i].size()) + " for " + c.id +
                                ", expected " + std::to_string(expected),
                            {c.id});
            normalize(vectors[i], c.id);
            c.embedding = std::move(vectors[i]);
        }
    }
    for (auto& c : chunks) index.upsert(std::move(c));
}

std::vector<RetrievalHit> retrieve(const VectorIndex& index, std::string_view query, EmbeddingProvider& provider,
                                   std::size_t k) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    if (index.empty()) throw Error(ErrorCode::EmptyIndex, "retrieval index is empty");
    auto vectors = provider.embed({std::string(query)});
    if (vectors.size() != 1) throw Error(ErrorCode::ProviderError, "provider returned no query vector");
    auto q = std::move(vectors.front());
    if (q.size() != index.dimension())
        throw Error(ErrorCode::DimensionMismatch, "query dimension " + std::to_string(q.size()) +
                                                      " does not match index dimension " +
                                                      std::to_string(index.dimension()));
    normalize(q, "query");

    struct Scored {
        const Chunk* chunk;
        double score;
    };
    std::vector<Scored> scored;
    scored.reserve(index.size());
    for (const auto& [id, c] : index.chunks()) {
        double dot = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) dot += q[i] * c.embedding[i];
        scored.push_back({&c, std::clamp(dot, -1.0, 1.0)});
    }
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      [](const Scored& a, const Scored& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.chunk->id < b.chunk->id;
                      });
    std::vector<RetrievalHit> hits;
    hits.reserve(n);
    for (std::size_t i = 0; i < n; ++i) hits.push_back({*scored[i].chunk, scored[i].score});
    return hits;
}

} // namespace fairkg
