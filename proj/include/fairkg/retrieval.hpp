#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairkg/record.hpp"

namespace fairkg {

enum class SourceKind { DataReport, Publication, MetadataRecord };

std::string_view to_string(SourceKind kind);
SourceKind source_kind_from_string(std::string_view s);

struct Chunk {
    std::string id;
    std::string source_doi;
    SourceKind source_kind = SourceKind::DataReport;
    std::string section;
    std::string text;
    std::vector<double> embedding; // unit length once indexed
};

struct ChunkingOptions {
    std::size_t window = 300;
    std::size_t overlap = 50;
};

/// Splits on markdown headings first, then into windows of at most
/// `window` whitespace tokens stepping `window - overlap`. Throws
/// EmptyDocument, InvalidArgument (overlap >= window).
std::vector<Chunk> chunk_document(std::string_view doc, SourceKind kind, std::string_view doi,
                                  const ChunkingOptions& options = {});

/// Plain-text rendering of a record used as a retrieval document.
std::string render_record(const MetadataRecord& record);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
    virtual std::size_t dimension() const = 0;
};

/// Deterministic offline embedder: lower-cased alphanumeric tokens are
/// hashed (64-bit FNV-1a, modulo the dimension) into a count vector which
/// is then unit-normalized.
class HashingEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashingEmbeddingProvider(std::size_t dimension = 256) : dimension_(dimension) {}

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dimension_; }

    std::vector<double> embed_one(std::string_view text) const;

private:
    std::size_t dimension_;
};

std::uint64_t fnv1a64(std::string_view bytes);

class VectorIndex {
public:
    explicit VectorIndex(std::size_t dimension = 0) : dimension_(dimension) {}

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return chunks_.size(); }
    bool empty() const noexcept { return chunks_.empty(); }
    const Chunk* find(std::string_view id) const;
    const std::map<std::string, Chunk, std::less<>>& chunks() const noexcept { return chunks_; }

    /// Inserts or replaces by chunk id. The embedding must already be unit
    /// length and match the index dimension (DimensionMismatch otherwise; the
    /// first insert fixes the dimension of an index created with 0).
    void upsert(Chunk chunk);
    void remove_document(std::string_view doi, SourceKind kind);

    nlohmann::json to_json() const;
    static VectorIndex from_json(const nlohmann::json& doc);

private:
    std::size_t dimension_;
    std::map<std::string, Chunk, std::less<>> chunks_;
};

/// Embeds and inserts the chunks. Provider failures surface as ProviderError
/// naming the affected chunk ids.
void embed_and_index(VectorIndex& index, std::vector<Chunk> chunks, EmbeddingProvider& provider);

struct RetrievalHit {
    Chunk chunk;
    double score;
};

/// k best cosine matches, descending score, ties by chunk id. Throws
/// EmptyIndex, InvalidArgument (k < 1), DimensionMismatch.
std::vector<RetrievalHit> retrieve(const VectorIndex& index, std::string_view query, EmbeddingProvider& provider,
                                   std::size_t k);

} // namespace fairkg
