#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairkg/answer.hpp"
#include "fairkg/graph.hpp"
#include "fairkg/graph_store.hpp"
#include "fairkg/harvester.hpp"
#include "fairkg/retrieval.hpp"

namespace fairkg {

// ---- FAIR audit ------------------------------------------------------------------

struct AuditCheck {
    char principle; // 'F', 'A', 'I' or 'R'
    std::string name;
    bool passed;
    std::string detail;
};

struct FairAudit {
    std::string doi;
    std::vector<AuditCheck> checks;

    bool passed() const;
    bool passed(char principle) const;
    const AuditCheck* check(std::string_view name) const;
};

/// F: identifier + title. A: every DataFile has an access URL. I: the
/// dataset's subgraph validates. R: license, data report, linked publication.
FairAudit audit_dataset(const PropertyGraph& graph, const DataModelSchema& schema, std::string_view doi);
nlohmann::json to_json(const FairAudit& audit);

// ---- download manifests ---------------------------------------------------------------

struct ManifestEntry {
    std::string path;
    std::int64_t size = 0;
    std::string access_url;
    std::string checksum; // "<algorithm>:<hex>" or "-"

    bool operator==(const ManifestEntry&) const = default;
};

struct DownloadManifest {
    std::string doi;
    std::vector<ManifestEntry> entries; // sorted by path, unique
    std::string generated_at;
};

/// Entries are the locate_files result for `filters`.
DownloadManifest build_manifest(const PropertyGraph& graph, std::string_view doi, const FileFilters& filters,
                                std::string generated_at);
nlohmann::json to_json(const DownloadManifest& manifest);

/// POSIX shell script: one `fetch` line per entry, then one checksum check
/// per entry that has a checksum.
std::string render_script(const DownloadManifest& manifest);

std::string utc_timestamp();

// ---- knowledge base ---------------------------------------------------------------------

struct KnowledgeBaseOptions {
    std::vector<KeywordRule> extra_rules;
    ChunkingOptions chunking;
    std::optional<std::filesystem::path> store_path; // graph snapshot; index/schema beside it
};

/// Graph + retrieval index + ingestion pipelines. Graph access follows the
/// GraphStore reader/writer contract; the index has its own reader/writer
/// lock, always taken after the graph lock.
class KnowledgeBase {
public:
    KnowledgeBase(std::shared_ptr<EmbeddingProvider> embedder, KnowledgeBaseOptions options = {});

    /// Loads the snapshot at options.store_path when it exists.
    static std::unique_ptr<KnowledgeBase> open(std::shared_ptr<EmbeddingProvider> embedder,
                                               KnowledgeBaseOptions options);

    /// Fetch + parse + upsert (+ report when given) + index.
    UpsertSummary harvest(std::string_view repo_base, std::string_view doi,
                          const std::optional<std::string>& report_text = std::nullopt);

    /// Offline variant used when the record is already parsed.
    UpsertSummary ingest_record(const MetadataRecord& record,
                                const std::optional<std::string>& report_text = std::nullopt);

    /// Report for a dataset already in the graph (DatasetNotFound otherwise).
    UpsertSummary ingest_report(std::string_view doi, const std::string& report_text);

    /// Publications and other supporting documents for retrieval.
    std::size_t add_document(std::string_view doi, SourceKind kind, const std::string& text);

    GroundedAnswer ask(std::string_view question, AnswerMode mode, CompletionProvider* completer = nullptr,
                       std::size_t top_k = 5) const;

    const GraphStore& store() const noexcept { return graph_; }
    GraphStore& store() noexcept { return graph_; }
    const std::vector<KeywordRule>& rules() const noexcept { return rules_; }

    template <class F>
    decltype(auto) read_index(F&& f) const {
        std::shared_lock lock(index_mutex_);
        return std::forward<F>(f)(std::as_const(index_));
    }

    std::size_t index_size() const;

    /// Writes graph snapshot, schema and index when a store path is set.
    void persist() const;

private:
    UpsertSummary ingest(const MetadataRecord& record, const std::optional<DataReport>& report,
                         const std::optional<std::string>& report_text);
    void index_documents(std::vector<Chunk> chunks, std::string_view doi, const std::vector<SourceKind>& replace);

    GraphStore graph_;
    mutable std::shared_mutex index_mutex_;
    VectorIndex index_;
    std::vector<KeywordRule> rules_;
    std::shared_ptr<EmbeddingProvider> embedder_;
    KnowledgeBaseOptions options_;
    mutable std::mutex persist_mutex_;
};

} // namespace fairkg
