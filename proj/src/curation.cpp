#include "fairkg/curation.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "fairkg/error.hpp"
#include "fairkg/report.hpp"
#include "fairkg/text.hpp"

namespace fairkg {

// ---- audit ----------------------------------------------------------------

bool FairAudit::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return c.passed; });
}

bool FairAudit::passed(char principle) const {
    return std::all_of(checks.begin(), checks.end(),
                       [&](const AuditCheck& c) { return c.principle != principle || c.passed; });
}

const AuditCheck* FairAudit::check(std::string_view name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

FairAudit audit_dataset(const PropertyGraph& graph, const DataModelSchema& schema, std::string_view doi) {
    const Node* ds = graph.find_dataset(doi);
    if (!ds) throw Error(ErrorCode::DatasetNotFound, "dataset not found: " + std::string(doi), {std::string(doi)});
    FairAudit audit{ds->properties.count("doi") ? string_property(ds->properties, "doi") : std::string(doi), {}};
    const auto& p = ds->properties;

    const std::string id = string_property(p, "doi");
    audit.checks.push_back({'F', "identifier", is_well_formed_doi(id), id.empty() ? "no DOI" : id});
    const std::string title = text::trim(string_property(p, "title"));
    audit.checks.push_back({'F', "title", !title.empty(), title.empty() ? "no title" : title});

    std::size_t files = 0;
    std::vector<std::string> no_url;
    for (const Edge* e : graph.out_edges(ds->id)) {
        if (e->edge_type != "containsFile") continue;
        const Node* f = graph.node(e->target);
        if (!f) continue;
        ++files;
        if (text::trim(string_property(f->properties, "access_url")).empty())
            no_url.push_back(string_property(f->properties, "path"));
    }
    std::string access_detail;
    if (files == 0) access_detail = "no files listed";
    else if (no_url.empty()) access_detail = std::to_string(files) + " files with access URLs";
    else access_detail = "missing access URL: " + text::join(no_url, ", ");
    audit.checks.push_back({'A', "file-access-urls", files > 0 && no_url.empty(), access_detail});

    const ValidationReport vr = validate(schema, dataset_subgraph(graph, doi));
    audit.checks.push_back({'I', "schema-conformance", vr.ok(),
                            vr.ok() ? "conforms to schema v" + std::to_string(schema.version())
                                    : std::to_string(vr.violations.size()) + " violations"});

    auto lic = p.find("license");
    const bool has_license = lic != p.end() && !text::trim(scalar_to_string(lic->second)).empty();
    audit.checks.push_back({'R', "license", has_license, has_license ? scalar_to_string(lic->second) : "no license"});

    auto rep = p.find("report_ingested");
    const bool has_report = rep != p.end() && std::holds_alternative<bool>(rep->second) && std::get<bool>(rep->second);
    audit.checks.push_back({'R', "data-report", has_report, has_report ? "data report ingested" : "no data report"});

    std::vector<std::string> pubs;
    for (const Edge* e : graph.out_edges(ds->id))
        if (e->edge_type == "describedBy")
            if (const Node* n = graph.node(e->target)) pubs.push_back(n->name());
    audit.checks.push_back(
        {'R', "publication", !pubs.empty(), pubs.empty() ? "no linked publication" : text::join(pubs, "; ")});
    return audit;
}

nlohmann::json to_json(const FairAudit& audit) {
    nlohmann::json checks = nlohmann::json::array();
    nlohmann::json principles = nlohmann::json::object();
    for (const auto& c : audit.checks) {
        checks.push_back({{"principle", std::string(1, c.principle)},
                          {"name", c.name},
                          {"passed", c.passed},
                          {"detail", c.detail}});
    }
    for (char pr : {'F', 'A', 'I', 'R'}) principles[std::string(1, pr)] = audit.passed(pr);
    return {{"doi", audit.doi}, {"passed", audit.passed()}, {"principles", principles}, {"checks", checks}};
}

// ---- manifest -------------------------------------------------------------

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

DownloadManifest build_manifest(const PropertyGraph& graph, std::string_view doi, const FileFilters& filters,
                                std::string generated_at) {
    DownloadManifest m{std::string(doi), {}, std::move(generated_at)};
    for (const Node& f : locate_files(graph, doi, filters)) {
        ManifestEntry e;
        e.path = string_property(f.properties, "path");
        if (auto it = f.properties.find("size"); it != f.properties.end()) {
            if (auto* i = std::get_if<std::int64_t>(&it->second)) e.size = *i;
            else if (auto* d = std::get_if<double>(&it->second)) e.size = static_cast<std::int64_t>(*d);
        }
        e.access_url = string_property(f.properties, "access_url");
        e.checksum = string_property(f.properties, "checksum");
        if (e.checksum.empty()) e.checksum = "-";
        m.entries.push_back(std::move(e));
    }
    return m;
}

nlohmann::json to_json(const DownloadManifest& manifest) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : manifest.entries)
        entries.push_back({{"path", e.path}, {"size", e.size}, {"access_url", e.access_url}, {"checksum", e.checksum}});
    return {{"doi", manifest.doi}, {"generated_at", manifest.generated_at}, {"entries", entries}};
}

namespace {

std::string shell_quote(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    out += '\'';
    return out;
}

// Strips anything that could end a comment line.
std::string comment_safe(std::string_view s) {
    std::string out;
    for (char c : s) out += (c == '\n' || c == '\r') ? ' ' : c;
    return out;
}

std::string checksum_tool(std::string algo) {
    algo = text::to_lower(algo);
    algo.erase(std::remove(algo.begin(), algo.end(), '-'), algo.end());
    if (algo == "md5") return "md5sum";
    if (algo == "sha1") return "sha1sum";
    if (algo == "sha256") return "sha256sum";
    if (algo == "sha512") return "sha512sum";
    return {};
}

} // namespace

std::string render_script(const DownloadManifest& manifest) {
    std::ostringstream out;
    out << "#!/bin/sh\n";
    out << "# " << comment_safe(manifest.doi) << ": " << manifest.entries.size() << " files, generated "
        << comment_safe(manifest.generated_at) << "\n";
    out << "set -eu\n\n";
    out << "fetch() {\n";
    out << "    mkdir -p \"$(dirname \"$1\")\"\n";
    out << "    curl -fL --retry 3 -o \"$1\" \"$2\"\n";
    out << "}\n\n";
    for (const auto& e : manifest.entries) out << "fetch " << shell_quote(e.path) << ' ' << shell_quote(e.access_url) << '\n';

    bool header = false;
    for (const auto& e : manifest.entries) {
        if (e.checksum == "-") continue;
        const auto colon = e.checksum.find(':');
        const std::string tool = colon == std::string::npos ? "" : checksum_tool(e.checksum.substr(0, colon));
        if (!header) {
            out << '\n';
            header = true;
        }
        if (tool.empty()) {
            out << "# unsupported checksum for " << comment_safe(e.path) << ": " << comment_safe(e.checksum) << '\n';
            continue;
        }
        const std::string line = e.checksum.substr(colon + 1) + "  " + e.path;
        out << "printf '%s\\n' " << shell_quote(line) << " | " << tool << " -c -\n";
    }
    return out.str();
}

// ---- knowledge base ------------------------------------------------------------

KnowledgeBase::KnowledgeBase(std::shared_ptr<EmbeddingProvider> embedder, KnowledgeBaseOptions options)
    : index_(embedder ? embedder->dimension() : 0), embedder_(std::move(embedder)), options_(std::move(options)) {
    if (!embedder_) throw Error(ErrorCode::InvalidArgument, "an embedding provider is required");
    rules_ = builtin_rules();
    rules_.insert(rules_.end(), options_.extra_rules.begin(), options_.extra_rules.end());
    graph_.read([&](const PropertyGraph&, const DataModelSchema& schema) { validate_rules(rules_, schema); });
}

std::unique_ptr<KnowledgeBase> KnowledgeBase::open(std::shared_ptr<EmbeddingProvider> embedder,
                                                   KnowledgeBaseOptions options) {
    auto kb = std::make_unique<KnowledgeBase>(std::move(embedder), options);
    if (!options.store_path || !std::filesystem::exists(*options.store_path)) return kb;
    const auto& base = *options.store_path;
    PropertyGraph graph = load(base);
    DataModelSchema schema = builtin_schema();
    const std::filesystem::path schema_path = base.string() + ".schema.json";
    if (std::filesystem::exists(schema_path)) {
        std::ifstream in(schema_path);
        try {
            schema = schema_from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::CorruptStore, "unreadable schema file: " + std::string(e.what()));
        }
    }
    kb->graph_.write([&](PropertyGraph& g, DataModelSchema& s) {
        g = std::move(graph);
        s = std::move(schema);
    });
    const std::filesystem::path index_path = base.string() + ".index.json";
    if (std::filesystem::exists(index_path)) {
        std::ifstream in(index_path);
        try {
            VectorIndex idx = VectorIndex::from_json(nlohmann::json::parse(in));
            if (idx.dimension() != 0 && idx.dimension() != kb->embedder_->dimension())
                throw Error(ErrorCode::DimensionMismatch, "stored index dimension " + std::to_string(idx.dimension()) +
                                                              " differs from the embedding provider");
            kb->index_ = std::move(idx);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::CorruptStore, "unreadable index file: " + std::string(e.what()));
        }
    }
    return kb;
}

UpsertSummary KnowledgeBase::harvest(std::string_view repo_base, std::string_view doi,
                                     const std::optional<std::string>& report_text) {
    const std::string raw = fetch_record(repo_base, doi);
    return ingest_record(parse_ddi(raw, repo_base), report_text);
}

UpsertSummary KnowledgeBase::ingest_record(const MetadataRecord& record, const std::optional<std::string>& report_text) {
    std::optional<DataReport> report;
    if (report_text) report = parse_report(*report_text, record.doi);
    return ingest(record, report, report_text);
}

UpsertSummary KnowledgeBase::ingest(const MetadataRecord& record, const std::optional<DataReport>& report,
                                    const std::optional<std::string>& report_text) {
    if (record.doi.empty()) throw Error(ErrorCode::MissingIdentifier, "record has no DOI");
    const Extraction extraction = extract_entities(record, nullptr, rules_);
    // Stage on copies so a rejected report leaves the graph untouched.
    UpsertSummary summary = graph_.write([&](PropertyGraph& graph, DataModelSchema& schema) {
        PropertyGraph staged = graph;
        DataModelSchema staged_schema = report ? extend_with_provisional(schema, *report) : schema;
        UpsertSummary s = upsert_dataset(staged, staged_schema, record, extraction);
        if (report)
            s += apply_proposals(staged, staged_schema,
                                 report_to_graph(*report, report_convention(*report), record.files, rules_));
        graph = std::move(staged);
        schema = std::move(staged_schema);
        return s;
    });

    std::vector<Chunk> chunks = chunk_document(render_record(record), SourceKind::MetadataRecord, record.doi,
                                               options_.chunking);
    std::vector<SourceKind> replace{SourceKind::MetadataRecord};
    if (report_text && !text::trim(*report_text).empty()) {
        auto rc = chunk_document(*report_text, SourceKind::DataReport, record.doi, options_.chunking);
        chunks.insert(chunks.end(), std::make_move_iterator(rc.begin()), std::make_move_iterator(rc.end()));
        replace.push_back(SourceKind::DataReport);
    }
    index_documents(std::move(chunks), record.doi, replace);
    persist();
    return summary;
}

UpsertSummary KnowledgeBase::ingest_report(std::string_view doi, const std::string& report_text) {
    DataReport report = parse_report(report_text, doi);
    const NamingConvention convention = report_convention(report);
    std::string canonical_doi;
    std::vector<Chunk> chunks;
    UpsertSummary summary = graph_.write([&](PropertyGraph& graph, DataModelSchema& schema) {
        const Node* ds = graph.find_dataset(doi);
        if (!ds) throw Error(ErrorCode::DatasetNotFound, "dataset not found: " + std::string(doi), {std::string(doi)});
        canonical_doi = string_property(ds->properties, "doi");
        report.source_doi = canonical_doi;
        std::vector<FileEntry> files;
        for (const Edge* e : graph.out_edges(ds->id)) {
            if (e->edge_type != "containsFile") continue;
            const Node* f = graph.node(e->target);
            if (!f) continue;
            FileEntry fe;
            fe.path = string_property(f->properties, "path");
            fe.content_type = string_property(f->properties, "content_type");
            fe.access_url = string_property(f->properties, "access_url");
            if (auto size = f->properties.find("size"); size != f->properties.end())
                if (const auto* n = std::get_if<std::int64_t>(&size->second)) fe.size = *n;
            if (std::string sum = string_property(f->properties, "checksum"); !sum.empty()) fe.checksum = sum;
            files.push_back(std::move(fe));
        }
        chunks = chunk_document(report_text, SourceKind::DataReport, canonical_doi, options_.chunking);
        PropertyGraph staged = graph;
        DataModelSchema staged_schema = extend_with_provisional(schema, report);
        UpsertSummary s = apply_proposals(staged, staged_schema, report_to_graph(report, convention, files, rules_));
        graph = std::move(staged);
        schema = std::move(staged_schema);
        return s;
    });
    index_documents(std::move(chunks), canonical_doi, {SourceKind::DataReport});
    persist();
    return summary;
}

std::size_t KnowledgeBase::add_document(std::string_view doi, SourceKind kind, const std::string& text) {
    std::string canonical_doi;
    graph_.write([&](PropertyGraph& graph, DataModelSchema& schema) {
        const Node* ds = graph.find_dataset(doi);
        if (!ds) throw Error(ErrorCode::DatasetNotFound, "dataset not found: " + std::string(doi), {std::string(doi)});
        canonical_doi = string_property(ds->properties, "doi");
        if (kind != SourceKind::Publication) return;
        // First non-empty line names the publication.
        std::string title;
        for (const auto& line : text::split_lines(text)) {
            std::string t = text::trim(line);
            while (!t.empty() && t.front() == '#') t.erase(0, 1);
            t = text::trim(t);
            if (!t.empty()) {
                title = t;
                break;
            }
        }
        if (title.empty()) return;
        GraphProposals gp;
        gp.nodes.push_back({"Publication", {{"name", title}}, false});
        gp.edges.push_back({"describedBy", NodeRef::dataset(canonical_doi), gp.nodes.back().ref()});
        apply_proposals(graph, schema, gp);
    });
    auto chunks = chunk_document(text, kind, canonical_doi, options_.chunking);
    const std::size_t n = chunks.size();
    index_documents(std::move(chunks), canonical_doi, {kind});
    persist();
    return n;
}

void KnowledgeBase::index_documents(std::vector<Chunk> chunks, std::string_view doi,
                                    const std::vector<SourceKind>& replace) {
    // Embed outside the lock; the provider may be remote.
    VectorIndex staged(embedder_->dimension());
    embed_and_index(staged, std::move(chunks), *embedder_);
    std::unique_lock lock(index_mutex_);
    for (SourceKind k : replace) index_.remove_document(doi, k);
    for (const auto& [id, c] : staged.chunks()) index_.upsert(c);
}

std::size_t KnowledgeBase::index_size() const {
    std::shared_lock lock(index_mutex_);
    return index_.size();
}

GroundedAnswer KnowledgeBase::ask(std::string_view question, AnswerMode mode, CompletionProvider* completer,
                                  std::size_t top_k) const {
    return graph_.read([&](const PropertyGraph& graph, const DataModelSchema& schema) {
        std::shared_lock lock(index_mutex_);
        AnswerContext ctx{graph, schema, index_, embedder_.get(), completer, top_k};
        return answer(question, ctx, mode);
    });
}

void KnowledgeBase::persist() const {
    if (!options_.store_path) return;
    std::lock_guard guard(persist_mutex_);
    const auto& base = *options_.store_path;
    if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
    auto write_text = [](const std::filesystem::path& p, const std::string& body) {
        const std::filesystem::path tmp = p.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
            out << body;
            if (!out) throw Error(ErrorCode::IoError, "write failed: " + tmp.string());
        }
        std::error_code ec;
        std::filesystem::rename(tmp, p, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot replace " + p.string() + ": " + ec.message());
    };
    graph_.read([&](const PropertyGraph& graph, const DataModelSchema& schema) {
        save(graph, base);
        write_text(base.string() + ".schema.json", to_json(schema).dump(1));
        std::shared_lock lock(index_mutex_);
        write_text(base.string() + ".index.json", index_.to_json().dump());
    });
}

} // namespace fairkg
