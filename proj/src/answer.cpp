#include "fairkg/answer.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "fairkg/error.hpp"
#include "fairkg/text.hpp"

namespace fairkg {

nlohmann::json to_json(const Source& source) {
    if (const auto* f = std::get_if<FactSource>(&source))
        return {{"kind", "fact"}, {"subject", f->subject}, {"predicate", f->predicate}, {"object", f->object}};
    return {{"kind", "chunk"}, {"id", std::get<ChunkSource>(source).chunk_id}};
}

AnswerMode answer_mode_from_string(std::string_view s) {
    std::string m = text::to_lower(s);
    if (m.empty() || m == "grounded") return AnswerMode::Grounded;
    if (m == "llm") return AnswerMode::LLM;
    throw Error(ErrorCode::InvalidArgument, "unknown answer mode: " + std::string(s));
}

nlohmann::json to_json(const GroundedAnswer& a) {
    nlohmann::json sources = nlohmann::json::array();
    for (const auto& s : a.sources) sources.push_back(to_json(s));
    return {{"answer", a.text}, {"sources", sources}, {"intent", to_json(a.intent)}, {"empty_result", a.empty_result}};
}

namespace {

std::string node_display(const PropertyGraph& graph, std::string_view id) {
    const Node* n = graph.node(id);
    if (!n) return std::string(id);
    if (n->label == kDataFileLabel) return string_property(n->properties, "path");
    std::string name = n->name();
    return name.empty() ? n->id : name;
}

std::string dataset_display(const Node& ds) {
    std::string alt = string_property(ds.properties, "alternative_title");
    std::string title = alt.empty() ? string_property(ds.properties, "title") : alt;
    return title + " (" + string_property(ds.properties, "doi") + ")";
}

GroundedAnswer no_information(const Intent& intent) {
    return {std::string(kNoGroundedInformation), {}, intent, true};
}

std::vector<FactSource> dedup(std::vector<FactSource> facts) {
    std::vector<FactSource> out;
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (auto& f : facts) {
        if (seen.insert({f.subject, f.predicate, f.object}).second) out.push_back(std::move(f));
    }
    return out;
}

const Node& dataset_node(const PropertyGraph& graph, const std::string& doi) {
    const Node* ds = graph.find_dataset(doi);
    if (!ds) throw Error(ErrorCode::DatasetNotFound, "dataset not found: " + doi, {doi});
    return *ds;
}

std::vector<std::string> detail_facets(const Intent& intent, const DataModelSchema& schema) {
    if (!intent.facets.empty()) return intent.facets;
    std::vector<std::string> all;
    for (const auto& [name, _] : schema.edge_types()) {
        if (name != "containsFile" && name != "includesFile") all.push_back(name);
    }
    return all;
}

struct Composed {
    std::string text;
    std::vector<FactSource> facts;
};

Composed compose_which(const AnswerContext& ctx, const Intent& intent) {
    Composed c;
    auto datasets = find_datasets_by(ctx.graph, ctx.schema, intent.entity_label, intent.entity_name);
    const Node* entity = ctx.graph.find(intent.entity_label, intent.entity_name);
    if (datasets.empty() || !entity) return c;
    std::vector<std::string> names;
    for (const auto& ds : datasets) {
        names.push_back(dataset_display(ds));
        for (const Edge* e : ctx.graph.out_edges(ds.id))
            if (e->target == entity->id) c.facts.push_back({e->source, e->edge_type, e->target});
        for (const Edge* e : ctx.graph.in_edges(ds.id))
            if (e->source == entity->id) c.facts.push_back({e->source, e->edge_type, e->target});
    }
    c.text = "Datasets linked to " + intent.entity_label + " \"" + entity->name() + "\": " + text::join(names, "; ") + ".";
    return c;
}

Composed compose_detail(const AnswerContext& ctx, const Intent& intent) {
    Composed c;
    std::vector<std::string> paragraphs;
    for (const auto& doi : intent.dois) {
        const Node& ds = dataset_node(ctx.graph, doi);
        std::vector<std::string> parts;
        for (const auto& facet : detail_facets(intent, ctx.schema)) {
            auto facts = facet_facts(ctx.graph, ds, facet);
            if (facts.empty()) continue;
            std::set<std::string> names;
            for (const auto& f : facts) names.insert(node_display(ctx.graph, f.object));
            parts.push_back(facet + ": " + text::join({names.begin(), names.end()}, ", "));
            c.facts.insert(c.facts.end(), facts.begin(), facts.end());
        }
        if (!parts.empty()) paragraphs.push_back(dataset_display(ds) + ": " + text::join(parts, "; ") + ".");
    }
    c.text = text::join(paragraphs, "\n");
    return c;
}

Composed compose_compare(const AnswerContext& ctx, const Intent& intent) {
    Composed c;
    std::optional<std::vector<std::string>> facets;
    if (!intent.facets.empty()) facets = intent.facets;
    ComparisonTable table = compare(ctx.graph, ctx.schema, intent.dois, facets);
    std::vector<const Node*> datasets;
    for (const auto& doi : intent.dois) datasets.push_back(&dataset_node(ctx.graph, doi));

    std::vector<std::string> lines;
    for (const auto& row : table.rows) {
        bool any = std::any_of(row.cells.begin(), row.cells.end(), [](const auto& cell) { return !cell.empty(); });
        if (!any) continue;
        std::vector<std::string> cells;
        for (std::size_t i = 0; i < row.cells.size(); ++i) {
            std::string values = row.cells[i].empty() ? "(none recorded)" : text::join(row.cells[i], ", ");
            cells.push_back(dataset_display(*datasets[i]) + " = " + values);
            auto facts = facet_facts(ctx.graph, *datasets[i], row.facet);
            c.facts.insert(c.facts.end(), facts.begin(), facts.end());
        }
        lines.push_back(row.facet + (row.same ? " [same]: " : " [different]: ") + text::join(cells, " | "));
    }
    if (!lines.empty()) c.text = "Comparison:\n" + text::join(lines, "\n");
    return c;
}

Composed compose_locate(const AnswerContext& ctx, const Intent& intent) {
    Composed c;
    const std::string& doi = intent.dois.front();
    const Node& ds = dataset_node(ctx.graph, doi);
    auto files = locate_files(ctx.graph, doi, intent.filters);
    if (files.empty()) return c;
    std::vector<std::string> paths, filters;
    for (const auto& f : files) {
        paths.push_back(string_property(f.properties, "path"));
        c.facts.push_back({ds.id, "containsFile", f.id});
    }
    for (const auto& [k, v] : intent.filters) filters.push_back(k + "=" + v);
    c.text = std::to_string(files.size()) + " file(s) in " + dataset_display(ds) +
             (filters.empty() ? "" : " matching " + text::join(filters, ", ")) + ": " + text::join(paths, ", ") + ".";
    return c;
}

Composed compose_structured(const AnswerContext& ctx, const Intent& intent) {
    switch (intent.kind) {
    case IntentKind::WhichDatasets: return compose_which(ctx, intent);
    case IntentKind::Detail: return compose_detail(ctx, intent);
    case IntentKind::Compare: return compose_compare(ctx, intent);
    case IntentKind::LocateFiles: return compose_locate(ctx, intent);
    case IntentKind::FreeForm: break;
    }
    return {};
}

std::vector<RetrievalHit> relevant_chunks(const AnswerContext& ctx, std::string_view question, std::size_t k) {
    if (ctx.index.empty() || !ctx.embedder || k == 0) return {};
    auto hits = retrieve(ctx.index, question, *ctx.embedder, k);
    std::erase_if(hits, [](const RetrievalHit& h) { return h.score <= 0.0; });
    return hits;
}

constexpr std::size_t kExcerptTokens = 40;

std::string excerpt(const std::string& s) {
    auto tokens = text::split_whitespace(s);
    if (tokens.size() <= kExcerptTokens) return s;
    tokens.resize(kExcerptTokens);
    return text::join(tokens, " ") + " ...";
}

} // namespace

std::string serialize_fact(const PropertyGraph& graph, const FactSource& fact) {
    return node_display(graph, fact.subject) + " | " + fact.predicate + " | " + node_display(graph, fact.object);
}

std::vector<FactSource> facet_facts(const PropertyGraph& graph, const Node& dataset, std::string_view facet) {
    std::vector<FactSource> out;
    std::vector<std::string> frontier{dataset.id};
    for (const Edge* e : graph.out_edges(dataset.id)) frontier.push_back(e->target);
    for (const auto& id : frontier) {
        for (const Edge* e : graph.out_edges(id))
            if (e->edge_type == facet) out.push_back({e->source, e->edge_type, e->target});
    }
    return dedup(std::move(out));
}

std::string build_prompt(std::string_view question, const PropertyGraph& graph, const std::vector<FactSource>& facts,
                         const std::vector<RetrievalHit>& chunks) {
    std::ostringstream p;
    p << "Answer the question about curated human-robot interaction datasets using only the context below.\n"
         "Say so when the context does not contain the answer.\n\n";
    p << "Graph facts (subject | relation | object):\n";
    if (facts.empty()) p << "(none)\n";
    for (const auto& f : facts) p << "- " << serialize_fact(graph, f) << "\n";
    p << "\nDocument excerpts:\n";
    if (chunks.empty()) p << "(none)\n";
    for (const auto& h : chunks) p << "[" << h.chunk.id << "] " << h.chunk.text << "\n";
    p << "\nQuestion: " << question << "\n";
    return p.str();
}

GroundedAnswer answer(std::string_view question, const AnswerContext& ctx, AnswerMode mode) {
    Intent intent = parse_intent(question, ctx.graph);

    if (mode == AnswerMode::Grounded) {
        if (intent.kind != IntentKind::FreeForm) {
            Composed c = compose_structured(ctx, intent);
            c.facts = dedup(std::move(c.facts));
            if (c.facts.empty() || c.text.empty()) return no_information(intent);
            GroundedAnswer a{std::move(c.text), {}, intent, false};
            for (auto& f : c.facts) a.sources.emplace_back(std::move(f));
            return a;
        }
        auto hits = relevant_chunks(ctx, question, ctx.top_k);
        if (hits.empty()) return no_information(intent);
        GroundedAnswer a{{}, {}, intent, false};
        std::vector<std::string> parts;
        for (const auto& h : hits) {
            parts.push_back("From " + h.chunk.source_doi + " (" + h.chunk.section + "): " + excerpt(h.chunk.text));
            a.sources.emplace_back(ChunkSource{h.chunk.id});
        }
        a.text = text::join(parts, "\n");
        return a;
    }

    std::vector<FactSource> facts;
    if (intent.kind != IntentKind::FreeForm) facts = dedup(compose_structured(ctx, intent).facts);
    if (facts.size() > kMaxContextFacts) facts.resize(kMaxContextFacts);
    auto hits = relevant_chunks(ctx, question, kMaxContextChunks);
    if (facts.empty() && hits.empty()) return no_information(intent);
    if (!ctx.completer) throw Error(ErrorCode::ProviderError, "no completion provider configured");

    std::string reply;
    try {
        reply = ctx.completer->complete(build_prompt(question, ctx.graph, facts, hits), ctx.max_tokens);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ProviderError) throw;
        throw Error(ErrorCode::ProviderError, std::string("completion failed: ") + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ProviderError, std::string("completion failed: ") + e.what());
    }
    GroundedAnswer a{std::move(reply), {}, intent, false};
    for (auto& f : facts) a.sources.emplace_back(std::move(f));
    for (const auto& h : hits) a.sources.emplace_back(ChunkSource{h.chunk.id});
    return a;
}

bool verify_source(const Source& source, const PropertyGraph& graph, const VectorIndex& index) {
    if (const auto* f = std::get_if<FactSource>(&source)) return graph.has_edge(f->predicate, f->subject, f->object);
    return index.find(std::get<ChunkSource>(source).chunk_id) != nullptr;
}

} // namespace fairkg
