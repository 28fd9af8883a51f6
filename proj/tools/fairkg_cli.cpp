#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairkg/curation.hpp"
#include "fairkg/error.hpp"
#include "fairkg/eval.hpp"
#include "fairkg/providers.hpp"
#include "fairkg/service.hpp"
#include "fairkg/text.hpp"

using namespace fairkg;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path, {path});
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::pair<std::string, std::string> split_pair(const std::string& s) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
        throw Error(ErrorCode::InvalidArgument, "expected key=value, got '" + s + "'", {s});
    return {s.substr(0, eq), s.substr(eq + 1)};
}

FileFilters parse_filters(const std::vector<std::string>& items) {
    FileFilters f;
    for (const auto& item : items) {
        auto [k, v] = split_pair(item);
        f[k] = v;
    }
    return f;
}

struct Globals {
    std::string store = "fairkg.snapshot";
    std::string rules_path;
    std::size_t dimension = 256;
};

std::unique_ptr<KnowledgeBase> open_kb(const Globals& g) {
    KnowledgeBaseOptions options;
    options.store_path = g.store;
    if (!g.rules_path.empty()) {
        try {
            options.extra_rules = rules_from_json(json::parse(read_file(g.rules_path)));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, "rules file is not valid JSON: " + std::string(e.what()));
        }
    }
    return KnowledgeBase::open(std::make_shared<HashingEmbeddingProvider>(g.dimension), options);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairkg: curate HRI dataset metadata into a knowledge graph and query it"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--store", g.store, "graph snapshot path (index and schema are kept beside it)");
    app.add_option("--rules", g.rules_path, "JSON file with additional keyword rules");

    auto* harvest = app.add_subcommand("harvest", "harvest a dataset record (and optional data report)");
    std::string repo, doi, report_path;
    harvest->add_option("--repo", repo, "repository base URL")->required();
    harvest->add_option("--doi", doi, "dataset DOI")->required();
    harvest->add_option("--report", report_path, "data report file");

    auto* ingest = app.add_subcommand("ingest-report", "attach a data report to a harvested dataset");
    ingest->add_option("--doi", doi)->required();
    ingest->add_option("--report", report_path)->required();

    auto* add_doc = app.add_subcommand("add-document", "index a publication or other document for a dataset");
    std::string doc_path, doc_kind = "Publication";
    add_doc->add_option("--doi", doi)->required();
    add_doc->add_option("--file", doc_path)->required();
    add_doc->add_option("--kind", doc_kind, "Publication, DataReport or MetadataRecord");

    auto* query = app.add_subcommand("query", "structured graph query");
    std::string which;
    query->add_option("--which-datasets", which, "Label=Name, e.g. RobotModel='Boston Dynamics Spot'")->required();

    auto* cmp = app.add_subcommand("compare", "compare datasets facet by facet");
    std::vector<std::string> dois, facets, filters;
    cmp->add_option("dois", dois, "two or more DOIs")->required();
    cmp->add_option("--facets", facets, "edge types to compare")->delimiter(',');

    auto* locate = app.add_subcommand("locate", "list data files matching filters");
    locate->add_option("doi", doi)->required();
    locate->add_option("--filter", filters, "key=value");

    auto* ask = app.add_subcommand("ask", "natural-language question");
    std::string question, mode = "grounded", completion_endpoint;
    ask->add_option("question", question)->required();
    ask->add_option("--mode", mode, "grounded or llm");
    ask->add_option("--completion-endpoint", completion_endpoint, "completion service URL for llm mode");

    auto* manifest = app.add_subcommand("manifest", "download manifest or script");
    std::string format = "json";
    manifest->add_option("doi", doi)->required();
    manifest->add_option("--filter", filters, "key=value");
    manifest->add_option("--format", format, "json or sh")->check(CLI::IsMember({"json", "sh"}));

    auto* audit = app.add_subcommand("audit", "FAIR audit of a dataset");
    audit->add_option("doi", doi)->required();

    auto* schema = app.add_subcommand("schema", "print the active data model");

    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    std::string config_path;
    int port = -1;
    serve->add_option("--config", config_path, "service configuration JSON");
    serve->add_option("--port", port, "overrides the config port");

    auto* ev = app.add_subcommand("eval", "fit the rating-normalization model");
    std::string ratings, dimension;
    std::uint64_t seed = 0;
    std::size_t samples = 10000, burnin = 2000;
    bool as_json = false, adjusted = false;
    ev->add_option("--ratings", ratings, "CSV rater_id,prompt_id,dimension,score")->required();
    ev->add_option("--dimension", dimension, "InformationRetrieval, AnswerStability, FactualAccuracy, ComparisonCapability")
        ->required();
    ev->add_option("--seed", seed)->required();
    ev->add_option("--samples", samples);
    ev->add_option("--burnin", burnin);
    ev->add_flag("--json", as_json, "print the posterior summary as JSON");
    ev->add_flag("--adjusted", adjusted, "also print bias-corrected scores");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*harvest) {
            auto kb = open_kb(g);
            std::optional<std::string> report;
            if (!report_path.empty()) report = read_file(report_path);
            std::cout << to_json(kb->harvest(repo, doi, report)).dump(2) << '\n';
        } else if (*ingest) {
            auto kb = open_kb(g);
            std::cout << to_json(kb->ingest_report(doi, read_file(report_path))).dump(2) << '\n';
        } else if (*add_doc) {
            auto kb = open_kb(g);
            std::cout << kb->add_document(doi, source_kind_from_string(doc_kind), read_file(doc_path)) << " chunks\n";
        } else if (*query) {
            auto kb = open_kb(g);
            auto [label, name] = split_pair(which);
            kb->store().read([&](const PropertyGraph& graph, const DataModelSchema& s) {
                for (const Node& n : find_datasets_by(graph, s, label, name))
                    std::cout << string_property(n.properties, "doi") << '\t' << string_property(n.properties, "title")
                              << '\n';
            });
        } else if (*cmp) {
            auto kb = open_kb(g);
            std::optional<std::vector<std::string>> f;
            if (!facets.empty()) f = facets;
            kb->store().read([&](const PropertyGraph& graph, const DataModelSchema& s) {
                const ComparisonTable t = compare(graph, s, dois, f);
                for (const auto& row : t.rows) {
                    std::cout << (row.same ? "same     " : "different") << "  " << row.facet;
                    for (std::size_t i = 0; i < row.cells.size(); ++i)
                        std::cout << "  [" << t.dois[i] << ": " << text::join(row.cells[i], ", ") << "]";
                    std::cout << '\n';
                }
            });
        } else if (*locate) {
            auto kb = open_kb(g);
            const FileFilters f = parse_filters(filters);
            kb->store().read([&](const PropertyGraph& graph, const DataModelSchema&) {
                for (const Node& n : locate_files(graph, doi, f))
                    std::cout << string_property(n.properties, "path") << '\n';
            });
        } else if (*ask) {
            auto kb = open_kb(g);
            std::unique_ptr<CompletionProvider> completer;
            if (!completion_endpoint.empty()) completer = std::make_unique<HttpCompletionProvider>(completion_endpoint);
            const GroundedAnswer a = kb->ask(question, answer_mode_from_string(mode), completer.get());
            std::cout << a.text << '\n';
            if (!a.sources.empty()) std::cout << "\nsources:\n";
            for (const auto& s : a.sources) std::cout << "  " << to_json(s).dump() << '\n';
        } else if (*manifest) {
            auto kb = open_kb(g);
            const FileFilters f = parse_filters(filters);
            const DownloadManifest m = kb->store().read([&](const PropertyGraph& graph, const DataModelSchema&) {
                if (!graph.find_dataset(doi))
                    throw Error(ErrorCode::DatasetNotFound, "dataset not found: " + doi, {doi});
                return build_manifest(graph, doi, f, utc_timestamp());
            });
            if (format == "sh") std::cout << render_script(m);
            else std::cout << to_json(m).dump(2) << '\n';
        } else if (*audit) {
            auto kb = open_kb(g);
            const FairAudit a = kb->store().read(
                [&](const PropertyGraph& graph, const DataModelSchema& s) { return audit_dataset(graph, s, doi); });
            for (const auto& c : a.checks)
                std::cout << c.principle << "  " << (c.passed ? "pass" : "FAIL") << "  " << c.name << "  " << c.detail
                          << '\n';
            return a.passed() ? 0 : 3;
        } else if (*schema) {
            auto kb = open_kb(g);
            std::cout << kb->store().read([](const PropertyGraph&, const DataModelSchema& s) { return to_json(s); }).dump(2)
                      << '\n';
        } else if (*serve) {
            ServiceConfig config = config_path.empty() ? ServiceConfig{} : load_service_config(config_path);
            if (port >= 0) config.port = port;
            if (!config.store_path) config.store_path = g.store;
            auto service = ChatService::from_config(config);
            std::cerr << "listening on " << config.host << ':' << config.port << '\n';
            if (!service->listen(config.host, config.port)) {
                std::cerr << "error: cannot listen on " << config.host << ':' << config.port << '\n';
                return 1;
            }
        } else if (*ev) {
            const auto table = eval::load_ratings_file(ratings);
            const auto d = eval::dimension_from_string(dimension);
            const auto summary = eval::fit(table, d, {}, {samples, burnin, seed});
            if (as_json) {
                json out = eval::to_json(summary);
                if (adjusted) out["adjusted"] = eval::to_json(eval::adjusted_scores(table, d, summary));
                std::cout << out.dump(2) << '\n';
            } else {
                std::cout << eval::format_summary(summary);
                if (adjusted) {
                    const auto adj = eval::adjusted_scores(table, d, summary);
                    std::cout << "\ndimension effect: " << adj.dimension_effect << '\n';
                    for (const auto& s : adj.scores)
                        std::cout << s.rater_id << '\t' << s.prompt_id << '\t' << s.raw << '\t' << s.corrected << '\n';
                }
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        for (const auto& d : e.details()) std::cerr << "  " << d << '\n';
        return 1;
    }
    return 0;
}
