#include "fairkg/service.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <sstream>

#include <httplib.h>

#include "fairkg/error.hpp"
#include "fairkg/intent.hpp"
#include "fairkg/providers.hpp"
#include "fairkg/text.hpp"

namespace fairkg {

using nlohmann::json;

// ---- config ----------------------------------------------------------------

ServiceConfig service_config_from_json(const json& doc) {
    ServiceConfig c;
    try {
        if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
        if (doc.contains("store_path") && !doc["store_path"].is_null()) c.store_path = doc["store_path"].get<std::string>();
        c.host = doc.value("host", c.host);
        c.port = doc.value("port", c.port);
        if (doc.contains("embedding_endpoint") && !doc["embedding_endpoint"].is_null())
            c.embedding_endpoint = doc["embedding_endpoint"].get<std::string>();
        if (doc.contains("completion_endpoint") && !doc["completion_endpoint"].is_null())
            c.completion_endpoint = doc["completion_endpoint"].get<std::string>();
        c.embedding_dimension = doc.value("embedding_dimension", c.embedding_dimension);
        c.top_k = doc.value("top_k", c.top_k);
        c.chunk_tokens = doc.value("chunk_tokens", c.chunk_tokens);
        c.chunk_overlap = doc.value("chunk_overlap", c.chunk_overlap);
        if (doc.contains("keyword_rules")) c.keyword_rules = rules_from_json(doc["keyword_rules"]);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad config: ") + e.what());
    }
    if (c.embedding_dimension == 0 || c.top_k == 0)
        throw Error(ErrorCode::InvalidArgument, "embedding_dimension and top_k must be positive");
    return c;
}

ServiceConfig load_service_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read config " + path, {path});
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "config is not valid JSON: " + std::string(e.what()), {path});
    }
    return service_config_from_json(doc);
}

// ---- errors ------------------------------------------------------------------

int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::DatasetNotFound:
    case ErrorCode::SessionNotFound:
    case ErrorCode::InvalidIdentifier: return 404;
    case ErrorCode::SchemaViolation:
    case ErrorCode::DuplicateLabel: return 409;
    case ErrorCode::NetworkError:
    case ErrorCode::MalformedResponse:
    case ErrorCode::ProviderError: return 502;
    case ErrorCode::AmbiguousComparison:
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownLabel:
    case ErrorCode::EmptyDocument:
    case ErrorCode::MalformedPattern:
    case ErrorCode::DuplicatePriority:
    case ErrorCode::MissingIdentifier:
    case ErrorCode::MissingTitle:
    case ErrorCode::EmptyIndex: return 422;
    default: return 500;
    }
}

json error_body(const Error& e) {
    json details{{"values", e.details()}};
    if (e.code() == ErrorCode::AmbiguousComparison)
        details["guidance"] = "Name each dataset you want to compare, for example by its title or DOI.";
    if (e.code() == ErrorCode::DatasetNotFound) details["missing"] = e.details();
    return {{"error_code", std::string(to_string(e.code()))}, {"message", e.what()}, {"details", details}};
}

// ---- service -------------------------------------------------------------------

namespace {

struct Session {
    std::string id;
    std::string created_at;
    mutable std::mutex mutex;
    std::vector<SessionMessage> log;
};

json to_json(const SessionMessage& m) { return {{"role", m.role}, {"text", m.text}, {"sources", m.sources}}; }

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) { send_json(res, http_status(e.code()), error_body(e)); }

json parse_body(const httplib::Request& req) {
    try {
        json j = json::parse(req.body);
        if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("request body is not valid JSON: ") + e.what());
    }
}

std::string required_string(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_string() || text::trim(it->get<std::string>()).empty())
        throw Error(ErrorCode::InvalidArgument, std::string("missing string field '") + key + "'", {key});
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be a string", {key});
    return it->get<std::string>();
}

FileFilters filters_from_query(const httplib::Request& req) {
    FileFilters f;
    for (const auto& [k, v] : req.params)
        if (k != "format") f[k] = v;
    return f;
}

std::string random_session_id() {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    std::ostringstream out;
    out << std::hex;
    for (int i = 0; i < 2; ++i) {
        out.width(16);
        out.fill('0');
        out << rng();
    }
    return out.str();
}

} // namespace

struct ChatService::Impl {
    std::shared_ptr<CompletionProvider> completer;
    std::size_t top_k;
    httplib::Server server;
    mutable std::shared_mutex sessions_mutex;
    std::map<std::string, std::shared_ptr<Session>> sessions;

    std::shared_ptr<Session> session(const std::string& id) const {
        std::shared_lock lock(sessions_mutex);
        auto it = sessions.find(id);
        if (it == sessions.end()) throw Error(ErrorCode::SessionNotFound, "no session " + id, {id});
        return it->second;
    }
};

ChatService::ChatService(std::shared_ptr<KnowledgeBase> kb, std::shared_ptr<CompletionProvider> completer,
                         std::size_t top_k)
    : kb_(std::move(kb)), impl_(std::make_unique<Impl>()) {
    if (!kb_) throw Error(ErrorCode::InvalidArgument, "a knowledge base is required");
    impl_->completer = std::move(completer);
    impl_->top_k = top_k == 0 ? 5 : top_k;
    auto& srv = impl_->server;
    KnowledgeBase& kb_ref = *kb_;

    // Wraps a handler so library errors become {error_code, message, details}.
    auto guarded = [](auto fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const Error& e) {
                send_error(res, e);
            } catch (const std::exception& e) {
                send_json(res, 500, {{"error_code", "InternalError"}, {"message", e.what()}, {"details", json::object()}});
            }
        };
    };

    srv.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });

    srv.Post("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 201, {{"session_id", create_session()}});
    }));

    srv.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        auto s = impl_->session(id);
        json log = json::array();
        std::lock_guard lock(s->mutex);
        for (const auto& m : s->log) log.push_back(to_json(m));
        send_json(res, 200, {{"session_id", s->id}, {"created_at", s->created_at}, {"messages", log}});
    }));

    srv.Post(R"(/sessions/([^/]+)/query)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        impl_->session(id); // 404 before body validation
        const json body = parse_body(req);
        const std::string text = required_string(body, "text");
        const AnswerMode mode = answer_mode_from_string(optional_string(body, "mode").value_or("grounded"));
        send_json(res, 200, to_json(query(id, text, mode)));
    }));

    srv.Post("/harvest", guarded([&kb_ref](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        const std::string repo = required_string(body, "repo");
        const std::string doi = required_string(body, "doi");
        const UpsertSummary s = kb_ref.harvest(repo, doi, optional_string(body, "report"));
        send_json(res, s.created() > 0 ? 201 : 200, to_json(s));
    }));

    srv.Post("/ingest-report", guarded([&kb_ref](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        const UpsertSummary s = kb_ref.ingest_report(required_string(body, "doi"), required_string(body, "report"));
        send_json(res, s.created() > 0 ? 201 : 200, to_json(s));
    }));

    srv.Post("/documents", guarded([&kb_ref](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        const SourceKind kind = source_kind_from_string(optional_string(body, "kind").value_or("Publication"));
        const std::size_t n = kb_ref.add_document(required_string(body, "doi"), kind, required_string(body, "text"));
        send_json(res, 201, {{"chunks", n}});
    }));

    srv.Get("/datasets", guarded([&kb_ref](const httplib::Request&, httplib::Response& res) {
        json list = kb_ref.store().read([](const PropertyGraph& g, const DataModelSchema&) {
            std::vector<const Node*> ds;
            for (const Node* n : g.nodes_with_label(kDatasetLabel)) ds.push_back(n);
            std::sort(ds.begin(), ds.end(), [](const Node* a, const Node* b) {
                return string_property(a->properties, "doi") < string_property(b->properties, "doi");
            });
            json out = json::array();
            for (const Node* n : ds)
                out.push_back({{"doi", string_property(n->properties, "doi")},
                               {"title", string_property(n->properties, "title")},
                               {"alternative_title", string_property(n->properties, "alternative_title")}});
            return out;
        });
        send_json(res, 200, list);
    }));

    // DOIs contain '/', so the suffixed routes must be registered first.
    srv.Get(R"(/datasets/(.+)/files)", guarded([&kb_ref](const httplib::Request& req, httplib::Response& res) {
        const std::string doi = req.matches[1];
        const FileFilters filters = filters_from_query(req);
        json files = kb_ref.store().read([&](const PropertyGraph& g, const DataModelSchema&) {
            json out = json::array();
            for (const Node& n : locate_files(g, doi, filters)) out.push_back(to_json(n));
            return out;
        });
        send_json(res, 200, files);
    }));

    srv.Get(R"(/datasets/(.+)/manifest)", guarded([&kb_ref](const httplib::Request& req, httplib::Response& res) {
        const std::string doi = req.matches[1];
        const FileFilters filters = filters_from_query(req);
        const DownloadManifest m = kb_ref.store().read([&](const PropertyGraph& g, const DataModelSchema&) {
            return build_manifest(g, doi, filters, utc_timestamp());
        });
        const std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
        if (format == "sh") {
            res.status = 200;
            res.set_content(render_script(m), "text/x-shellscript");
        } else if (format == "json") {
            send_json(res, 200, to_json(m));
        } else {
            throw Error(ErrorCode::InvalidArgument, "format must be json or sh", {format});
        }
    }));

    srv.Get(R"(/datasets/(.+))", guarded([&kb_ref](const httplib::Request& req, httplib::Response& res) {
        const std::string doi = req.matches[1];
        json profile = kb_ref.store().read(
            [&](const PropertyGraph& g, const DataModelSchema&) { return to_json(dataset_profile(g, doi)); });
        send_json(res, 200, profile);
    }));

    srv.Post("/compare", guarded([&kb_ref](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        std::vector<std::string> dois;
        std::optional<std::vector<std::string>> facets;
        try {
            dois = body.at("dois").get<std::vector<std::string>>();
            if (body.contains("facets") && !body["facets"].is_null())
                facets = body["facets"].get<std::vector<std::string>>();
        } catch (const json::exception&) {
            throw Error(ErrorCode::InvalidArgument, "'dois' (and 'facets' when given) must be string arrays");
        }
        json table = kb_ref.store().read([&](const PropertyGraph& g, const DataModelSchema& s) {
            return to_json(compare(g, s, dois, facets));
        });
        send_json(res, 200, table);
    }));

    srv.Get(R"(/audit/(.+))", guarded([&kb_ref](const httplib::Request& req, httplib::Response& res) {
        const std::string doi = req.matches[1];
        json audit = kb_ref.store().read(
            [&](const PropertyGraph& g, const DataModelSchema& s) { return to_json(audit_dataset(g, s, doi)); });
        send_json(res, 200, audit);
    }));

    srv.Get("/schema", guarded([&kb_ref](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, kb_ref.store().read([](const PropertyGraph&, const DataModelSchema& s) { return to_json(s); }));
    }));
}

ChatService::~ChatService() { stop(); }

std::unique_ptr<ChatService> ChatService::from_config(const ServiceConfig& config) {
    std::shared_ptr<EmbeddingProvider> embedder;
    if (config.embedding_endpoint)
        embedder = std::make_shared<HttpEmbeddingProvider>(*config.embedding_endpoint, config.embedding_dimension);
    else
        embedder = std::make_shared<HashingEmbeddingProvider>(config.embedding_dimension);
    std::shared_ptr<CompletionProvider> completer;
    if (config.completion_endpoint) completer = std::make_shared<HttpCompletionProvider>(*config.completion_endpoint);

    KnowledgeBaseOptions options;
    options.extra_rules = config.keyword_rules;
    options.chunking = {config.chunk_tokens, config.chunk_overlap};
    if (config.store_path) options.store_path = *config.store_path;
    std::shared_ptr<KnowledgeBase> kb = KnowledgeBase::open(embedder, options);
    return std::make_unique<ChatService>(std::move(kb), std::move(completer), config.top_k);
}

std::string ChatService::create_session() {
    auto s = std::make_shared<Session>();
    s->created_at = utc_timestamp();
    std::unique_lock lock(impl_->sessions_mutex);
    do {
        s->id = random_session_id();
    } while (impl_->sessions.count(s->id));
    impl_->sessions.emplace(s->id, s);
    return s->id;
}

GroundedAnswer ChatService::query(const std::string& session_id, const std::string& text, AnswerMode mode) {
    auto s = impl_->session(session_id);
    std::lock_guard lock(s->mutex);
    s->log.push_back({"user", text, json::array()});
    GroundedAnswer a;
    try {
        a = kb_->ask(text, mode, impl_->completer.get(), impl_->top_k);
    } catch (const Error& e) {
        s->log.push_back({"system", std::string("error: ") + e.what(), json::array()});
        throw;
    }
    json sources = json::array();
    for (const auto& src : a.sources) sources.push_back(to_json(src));
    s->log.push_back({"system", a.text, sources});
    return a;
}

std::vector<SessionMessage> ChatService::session_log(const std::string& session_id) const {
    auto s = impl_->session(session_id);
    std::lock_guard lock(s->mutex);
    return s->log;
}

bool ChatService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int ChatService::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool ChatService::listen_after_bind() { return impl_->server.listen_after_bind(); }

void ChatService::wait_until_ready() const { impl_->server.wait_until_ready(); }

void ChatService::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

} // namespace fairkg
