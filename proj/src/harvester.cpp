#include "fairkg/harvester.hpp"

#include <algorithm>
#include <set>

#include "fairkg/error.hpp"
#include "fairkg/report.hpp"
#include "fairkg/text.hpp"
#include "http_util.hpp"

namespace fairkg {

using ojson = nlohmann::ordered_json;

// ---- canonical record ----------------------------------------------------------

nlohmann::json to_json(const MetadataRecord& r) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : r.files) {
        files.push_back({{"path", f.path},
                         {"size", f.size},
                         {"content_type", f.content_type},
                         {"access_url", f.access_url},
                         {"checksum", f.checksum ? nlohmann::json(*f.checksum) : nlohmann::json(nullptr)}});
    }
    nlohmann::json kv = nlohmann::json::array();
    for (const auto& [k, v] : r.kv_fields) kv.push_back({k, v});
    return {{"doi", r.doi},
            {"title", r.title},
            {"alternative_title", r.alternative_title},
            {"description", r.description},
            {"authors", r.authors},
            {"subjects", r.subjects},
            {"license", r.license ? nlohmann::json(*r.license) : nlohmann::json(nullptr)},
            {"publication_date", r.publication_date},
            {"repository_url", r.repository_url},
            {"files", files},
            {"kv_fields", kv}};
}

MetadataRecord record_from_json(const nlohmann::json& j) {
    MetadataRecord r;
    r.doi = j.at("doi").get<std::string>();
    r.title = j.at("title").get<std::string>();
    r.alternative_title = j.value("alternative_title", "");
    r.description = j.value("description", "");
    r.authors = j.value("authors", std::vector<std::string>{});
    r.subjects = j.value("subjects", std::vector<std::string>{});
    if (j.contains("license") && j["license"].is_string()) r.license = j["license"].get<std::string>();
    r.publication_date = j.value("publication_date", "");
    r.repository_url = j.value("repository_url", "");
    for (const auto& f : j.value("files", nlohmann::json::array())) {
        FileEntry e;
        e.path = sanitize_relative_path(f.at("path").get<std::string>());
        e.size = f.value("size", std::int64_t{0});
        e.content_type = f.value("content_type", "");
        e.access_url = f.value("access_url", "");
        if (f.contains("checksum") && f["checksum"].is_string()) e.checksum = f["checksum"].get<std::string>();
        r.files.push_back(std::move(e));
    }
    for (const auto& kv : j.value("kv_fields", nlohmann::json::array()))
        r.kv_fields.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    return r;
}

std::string sanitize_relative_path(std::string_view path) {
    std::string p(path);
    std::replace(p.begin(), p.end(), '\\', '/');
    if (p.empty() || p.front() == '/')
        throw Error(ErrorCode::InvalidArgument, "file path must be relative: " + std::string(path));
    std::vector<std::string> parts;
    for (auto& seg : text::split(p, '/')) {
        if (seg.empty() || seg == ".") continue;
        if (seg == "..") throw Error(ErrorCode::InvalidArgument, "file path escapes the dataset: " + std::string(path));
        parts.push_back(std::move(seg));
    }
    if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "empty file path");
    return text::join(parts, "/");
}

// ---- proposals ------------------------------------------------------------------

UpsertSummary& UpsertSummary::operator+=(const UpsertSummary& o) {
    nodes_created += o.nodes_created;
    nodes_reused += o.nodes_reused;
    edges_created += o.edges_created;
    edges_reused += o.edges_reused;
    return *this;
}

nlohmann::json to_json(const UpsertSummary& s) {
    return {{"nodes_created", s.nodes_created},
            {"nodes_reused", s.nodes_reused},
            {"edges_created", s.edges_created},
            {"edges_reused", s.edges_reused}};
}

bool is_dataset_scoped(std::string_view label) {
    return label == "DataFile" || label == "ExperimentSession" || label == "QualityStatement" ||
           label == "EthicsApproval";
}

UpsertSummary apply_proposals(PropertyGraph& graph, const DataModelSchema& schema, const GraphProposals& proposals) {
    auto violation = [](const std::string& msg, std::vector<std::string> details = {}) {
        return Error(ErrorCode::SchemaViolation, msg, std::move(details));
    };

    // Resolve the label of every node the edges may touch.
    std::map<std::pair<std::string, std::string>, std::string> proposed;
    for (const auto& n : proposals.nodes) {
        const SchemaLabel* label = schema.node_label(n.label);
        if (!label) throw violation("label not permitted by the schema: " + n.label, {n.label});
        NodeRef ref = n.ref();
        if (ref.key.empty()) throw violation(n.label + " proposal has no identifying property");
        Properties merged = n.properties;
        if (const Node* existing = graph.find(n.label, ref.key); existing && !n.replace) {
            for (const auto& [k, v] : existing->properties) merged.try_emplace(k, v);
        }
        for (const auto& p : label->properties) {
            if (p.required && !merged.contains(p.name))
                throw violation(n.label + " proposal lacks required property '" + p.name + "'", {n.label, p.name});
        }
        proposed[{ref.label, ref.key}] = n.label;
    }
    auto resolve = [&](const NodeRef& ref) -> bool {
        return proposed.contains({ref.label, ref.key}) || graph.find(ref.label, ref.key) != nullptr;
    };
    for (const auto& e : proposals.edges) {
        const SchemaLabel* type = schema.edge_type(e.edge_type);
        if (!type) throw violation("edge type not permitted by the schema: " + e.edge_type, {e.edge_type});
        if (!type->source_labels.contains(e.source.label) || !type->target_labels.contains(e.target.label))
            throw violation(e.edge_type + " cannot connect " + e.source.label + " to " + e.target.label,
                            {e.edge_type, e.source.label, e.target.label});
        if (!resolve(e.source) || !resolve(e.target))
            throw violation(e.edge_type + " references a node that does not exist", {e.source.key, e.target.key});
    }

    UpsertSummary summary;
    for (const auto& n : proposals.nodes) {
        auto r = graph.upsert_node(n.label, n.properties, n.replace);
        (r.created ? summary.nodes_created : summary.nodes_reused) += 1;
    }
    for (const auto& e : proposals.edges) {
        const Node* src = graph.find(e.source.label, e.source.key);
        const Node* dst = graph.find(e.target.label, e.target.key);
        bool created = graph.add_edge(e.edge_type, src->id, dst->id);
        (created ? summary.edges_created : summary.edges_reused) += 1;
    }
    return summary;
}

// ---- keyword rules ----------------------------------------------------------------

std::vector<KeywordRule> builtin_rules() {
    using VS = ValueSource;
    return {
        {"robot", "Robot", "hasRobot", VS::AfterColon},
        {"robot model", "RobotModel", "usesModel", VS::AfterColon},
        {"participant", "ParticipantGroup", "involves", VS::AfterColon},
        {"experiment session", "ExperimentSession", "hasSession", VS::AfterColon},
        {"interview", "Instrument", "usesInstrument", VS::AfterColon},
        {"survey", "Instrument", "usesInstrument", VS::AfterColon},
        {"condition", "ExperimentCondition", "hasCondition", VS::AfterColon},
        {"sensor", "Sensor", "hasSensor", VS::AfterColon},
        {"location", "ExperimentLocation", "conductedAt", VS::AfterColon},
        {"method", "ResearchMethod", "usesMethod", VS::AfterColon},
        {"control", "ControlMode", "usesControl", VS::AfterColon},
        {"publication citation", "Publication", "describedBy", VS::WholeField},
    };
}

void validate_rules(const std::vector<KeywordRule>& rules, const DataModelSchema& schema) {
    for (const auto& r : rules) {
        if (text::key_words(r.pattern).empty())
            throw Error(ErrorCode::SchemaViolation, "keyword rule with empty pattern");
        if (!schema.node_label(r.target_label))
            throw Error(ErrorCode::SchemaViolation, "rule '" + r.pattern + "' targets unknown label " + r.target_label,
                        {r.target_label});
        const SchemaLabel* type = schema.edge_type(r.edge_type);
        if (!type)
            throw Error(ErrorCode::SchemaViolation, "rule '" + r.pattern + "' uses unknown edge type " + r.edge_type,
                        {r.edge_type});
        if (!type->source_labels.contains(std::string(kDatasetLabel)) || !type->target_labels.contains(r.target_label))
            throw Error(ErrorCode::SchemaViolation,
                        "edge type " + r.edge_type + " cannot connect Dataset to " + r.target_label,
                        {r.edge_type, r.target_label});
    }
}

std::vector<KeywordRule> rules_from_json(const nlohmann::json& doc) {
    std::vector<KeywordRule> rules;
    for (const auto& j : doc) {
        KeywordRule r;
        r.pattern = j.at("pattern").get<std::string>();
        r.target_label = j.at("target_label").get<std::string>();
        r.edge_type = j.at("edge_type").get<std::string>();
        std::string vs = j.value("value_source", "after_colon");
        if (vs == "after_colon") r.value_source = ValueSource::AfterColon;
        else if (vs == "whole_field") r.value_source = ValueSource::WholeField;
        else throw Error(ErrorCode::InvalidArgument, "unknown value_source: " + vs);
        rules.push_back(std::move(r));
    }
    return rules;
}

// ---- fetching -------------------------------------------------------------------------

bool is_well_formed_doi(std::string_view doi) {
    std::string_view rest = doi;
    if (text::starts_with_icase(rest, "doi:")) rest.remove_prefix(4);
    if (rest.substr(0, 3) != "10.") return false;
    auto slash = rest.find('/');
    return slash != std::string_view::npos && slash > 3 && slash + 1 < rest.size();
}

std::string fetch_record(std::string_view repo_base, std::string_view doi) {
    if (!is_well_formed_doi(doi))
        throw Error(ErrorCode::InvalidIdentifier, "malformed DOI: " + std::string(doi), {std::string(doi)});
    auto target = detail::parse_http_url(repo_base);
    auto cli = detail::make_client(target);
    httplib::Params params{{"exporter", "ddi"}, {"persistentId", std::string(doi)}};
    auto res = cli.Get(target.base_path + "/api/datasets/export", params, httplib::Headers{});
    if (!res)
        throw Error(ErrorCode::NetworkError,
                    "cannot reach " + std::string(repo_base) + ": " + httplib::to_string(res.error()));
    if (res->status == 404)
        throw Error(ErrorCode::NotFound, "repository has no dataset " + std::string(doi), {std::string(doi)});
    if (res->status >= 500)
        throw Error(ErrorCode::NetworkError, "repository error " + std::to_string(res->status));
    if (res->status != 200)
        throw Error(ErrorCode::MalformedResponse, "unexpected status " + std::to_string(res->status));
    if (!nlohmann::json::accept(res->body))
        throw Error(ErrorCode::MalformedResponse, "repository returned a non-JSON body");
    return res->body;
}

// ---- DDI parsing --------------------------------------------------------------------

namespace {

void flatten_field(const ojson& field, std::vector<KvField>& out);

void flatten_value(const std::string& key, const ojson& value, std::vector<KvField>& out) {
    if (value.is_string()) {
        out.emplace_back(key, value.get<std::string>());
    } else if (value.is_number() || value.is_boolean()) {
        out.emplace_back(key, value.dump());
    } else if (value.is_array()) {
        for (const auto& v : value) flatten_value(key, v, out);
    } else if (value.is_object()) {
        // compound value: subfield name -> field object
        for (const auto& [sub, subfield] : value.items()) {
            if (subfield.is_object() && subfield.contains("value")) {
                flatten_field(subfield.contains("typeName") ? subfield : ojson{{"typeName", sub}, {"value", subfield["value"]}},
                              out);
            } else {
                flatten_value(sub, subfield, out);
            }
        }
    }
}

void flatten_field(const ojson& field, std::vector<KvField>& out) {
    if (!field.is_object() || !field.contains("value")) return;
    flatten_value(field.value("typeName", std::string("field")), field["value"], out);
}

std::string doi_from_document(const ojson& doc) {
    for (const char* key : {"persistentId", "datasetPersistentId"}) {
        if (doc.contains(key) && doc[key].is_string()) return doc[key].get<std::string>();
    }
    if (doc.contains("datasetVersion") && doc["datasetVersion"].contains("datasetPersistentId"))
        return doc["datasetVersion"]["datasetPersistentId"].get<std::string>();
    if (doc.contains("authority") && doc.contains("identifier")) {
        std::string protocol = doc.value("protocol", std::string("doi"));
        return protocol + ":" + doc["authority"].get<std::string>() + "/" + doc["identifier"].get<std::string>();
    }
    if (doc.contains("persistentUrl") && doc["persistentUrl"].is_string()) {
        std::string url = doc["persistentUrl"].get<std::string>();
        auto at = url.find("doi.org/");
        if (at != std::string::npos) return "doi:" + url.substr(at + 8);
    }
    return {};
}

std::string json_string(const ojson& obj, const char* key) {
    if (obj.contains(key) && obj[key].is_string()) return obj[key].get<std::string>();
    return {};
}

} // namespace

MetadataRecord parse_ddi(std::string_view json_text, std::string_view repo_base) {
    ojson doc;
    try {
        doc = ojson::parse(json_text);
    } catch (const ojson::parse_error& e) {
        throw Error(ErrorCode::MalformedResponse, std::string("metadata export is not JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::MalformedResponse, "metadata export must be a JSON object");

    MetadataRecord r;
    r.doi = doi_from_document(doc);
    if (r.doi.empty()) throw Error(ErrorCode::MissingIdentifier, "metadata export has no persistent identifier");

    const ojson version = doc.contains("datasetVersion") ? doc["datasetVersion"] : ojson::object();
    if (version.contains("metadataBlocks")) {
        for (const auto& [block_name, block] : version["metadataBlocks"].items()) {
            for (const auto& field : block.value("fields", ojson::array())) flatten_field(field, r.kv_fields);
        }
    }

    for (const auto& [k, v] : r.kv_fields) {
        if (k == "title" && r.title.empty()) r.title = v;
        else if (k == "alternativeTitle" && r.alternative_title.empty()) r.alternative_title = v;
        else if (k == "authorName") r.authors.push_back(v);
        else if (k == "dsDescriptionValue") r.description += (r.description.empty() ? "" : "\n") + v;
        else if (k == "subject") r.subjects.push_back(v);
    }
    if (r.title.empty()) throw Error(ErrorCode::MissingTitle, "metadata export for " + r.doi + " has no title");

    if (version.contains("license")) {
        const auto& lic = version["license"];
        if (lic.is_string()) r.license = lic.get<std::string>();
        else if (lic.is_object() && lic.contains("name")) r.license = lic["name"].get<std::string>();
    }
    r.publication_date = json_string(doc, "publicationDate");
    if (r.publication_date.empty()) r.publication_date = json_string(version, "releaseTime").substr(0, 10);
    r.repository_url = json_string(doc, "persistentUrl");
    if (r.repository_url.empty() && !repo_base.empty())
        r.repository_url = std::string(repo_base) + "/dataset.xhtml?persistentId=" + r.doi;

    for (const auto& f : version.value("files", ojson::array())) {
        FileEntry e;
        std::string dir = json_string(f, "directoryLabel");
        std::string label = json_string(f, "label");
        const ojson df = f.contains("dataFile") ? f["dataFile"] : ojson::object();
        if (label.empty()) label = json_string(df, "filename");
        try {
            e.path = sanitize_relative_path(dir.empty() ? label : dir + "/" + label);
        } catch (const Error& err) {
            throw Error(ErrorCode::MalformedResponse, err.what());
        }
        e.size = df.value("filesize", std::int64_t{0});
        e.content_type = json_string(df, "contentType");
        e.access_url = json_string(df, "accessUrl");
        if (e.access_url.empty() && df.contains("id") && !repo_base.empty())
            e.access_url = std::string(repo_base) + "/api/access/datafile/" + df["id"].dump();
        if (df.contains("checksum") && df["checksum"].is_object()) {
            e.checksum = text::to_lower(df["checksum"].value("type", std::string("md5"))) + ":" +
                         df["checksum"].value("value", std::string());
        } else if (df.contains("md5")) {
            e.checksum = "md5:" + json_string(df, "md5");
        }
        r.files.push_back(std::move(e));
    }
    return r;
}

// ---- entity extraction ------------------------------------------------------------------

namespace {

std::vector<std::string> stemmed_words(std::string_view s) {
    auto words = text::key_words(s);
    for (auto& w : words) w = text::stem(w);
    return words;
}

struct RuleHit {
    int rule = -1;
    std::size_t end = 0;
    std::size_t length = 0;
};

RuleHit best_rule(const std::vector<std::vector<std::string>>& patterns, std::string_view key) {
    auto words = stemmed_words(key);
    RuleHit best;
    for (std::size_t r = 0; r < patterns.size(); ++r) {
        const auto& p = patterns[r];
        if (p.empty() || p.size() > words.size()) continue;
        for (std::size_t start = 0; start + p.size() <= words.size(); ++start) {
            if (!std::equal(p.begin(), p.end(), words.begin() + static_cast<std::ptrdiff_t>(start))) continue;
            std::size_t end = start + p.size();
            bool better = best.rule < 0 || end > best.end || (end == best.end && p.size() > best.length);
            if (better) best = {static_cast<int>(r), end, p.size()};
        }
    }
    return best;
}

std::vector<std::vector<std::string>> compile_patterns(const std::vector<KeywordRule>& rules) {
    std::vector<std::vector<std::string>> out;
    for (const auto& r : rules) out.push_back(stemmed_words(r.pattern));
    return out;
}

constexpr std::size_t kMaxInlineLabelWords = 4;

struct FieldMatch {
    int rule = -1;
    std::string value; // raw value the name is drawn from
    bool via_value_prefix = false;
};

FieldMatch match_field(const std::vector<std::vector<std::string>>& patterns, const KvField& field) {
    const auto& [key, value] = field;
    RuleHit hit = best_rule(patterns, key);
    if (hit.rule >= 0) return {hit.rule, value, false};
    auto colon = value.find(':');
    if (colon == std::string::npos) return {};
    std::string prefix = value.substr(0, colon);
    if (text::split_whitespace(prefix).size() > kMaxInlineLabelWords) return {};
    hit = best_rule(patterns, prefix);
    if (hit.rule < 0) return {};
    return {hit.rule, value, true};
}

std::string name_from(const KeywordRule& rule, const FieldMatch& m) {
    if (rule.value_source == ValueSource::AfterColon && m.via_value_prefix)
        return text::trim(std::string_view(m.value).substr(m.value.find(':') + 1));
    return text::trim(m.value);
}

} // namespace

int match_rule(const std::vector<KeywordRule>& rules, std::string_view key) {
    return best_rule(compile_patterns(rules), key).rule;
}

Extraction extract_entities(const MetadataRecord& record, const DataReport* report,
                            const std::vector<KeywordRule>& rules) {
    const auto patterns = compile_patterns(rules);
    Extraction out;
    std::set<std::pair<std::string, std::string>> seen;

    auto emit = [&](const FieldMatch& m) {
        const KeywordRule& rule = rules[static_cast<std::size_t>(m.rule)];
        std::string raw = name_from(rule, m);
        for (auto& part : text::split(raw, ';')) {
            std::string name = text::collapse_whitespace(part);
            if (name.empty()) continue;
            if (!seen.insert({rule.target_label, text::normalize_name(name)}).second) continue;
            EntityProposal p{rule.target_label, {{"name", name}}, rule.edge_type};
            if (is_dataset_scoped(rule.target_label)) p.properties["dataset"] = record.doi;
            out.entities.push_back(std::move(p));
        }
    };

    for (const auto& field : record.kv_fields) {
        FieldMatch m = match_field(patterns, field);
        if (m.rule < 0) {
            out.unmapped_fields.push_back(field);
            continue;
        }
        ++out.matched_fields;
        emit(m);
    }

    if (report) {
        for (const auto& section : report->sections) {
            if (section.provisional || section.name == "FileOrganization") continue;
            for (const auto& field : section.fields) {
                FieldMatch m = match_field(patterns, field);
                if (m.rule >= 0) emit(m);
            }
        }
    }
    return out;
}

GraphProposals dataset_proposals(const MetadataRecord& record, const Extraction& extraction) {
    GraphProposals gp;
    Properties ds{{"doi", record.doi}, {"title", record.title}, {"name", record.title}};
    if (!record.alternative_title.empty()) ds["alternative_title"] = record.alternative_title;
    if (!record.description.empty()) ds["description"] = record.description;
    if (!record.authors.empty()) ds["authors"] = text::join(record.authors, "; ");
    if (!record.subjects.empty()) ds["subjects"] = text::join(record.subjects, "; ");
    if (record.license) ds["license"] = *record.license;
    if (!record.publication_date.empty()) ds["publication_date"] = record.publication_date;
    if (!record.repository_url.empty()) ds["repository_url"] = record.repository_url;
    nlohmann::json unmapped = nlohmann::json::array();
    for (const auto& [k, v] : extraction.unmapped_fields) unmapped.push_back({k, v});
    ds["unmapped_fields"] = unmapped.dump();
    gp.nodes.push_back({std::string(kDatasetLabel), std::move(ds), true});
    const NodeRef dataset = NodeRef::dataset(record.doi);

    for (const auto& f : record.files) {
        Properties props{{"path", f.path},
                         {"name", f.path},
                         {"dataset", record.doi},
                         {"size", f.size},
                         {"content_type", f.content_type},
                         {"access_url", f.access_url}};
        if (f.checksum) props["checksum"] = *f.checksum;
        NodeProposal n{std::string(kDataFileLabel), std::move(props), false};
        gp.edges.push_back({"containsFile", dataset, n.ref()});
        gp.nodes.push_back(std::move(n));
    }
    for (const auto& e : extraction.entities) {
        NodeProposal n{e.label, e.properties, false};
        gp.edges.push_back({e.edge_type, dataset, n.ref()});
        gp.nodes.push_back(std::move(n));
    }
    return gp;
}

UpsertSummary upsert_dataset(PropertyGraph& graph, const DataModelSchema& schema, const MetadataRecord& record,
                             const Extraction& extraction) {
    GraphProposals gp = dataset_proposals(record, extraction);
    // Re-harvesting must not forget that a report was ingested.
    if (const Node* existing = graph.find_dataset(record.doi)) {
        auto it = existing->properties.find("report_ingested");
        if (it != existing->properties.end()) gp.nodes.front().properties.insert_or_assign("report_ingested", it->second);
    }
    return apply_proposals(graph, schema, gp);
}

} // namespace fairkg
