#include "fairkg/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "fairkg/error.hpp"
#include "fairkg/text.hpp"

namespace fairkg {

nlohmann::json scalar_to_json(const Scalar& value) {
    return std::visit([](const auto& v) { return nlohmann::json(v); }, value);
}

Scalar scalar_from_json(const nlohmann::json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_boolean()) return value.get<bool>();
    if (value.is_number_integer()) return value.get<std::int64_t>();
    if (value.is_number_float()) return value.get<double>();
    throw Error(ErrorCode::InvalidArgument, "property values must be scalars");
}

std::string scalar_to_string(const Scalar& value) {
    if (const auto* s = std::get_if<std::string>(&value)) return *s;
    return scalar_to_json(value).dump();
}

std::string string_property(const Properties& props, std::string_view key) {
    auto it = props.find(key);
    if (it == props.end()) return {};
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    return {};
}

nlohmann::json to_json(const Node& node) {
    nlohmann::json props = nlohmann::json::object();
    for (const auto& [k, v] : node.properties) props[k] = scalar_to_json(v);
    return {{"id", node.id}, {"label", node.label}, {"properties", props}};
}

// ---- PropertyGraph ----------------------------------------------------------

std::string PropertyGraph::identity_key(std::string_view label, const Properties& props) {
    if (label == kDatasetLabel) return string_property(props, "doi");
    std::string name = string_property(props, "name");
    if (name.empty()) name = string_property(props, "path");
    std::string scope = string_property(props, "dataset");
    if (!scope.empty()) return scope + "/" + text::normalize_name(name);
    return text::normalize_name(name);
}

std::string PropertyGraph::make_node_id(std::string_view label, std::string_view key) {
    return std::string(label) + ":" + std::string(key);
}

std::string PropertyGraph::make_edge_id(std::string_view type, std::string_view source, std::string_view target) {
    return std::string(type) + "|" + std::string(source) + "|" + std::string(target);
}

const Node* PropertyGraph::node(std::string_view id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

const Node* PropertyGraph::find(std::string_view label, std::string_view key) const {
    auto it = key_index_.find(std::pair<std::string, std::string>(std::string(label), std::string(key)));
    if (it == key_index_.end() && label != kDatasetLabel)
        it = key_index_.find(std::pair<std::string, std::string>(std::string(label), text::normalize_name(key)));
    return it == key_index_.end() ? nullptr : node(it->second);
}

PropertyGraph::UpsertResult PropertyGraph::upsert_node(std::string label, Properties props, bool replace) {
    std::string key = identity_key(label, props);
    if (key.empty()) throw Error(ErrorCode::InvalidArgument, label + " node needs an identifying property");
    std::string id = make_node_id(label, key);
    auto it = nodes_.find(id);
    if (it != nodes_.end()) {
        if (replace) {
            it->second.properties = std::move(props);
            return {id, false};
        }
        for (auto& [k, v] : props) {
            if (k == "name" && it->second.properties.contains("name")) continue;
            it->second.properties.insert_or_assign(k, std::move(v));
        }
        return {id, false};
    }
    Node n{id, label, std::move(props)};
    label_index_[label].insert(id);
    key_index_.emplace(std::pair{label, key}, id);
    nodes_.emplace(id, std::move(n));
    return {id, true};
}

bool PropertyGraph::add_edge(std::string_view type, std::string_view source, std::string_view target) {
    if (!nodes_.contains(source) || !nodes_.contains(target))
        throw Error(ErrorCode::InvalidArgument,
                    "edge " + std::string(type) + " references a missing node", {std::string(source), std::string(target)});
    EdgeKey key{std::string(type), std::string(source), std::string(target)};
    if (edges_.contains(key)) return false;
    edges_.emplace(key, Edge{make_edge_id(type, source, target), std::string(type), std::string(source),
                             std::string(target)});
    out_index_[std::string(source)].insert(key);
    in_index_[std::string(target)].insert(key);
    return true;
}

bool PropertyGraph::has_edge(std::string_view type, std::string_view source, std::string_view target) const {
    return edges_.contains(EdgeKey{std::string(type), std::string(source), std::string(target)});
}

bool PropertyGraph::remove_edge(std::string_view type, std::string_view source, std::string_view target) {
    EdgeKey key{std::string(type), std::string(source), std::string(target)};
    if (edges_.erase(key) == 0) return false;
    auto drop = [&](auto& index, const std::string& id) {
        auto it = index.find(id);
        if (it == index.end()) return;
        it->second.erase(key);
        if (it->second.empty()) index.erase(it);
    };
    drop(out_index_, std::get<1>(key));
    drop(in_index_, std::get<2>(key));
    return true;
}

bool PropertyGraph::remove_node(std::string_view id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) return false;
    std::vector<EdgeKey> incident;
    for (const auto* index : {&out_index_, &in_index_}) {
        auto e = index->find(id);
        if (e != index->end()) incident.insert(incident.end(), e->second.begin(), e->second.end());
    }
    for (const auto& [t, s, d] : incident) remove_edge(t, s, d);

    const Node& n = it->second;
    auto lbl = label_index_.find(n.label);
    if (lbl != label_index_.end()) {
        lbl->second.erase(n.id);
        if (lbl->second.empty()) label_index_.erase(lbl);
    }
    key_index_.erase(std::pair{n.label, identity_key(n.label, n.properties)});
    nodes_.erase(it);
    return true;
}

std::vector<const Node*> PropertyGraph::nodes_with_label(std::string_view label) const {
    std::vector<const Node*> out;
    auto it = label_index_.find(label);
    if (it == label_index_.end()) return out;
    for (const auto& id : it->second) out.push_back(node(id));
    return out;
}

std::vector<const Edge*> PropertyGraph::out_edges(std::string_view id) const {
    std::vector<const Edge*> out;
    auto it = out_index_.find(id);
    if (it == out_index_.end()) return out;
    for (const auto& key : it->second) out.push_back(&edges_.at(key));
    return out;
}

std::vector<const Edge*> PropertyGraph::in_edges(std::string_view id) const {
    std::vector<const Edge*> out;
    auto it = in_index_.find(id);
    if (it == in_index_.end()) return out;
    for (const auto& key : it->second) out.push_back(&edges_.at(key));
    return out;
}

std::vector<std::string> PropertyGraph::audit() const {
    std::vector<std::string> problems;
    std::map<std::string, std::set<std::string>, std::less<>> labels;
    std::map<std::pair<std::string, std::string>, std::string, std::less<>> keys;
    std::map<std::string, std::set<EdgeKey>, std::less<>> outs, ins;
    for (const auto& [id, n] : nodes_) {
        if (n.id != id) problems.push_back("node stored under wrong id: " + id);
        std::string key = identity_key(n.label, n.properties);
        if (make_node_id(n.label, key) != id) problems.push_back("node id does not match identity: " + id);
        labels[n.label].insert(id);
        keys.emplace(std::pair{n.label, key}, id);
    }
    for (const auto& [key, e] : edges_) {
        if (!nodes_.contains(e.source) || !nodes_.contains(e.target)) problems.push_back("dangling edge: " + e.id);
        if (EdgeKey{e.edge_type, e.source, e.target} != key) problems.push_back("edge stored under wrong key: " + e.id);
        outs[e.source].insert(key);
        ins[e.target].insert(key);
    }
    if (labels != label_index_) problems.push_back("label index out of sync");
    if (keys != key_index_) problems.push_back("identity index out of sync");
    if (outs != out_index_) problems.push_back("outgoing edge index out of sync");
    if (ins != in_index_) problems.push_back("incoming edge index out of sync");
    return problems;
}

namespace {

nlohmann::json edge_json(const Edge& e) {
    return {{"id", e.id}, {"type", e.edge_type}, {"source", e.source}, {"target", e.target}};
}

Node node_from_json(const nlohmann::json& j) {
    Node n;
    n.id = j.at("id").get<std::string>();
    n.label = j.at("label").get<std::string>();
    for (const auto& [k, v] : j.at("properties").items()) n.properties.emplace(k, scalar_from_json(v));
    return n;
}

void insert_loaded(PropertyGraph& g, const Node& n) {
    auto r = g.upsert_node(n.label, n.properties);
    if (r.id != n.id || !r.created)
        throw Error(ErrorCode::CorruptStore, "node id does not match its identity: " + n.id);
}

} // namespace

nlohmann::json PropertyGraph::canonical_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [id, n] : nodes_) nodes.push_back(to_json(n));
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [key, e] : edges_) edges.push_back(edge_json(e));
    return {{"nodes", nodes}, {"edges", edges}};
}

PropertyGraph PropertyGraph::from_canonical_json(const nlohmann::json& doc) {
    PropertyGraph g;
    for (const auto& j : doc.at("nodes")) insert_loaded(g, node_from_json(j));
    for (const auto& j : doc.at("edges"))
        g.add_edge(j.at("type").get<std::string>(), j.at("source").get<std::string>(),
                   j.at("target").get<std::string>());
    return g;
}

// ---- queries ------------------------------------------------------------------

namespace {

const Node& require_dataset(const PropertyGraph& graph, std::string_view doi) {
    const Node* ds = graph.find_dataset(doi);
    if (!ds) throw Error(ErrorCode::DatasetNotFound, "dataset not found: " + std::string(doi), {std::string(doi)});
    return *ds;
}

std::string display_name(const Node& n) {
    if (n.label == kDataFileLabel) return string_property(n.properties, "path");
    std::string name = n.name();
    return name.empty() ? n.id : name;
}

std::string doi_of(const Node& n) { return string_property(n.properties, "doi"); }

void sort_by_doi(std::vector<Node>& nodes) {
    std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return doi_of(a) < doi_of(b); });
}

} // namespace

std::vector<Node> find_datasets_by(const PropertyGraph& graph, const DataModelSchema& schema,
                                   std::string_view label, std::string_view name) {
    if (!schema.node_label(label))
        throw Error(ErrorCode::UnknownLabel, "unknown label: " + std::string(label), {std::string(label)});
    std::vector<Node> out;
    const Node* entity = graph.find(label, name);
    if (!entity) return out;
    std::set<std::string> seen;
    auto consider = [&](const std::string& id) {
        const Node* n = graph.node(id);
        if (n && n->label == kDatasetLabel && seen.insert(id).second) out.push_back(*n);
    };
    for (const Edge* e : graph.in_edges(entity->id)) consider(e->source);
    for (const Edge* e : graph.out_edges(entity->id)) consider(e->target);
    sort_by_doi(out);
    return out;
}

DatasetProfile dataset_profile(const PropertyGraph& graph, std::string_view doi) {
    const Node& ds = require_dataset(graph, doi);
    DatasetProfile profile{ds, {}};
    std::map<std::pair<std::string, bool>, std::vector<ProfileEntry>> groups;
    for (const Edge* e : graph.out_edges(ds.id)) {
        const Node& n = *graph.node(e->target);
        groups[{e->edge_type, true}].push_back({n.id, n.label, display_name(n)});
    }
    for (const Edge* e : graph.in_edges(ds.id)) {
        const Node& n = *graph.node(e->source);
        groups[{e->edge_type, false}].push_back({n.id, n.label, display_name(n)});
    }
    for (auto& [key, entries] : groups) {
        std::sort(entries.begin(), entries.end(), [](const ProfileEntry& a, const ProfileEntry& b) {
            return std::tie(a.name, a.node_id) < std::tie(b.name, b.node_id);
        });
        profile.groups.push_back({key.first, key.second, std::move(entries)});
    }
    std::stable_sort(profile.groups.begin(), profile.groups.end(), [](const ProfileGroup& a, const ProfileGroup& b) {
        return std::tie(a.edge_type, b.outgoing) < std::tie(b.edge_type, a.outgoing);
    });
    return profile;
}

nlohmann::json to_json(const DatasetProfile& profile) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : profile.groups) {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : g.entries) entries.push_back({{"id", e.node_id}, {"label", e.label}, {"name", e.name}});
        groups.push_back({{"edge_type", g.edge_type}, {"direction", g.outgoing ? "out" : "in"}, {"entries", entries}});
    }
    return {{"dataset", to_json(profile.dataset)}, {"groups", groups}};
}

ComparisonTable compare(const PropertyGraph& graph, const DataModelSchema& schema,
                        const std::vector<std::string>& dois,
                        const std::optional<std::vector<std::string>>& facets) {
    if (dois.size() < 2) throw Error(ErrorCode::InvalidArgument, "comparison needs at least two datasets");
    std::vector<std::string> missing;
    std::vector<const Node*> datasets;
    for (const auto& doi : dois) {
        const Node* ds = graph.find_dataset(doi);
        if (!ds) missing.push_back(doi);
        datasets.push_back(ds);
    }
    if (!missing.empty())
        throw Error(ErrorCode::DatasetNotFound, "datasets not found: " + text::join(missing, ", "), missing);

    std::vector<std::string> rows;
    if (facets) {
        for (const auto& f : *facets) {
            if (!schema.edge_type(f))
                throw Error(ErrorCode::InvalidArgument, "unknown facet: " + f, {f});
            rows.push_back(f);
        }
    } else {
        for (const auto& [name, _] : schema.edge_types()) rows.push_back(name);
    }

    ComparisonTable table;
    table.dois = dois;
    for (const Node* ds : datasets) table.titles.push_back(string_property(ds->properties, "title"));
    for (const auto& facet : rows) {
        ComparisonRow row{facet, {}, true};
        for (const Node* ds : datasets) {
            std::set<std::string> names;
            std::vector<std::string> frontier{ds->id};
            for (const Edge* e : graph.out_edges(ds->id)) frontier.push_back(e->target);
            for (const auto& id : frontier) {
                for (const Edge* e : graph.out_edges(id)) {
                    if (e->edge_type == facet) names.insert(display_name(*graph.node(e->target)));
                }
            }
            row.cells.emplace_back(names.begin(), names.end());
        }
        for (std::size_t i = 1; i < row.cells.size(); ++i) {
            if (row.cells[i] != row.cells[0]) row.same = false;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

nlohmann::json to_json(const ComparisonTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) rows.push_back({{"facet", r.facet}, {"cells", r.cells}, {"same", r.same}});
    return {{"dois", table.dois}, {"titles", table.titles}, {"rows", rows}};
}

bool filter_value_matches(std::string_view filter, std::string_view value) {
    if (text::is_all_digits(filter) && text::is_all_digits(value))
        return text::strip_leading_zeros(filter) == text::strip_leading_zeros(value);
    return filter == value;
}

std::vector<Node> locate_files(const PropertyGraph& graph, std::string_view doi, const FileFilters& filters) {
    const Node& ds = require_dataset(graph, doi);
    std::vector<Node> out;
    for (const Edge* e : graph.out_edges(ds.id)) {
        if (e->edge_type != "containsFile") continue;
        const Node& f = *graph.node(e->target);
        if (f.label != kDataFileLabel) continue;
        bool ok = std::all_of(filters.begin(), filters.end(), [&](const auto& kv) {
            auto it = f.properties.find(kv.first);
            return it != f.properties.end() && filter_value_matches(kv.second, scalar_to_string(it->second));
        });
        if (ok) out.push_back(f);
    }
    std::sort(out.begin(), out.end(), [](const Node& a, const Node& b) {
        return string_property(a.properties, "path") < string_property(b.properties, "path");
    });
    return out;
}

PropertyGraph dataset_subgraph(const PropertyGraph& graph, std::string_view doi) {
    const Node& ds = require_dataset(graph, doi);
    PropertyGraph sub;
    std::set<std::string> ids{ds.id};
    for (const Edge* e : graph.out_edges(ds.id)) ids.insert(e->target);
    for (const Edge* e : graph.in_edges(ds.id)) ids.insert(e->source);
    for (const auto& id : ids) {
        const Node& n = *graph.node(id);
        sub.upsert_node(n.label, n.properties);
    }
    for (const auto& id : ids) {
        for (const Edge* e : graph.out_edges(id)) {
            if (ids.contains(e->target)) sub.add_edge(e->edge_type, e->source, e->target);
        }
    }
    return sub;
}

// ---- persistence ----------------------------------------------------------------

namespace {

constexpr std::string_view kSnapshotMagic = "FAIRKG-SNAPSHOT 1";

std::string crc_hex(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

[[noreturn]] void corrupt(const std::string& why) { throw Error(ErrorCode::CorruptStore, "corrupt snapshot: " + why); }

} // namespace

void save(const PropertyGraph& graph, const std::filesystem::path& location) {
    std::ostringstream body;
    body << kSnapshotMagic << '\n';
    body << "NODES " << graph.node_count() << '\n';
    for (const auto& [id, n] : graph.nodes()) body << to_json(n).dump() << '\n';
    body << "EDGES " << graph.edge_count() << '\n';
    for (const auto& [key, e] : graph.edges()) body << edge_json(e).dump() << '\n';
    std::string content = body.str();
    content += "CRC32 " + crc_hex(content) + "\n";

    auto tmp = location;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::IoError, "write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, location, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot replace " + location.string() + ": " + ec.message());
}

PropertyGraph load(const std::filesystem::path& location) {
    std::ifstream in(location, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + location.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (content.empty() || content.back() != '\n') corrupt("missing trailer");
    auto trailer_at = content.rfind('\n', content.size() - 2);
    if (trailer_at == std::string::npos) corrupt("missing trailer");
    std::string_view payload(content.data(), trailer_at + 1);
    std::string trailer = content.substr(trailer_at + 1, content.size() - trailer_at - 2);
    if (trailer.rfind("CRC32 ", 0) != 0) corrupt("missing checksum line");
    if (trailer.substr(6) != crc_hex(payload)) corrupt("checksum mismatch");

    auto lines = text::split_lines(payload);
    std::size_t pos = 0;
    auto next = [&]() -> const std::string& {
        if (pos >= lines.size()) corrupt("unexpected end of tables");
        return lines[pos++];
    };
    if (next() != kSnapshotMagic) corrupt("bad header");
    auto count_of = [&](std::string_view tag) {
        const std::string& line = next();
        if (line.rfind(tag, 0) != 0) corrupt("expected " + std::string(tag));
        try {
            return static_cast<std::size_t>(std::stoull(line.substr(tag.size() + 1)));
        } catch (const std::exception&) {
            corrupt("bad table count");
        }
    };

    PropertyGraph g;
    try {
        std::size_t n = count_of("NODES");
        for (std::size_t i = 0; i < n; ++i) insert_loaded(g, node_from_json(nlohmann::json::parse(next())));
        std::size_t m = count_of("EDGES");
        for (std::size_t i = 0; i < m; ++i) {
            auto j = nlohmann::json::parse(next());
            g.add_edge(j.at("type").get<std::string>(), j.at("source").get<std::string>(),
                       j.at("target").get<std::string>());
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptStore) throw;
        corrupt(e.what());
    } catch (const nlohmann::json::exception& e) {
        corrupt(e.what());
    }
    if (pos != lines.size()) corrupt("trailing data");
    return g;
}

} // namespace fairkg
