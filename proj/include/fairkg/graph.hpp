#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fairkg/schema.hpp"

namespace fairkg {

using Scalar = std::variant<std::string, std::int64_t, double, bool>;
using Properties = std::map<std::string, Scalar, std::less<>>;

nlohmann::json scalar_to_json(const Scalar& value);
Scalar scalar_from_json(const nlohmann::json& value);
std::string scalar_to_string(const Scalar& value);

/// Reads a string property; empty when absent or not a string.
std::string string_property(const Properties& props, std::string_view key);

struct Node {
    std::string id;
    std::string label;
    Properties properties;

    std::string name() const { return string_property(properties, "name"); }
    bool operator==(const Node&) const = default;
};

struct Edge {
    std::string id;
    std::string edge_type;
    std::string source;
    std::string target;

    bool operator==(const Edge&) const = default;
};

inline constexpr std::string_view kDatasetLabel = "Dataset";
inline constexpr std::string_view kDataFileLabel = "DataFile";

/// Labelled property graph with a label index and an identity index
/// (label, key) -> node id. Node ids are derived from identity, so the same
/// entity ingested twice maps to the same node.
///
/// Identity key: Dataset -> its `doi`; nodes carrying a `dataset` property are
/// scoped to that dataset (doi + "/" + normalized name); everything else is
/// the normalized `name`, shared graph-wide.
class PropertyGraph {
public:
    using EdgeKey = std::tuple<std::string, std::string, std::string>; // type, source, target

    static std::string identity_key(std::string_view label, const Properties& props);
    static std::string make_node_id(std::string_view label, std::string_view key);
    static std::string make_edge_id(std::string_view type, std::string_view source, std::string_view target);

    const Node* node(std::string_view id) const;
    const Node* find(std::string_view label, std::string_view key) const;
    const Node* find_dataset(std::string_view doi) const { return find(kDatasetLabel, doi); }

    struct UpsertResult {
        std::string id;
        bool created;
    };

    /// Inserts or merges. On merge, incoming properties overwrite existing
    /// ones except `name`, which keeps the first-seen display form. With
    /// `replace` the stored properties are swapped wholesale.
    UpsertResult upsert_node(std::string label, Properties props, bool replace = false);

    /// Returns false when the edge already existed. Throws InvalidArgument
    /// when an endpoint is missing.
    bool add_edge(std::string_view type, std::string_view source, std::string_view target);

    bool remove_edge(std::string_view type, std::string_view source, std::string_view target);
    /// Removes the node and every incident edge.
    bool remove_node(std::string_view id);

    bool has_edge(std::string_view type, std::string_view source, std::string_view target) const;

    const std::map<std::string, Node, std::less<>>& nodes() const noexcept { return nodes_; }
    const std::map<EdgeKey, Edge>& edges() const noexcept { return edges_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    std::vector<const Node*> nodes_with_label(std::string_view label) const;
    std::vector<const Edge*> out_edges(std::string_view id) const;
    std::vector<const Edge*> in_edges(std::string_view id) const;

    /// Recomputes every index from the node/edge tables and compares.
    /// Returns a list of inconsistencies, empty when sound.
    std::vector<std::string> audit() const;

    /// {"nodes": [...sorted by id], "edges": [...sorted by (type, source, target)]}
    nlohmann::json canonical_json() const;
    std::string canonical_serialization() const { return canonical_json().dump(); }
    static PropertyGraph from_canonical_json(const nlohmann::json& doc);

    bool operator==(const PropertyGraph& other) const {
        return nodes_ == other.nodes_ && edges_ == other.edges_;
    }

private:
    std::map<std::string, Node, std::less<>> nodes_;
    std::map<EdgeKey, Edge> edges_;
    std::map<std::string, std::set<std::string>, std::less<>> label_index_;
    std::map<std::pair<std::string, std::string>, std::string, std::less<>> key_index_;
    std::map<std::string, std::set<EdgeKey>, std::less<>> out_index_;
    std::map<std::string, std::set<EdgeKey>, std::less<>> in_index_;
};

// ---- query primitives -----------------------------------------------------

/// Datasets with any edge (either direction) to the node (label, name).
/// Sorted by DOI. Throws UnknownLabel when the label is not in the schema.
std::vector<Node> find_datasets_by(const PropertyGraph& graph, const DataModelSchema& schema,
                                   std::string_view label, std::string_view name);

struct ProfileEntry {
    std::string node_id;
    std::string label;
    std::string name;
};

struct ProfileGroup {
    std::string edge_type;
    bool outgoing = true;
    std::vector<ProfileEntry> entries; // sorted by name
};

struct DatasetProfile {
    Node dataset;
    std::vector<ProfileGroup> groups; // sorted by edge type, outgoing first
};

DatasetProfile dataset_profile(const PropertyGraph& graph, std::string_view doi);
nlohmann::json to_json(const DatasetProfile& profile);

struct ComparisonRow {
    std::string facet;
    std::vector<std::vector<std::string>> cells; // one sorted name set per dataset
    bool same = true;
};

struct ComparisonTable {
    std::vector<std::string> dois;
    std::vector<std::string> titles;
    std::vector<ComparisonRow> rows;
};

/// Facet cells hold the names of targets of that edge type reached from the
/// dataset, or from a node one outgoing hop away (Dataset -> Robot -> Sensor).
/// Throws InvalidArgument for < 2 DOIs or unknown facets, DatasetNotFound
/// listing every unresolved DOI.
ComparisonTable compare(const PropertyGraph& graph, const DataModelSchema& schema,
                        const std::vector<std::string>& dois,
                        const std::optional<std::vector<std::string>>& facets = std::nullopt);
nlohmann::json to_json(const ComparisonTable& table);

/// Zero-pad-insensitive equality: "1" == "01", "video" == "video".
bool filter_value_matches(std::string_view filter, std::string_view value);

using FileFilters = std::map<std::string, std::string, std::less<>>;

/// DataFile nodes under the dataset satisfying every filter, sorted by path.
std::vector<Node> locate_files(const PropertyGraph& graph, std::string_view doi, const FileFilters& filters);

/// The dataset node, its one-hop neighbours, and the edges among them.
PropertyGraph dataset_subgraph(const PropertyGraph& graph, std::string_view doi);

/// Snapshot file: header line, node table, edge table, trailing CRC32 line.
void save(const PropertyGraph& graph, const std::filesystem::path& location);
PropertyGraph load(const std::filesystem::path& location);

nlohmann::json to_json(const Node& node);

} // namespace fairkg
