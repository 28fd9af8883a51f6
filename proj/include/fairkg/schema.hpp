#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fairkg {

class PropertyGraph;

enum class LabelKind { NodeLabel, EdgeType };
enum class LabelStatus { Core, Provisional };
enum class ValueKind { String, Integer, Float, Boolean };

std::string_view to_string(LabelKind kind);
std::string_view to_string(LabelStatus status);
std::string_view to_string(ValueKind kind);

struct PropertySpec {
    std::string name;
    ValueKind kind = ValueKind::String;
    bool required = false;

    bool operator==(const PropertySpec&) const = default;
};

struct SchemaLabel {
    std::string name;
    LabelKind kind = LabelKind::NodeLabel;
    LabelStatus status = LabelStatus::Core;
    std::vector<PropertySpec> properties;
    // Edge types only.
    std::set<std::string> source_labels;
    std::set<std::string> target_labels;

    bool operator==(const SchemaLabel&) const = default;

    static SchemaLabel node(std::string name, std::vector<PropertySpec> properties = {});
    static SchemaLabel edge(std::string name, std::set<std::string> sources, std::set<std::string> targets);
};

/// Immutable versioned data model. Every mutation returns a new schema whose
/// version is exactly one greater.
class DataModelSchema {
public:
    DataModelSchema() = default;

    int version() const noexcept { return version_; }

    const SchemaLabel* find(LabelKind kind, std::string_view name) const;
    const SchemaLabel* node_label(std::string_view name) const { return find(LabelKind::NodeLabel, name); }
    const SchemaLabel* edge_type(std::string_view name) const { return find(LabelKind::EdgeType, name); }

    const std::map<std::string, SchemaLabel, std::less<>>& node_labels() const noexcept { return nodes_; }
    const std::map<std::string, SchemaLabel, std::less<>>& edge_types() const noexcept { return edges_; }

    /// Builds a schema from scratch, checking uniqueness and edge closure.
    static DataModelSchema make(int version, const std::vector<SchemaLabel>& labels);

    friend DataModelSchema add_provisional(const DataModelSchema& schema, SchemaLabel label);
    friend DataModelSchema promote(const DataModelSchema& schema, std::string_view name);

private:
    void insert(SchemaLabel label);

    int version_ = 0;
    std::map<std::string, SchemaLabel, std::less<>> nodes_;
    std::map<std::string, SchemaLabel, std::less<>> edges_;
};

DataModelSchema builtin_schema();

/// Adds `label` as Provisional. Throws DuplicateLabel on a name collision
/// within its kind, InvalidArgument for an edge type with unresolved or
/// empty endpoint sets.
DataModelSchema add_provisional(const DataModelSchema& schema, SchemaLabel label);

/// Provisional -> Core. Throws NotFound or NotProvisional.
DataModelSchema promote(const DataModelSchema& schema, std::string_view name);

struct Violation {
    enum class Kind { UnknownLabel, UnknownEdgeType, EndpointLabel, MissingProperty, PropertyKind };
    Kind kind;
    std::string subject; // node or edge id
    std::string message;
};

std::string_view to_string(Violation::Kind kind);

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const noexcept { return violations.empty(); }
    std::size_t count(Violation::Kind kind) const;
};

ValidationReport validate(const DataModelSchema& schema, const PropertyGraph& graph);

/// Canonical documentation export: {version, labels:[...]} with sorted keys.
nlohmann::json to_json(const DataModelSchema& schema);

} // namespace fairkg

namespace fairkg {

/// Inverse of to_json(DataModelSchema).
DataModelSchema schema_from_json(const nlohmann::json& doc);

} // namespace fairkg
