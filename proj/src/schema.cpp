#include "fairkg/schema.hpp"

#include <algorithm>

#include "fairkg/error.hpp"
#include "fairkg/graph.hpp"
#include "fairkg/text.hpp"

namespace fairkg {

std::string_view to_string(LabelKind kind) {
    return kind == LabelKind::NodeLabel ? "NodeLabel" : "EdgeType";
}

std::string_view to_string(LabelStatus status) {
    return status == LabelStatus::Core ? "Core" : "Provisional";
}

std::string_view to_string(ValueKind kind) {
    switch (kind) {
    case ValueKind::String: return "string";
    case ValueKind::Integer: return "integer";
    case ValueKind::Float: return "float";
    case ValueKind::Boolean: return "boolean";
    }
    return "string";
}

std::string_view to_string(Violation::Kind kind) {
    switch (kind) {
    case Violation::Kind::UnknownLabel: return "UnknownLabel";
    case Violation::Kind::UnknownEdgeType: return "UnknownEdgeType";
    case Violation::Kind::EndpointLabel: return "EndpointLabel";
    case Violation::Kind::MissingProperty: return "MissingProperty";
    case Violation::Kind::PropertyKind: return "PropertyKind";
    }
    return "Unknown";
}

SchemaLabel SchemaLabel::node(std::string name, std::vector<PropertySpec> properties) {
    SchemaLabel l;
    l.name = std::move(name);
    l.kind = LabelKind::NodeLabel;
    l.properties = std::move(properties);
    return l;
}

SchemaLabel SchemaLabel::edge(std::string name, std::set<std::string> sources, std::set<std::string> targets) {
    SchemaLabel l;
    l.name = std::move(name);
    l.kind = LabelKind::EdgeType;
    l.source_labels = std::move(sources);
    l.target_labels = std::move(targets);
    return l;
}

const SchemaLabel* DataModelSchema::find(LabelKind kind, std::string_view name) const {
    const auto& table = kind == LabelKind::NodeLabel ? nodes_ : edges_;
    auto it = table.find(name);
    return it == table.end() ? nullptr : &it->second;
}

void DataModelSchema::insert(SchemaLabel label) {
    auto& table = label.kind == LabelKind::NodeLabel ? nodes_ : edges_;
    if (table.contains(label.name))
        throw Error(ErrorCode::DuplicateLabel, "label '" + label.name + "' already declared", {label.name});
    if (label.kind == LabelKind::EdgeType) {
        if (label.source_labels.empty() || label.target_labels.empty())
            throw Error(ErrorCode::InvalidArgument, "edge type '" + label.name + "' needs source and target labels");
        for (const auto* set : {&label.source_labels, &label.target_labels}) {
            for (const auto& endpoint : *set) {
                if (!nodes_.contains(endpoint))
                    throw Error(ErrorCode::InvalidArgument,
                                "edge type '" + label.name + "' references unknown label '" + endpoint + "'");
            }
        }
    }
    std::string key = label.name;
    table.emplace(std::move(key), std::move(label));
}

DataModelSchema DataModelSchema::make(int version, const std::vector<SchemaLabel>& labels) {
    DataModelSchema schema;
    schema.version_ = version;
    // Node labels first so edge closure can be checked on insert.
    for (const auto& l : labels)
        if (l.kind == LabelKind::NodeLabel) schema.insert(l);
    for (const auto& l : labels)
        if (l.kind == LabelKind::EdgeType) schema.insert(l);
    return schema;
}

DataModelSchema builtin_schema() {
    using S = std::set<std::string>;
    const PropertySpec name{"name", ValueKind::String, false};
    std::vector<SchemaLabel> labels{
        SchemaLabel::node("Dataset", {{"doi", ValueKind::String, true},
                                      {"title", ValueKind::String, true},
                                      {"description", ValueKind::String, false},
                                      {"license", ValueKind::String, false},
                                      {"publication_date", ValueKind::String, false},
                                      {"repository_url", ValueKind::String, false},
                                      {"report_ingested", ValueKind::Boolean, false}}),
        SchemaLabel::node("Lab", {name}),
        SchemaLabel::node("Publication", {name}),
        SchemaLabel::node("Robot", {name}),
        SchemaLabel::node("RobotModel", {name}),
        SchemaLabel::node("Sensor", {name}),
        SchemaLabel::node("ControlMode", {name}),
        SchemaLabel::node("ResearchMethod", {name}),
        SchemaLabel::node("ExperimentLocation", {name}),
        SchemaLabel::node("ExperimentSetting", {name}),
        SchemaLabel::node("ExperimentSession", {name, {"session", ValueKind::String, false}}),
        SchemaLabel::node("ExperimentCondition", {name}),
        SchemaLabel::node("ParticipantGroup", {name}),
        SchemaLabel::node("Instrument", {name}),
        SchemaLabel::node("DataFile", {{"path", ValueKind::String, true},
                                       {"size", ValueKind::Integer, false},
                                       {"access_url", ValueKind::String, false}}),
        SchemaLabel::node("QualityStatement", {name}),
        SchemaLabel::node("EthicsApproval", {name}),

        SchemaLabel::edge("usesModel", S{"Dataset"}, S{"RobotModel"}),
        SchemaLabel::edge("hasRobot", S{"Dataset"}, S{"Robot"}),
        SchemaLabel::edge("hasSensor", S{"Robot", "Dataset"}, S{"Sensor"}),
        SchemaLabel::edge("usesControl", S{"Robot", "Dataset"}, S{"ControlMode"}),
        SchemaLabel::edge("usesMethod", S{"Dataset"}, S{"ResearchMethod"}),
        SchemaLabel::edge("conductedAt", S{"Dataset"}, S{"ExperimentLocation"}),
        SchemaLabel::edge("hasSetting", S{"Dataset"}, S{"ExperimentSetting"}),
        SchemaLabel::edge("hasSession", S{"Dataset"}, S{"ExperimentSession"}),
        SchemaLabel::edge("hasCondition", S{"ExperimentSession", "Dataset"}, S{"ExperimentCondition"}),
        SchemaLabel::edge("involves", S{"Dataset"}, S{"ParticipantGroup"}),
        SchemaLabel::edge("usesInstrument", S{"Dataset"}, S{"Instrument"}),
        SchemaLabel::edge("containsFile", S{"Dataset"}, S{"DataFile"}),
        SchemaLabel::edge("includesFile", S{"ExperimentSession"}, S{"DataFile"}),
        SchemaLabel::edge("describedBy", S{"Dataset"}, S{"Publication"}),
        SchemaLabel::edge("producedBy", S{"Dataset"}, S{"Lab"}),
        SchemaLabel::edge("approvedBy", S{"Dataset"}, S{"EthicsApproval"}),
        SchemaLabel::edge("hasQuality", S{"Dataset"}, S{"QualityStatement"}),
    };
    return DataModelSchema::make(1, labels);
}

DataModelSchema add_provisional(const DataModelSchema& schema, SchemaLabel label) {
    DataModelSchema next = schema;
    label.status = LabelStatus::Provisional;
    next.insert(std::move(label));
    next.version_ = schema.version_ + 1;
    return next;
}

DataModelSchema promote(const DataModelSchema& schema, std::string_view name) {
    DataModelSchema next = schema;
    bool found = false;
    bool promoted = false;
    for (auto* table : {&next.nodes_, &next.edges_}) {
        auto it = table->find(name);
        if (it == table->end()) continue;
        found = true;
        if (it->second.status == LabelStatus::Provisional) {
            it->second.status = LabelStatus::Core;
            promoted = true;
        }
    }
    if (!found) throw Error(ErrorCode::NotFound, "no label named '" + std::string(name) + "'", {std::string(name)});
    if (!promoted)
        throw Error(ErrorCode::NotProvisional, "label '" + std::string(name) + "' is already Core", {std::string(name)});
    next.version_ = schema.version_ + 1;
    return next;
}

std::size_t ValidationReport::count(Violation::Kind kind) const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(), [kind](const Violation& v) { return v.kind == kind; }));
}

namespace {

bool kind_matches(ValueKind kind, const Scalar& value) {
    switch (kind) {
    case ValueKind::String: return std::holds_alternative<std::string>(value);
    case ValueKind::Integer: return std::holds_alternative<std::int64_t>(value);
    case ValueKind::Float:
        return std::holds_alternative<double>(value) || std::holds_alternative<std::int64_t>(value);
    case ValueKind::Boolean: return std::holds_alternative<bool>(value);
    }
    return false;
}

} // namespace

ValidationReport validate(const DataModelSchema& schema, const PropertyGraph& graph) {
    ValidationReport report;
    auto add = [&](Violation::Kind kind, const std::string& subject, std::string message) {
        report.violations.push_back({kind, subject, std::move(message)});
    };

    for (const auto& [id, node] : graph.nodes()) {
        const SchemaLabel* label = schema.node_label(node.label);
        if (!label) {
            add(Violation::Kind::UnknownLabel, id, "unknown node label '" + node.label + "'");
            continue;
        }
        for (const auto& prop : label->properties) {
            auto it = node.properties.find(prop.name);
            if (it == node.properties.end()) {
                if (prop.required)
                    add(Violation::Kind::MissingProperty, id,
                        node.label + " is missing required property '" + prop.name + "'");
                continue;
            }
            if (!kind_matches(prop.kind, it->second))
                add(Violation::Kind::PropertyKind, id,
                    "property '" + prop.name + "' should be " + std::string(to_string(prop.kind)));
        }
    }

    for (const auto& [key, edge] : graph.edges()) {
        const SchemaLabel* type = schema.edge_type(edge.edge_type);
        if (!type) {
            add(Violation::Kind::UnknownEdgeType, edge.id, "unknown edge type '" + edge.edge_type + "'");
            continue;
        }
        const Node* src = graph.node(edge.source);
        const Node* dst = graph.node(edge.target);
        std::vector<std::string> problems;
        if (src && !type->source_labels.contains(src->label))
            problems.push_back("cannot start at a " + src->label + " node");
        if (dst && !type->target_labels.contains(dst->label))
            problems.push_back("cannot end at a " + dst->label + " node");
        if (!problems.empty())
            add(Violation::Kind::EndpointLabel, edge.id, edge.edge_type + " " + text::join(problems, " and "));
    }
    return report;
}

nlohmann::json to_json(const DataModelSchema& schema) {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto* table : {&schema.node_labels(), &schema.edge_types()}) {
        for (const auto& [name, label] : *table) {
            nlohmann::json props = nlohmann::json::array();
            for (const auto& p : label.properties)
                props.push_back({{"name", p.name}, {"kind", to_string(p.kind)}, {"required", p.required}});
            labels.push_back({{"name", label.name},
                              {"kind", to_string(label.kind)},
                              {"status", to_string(label.status)},
                              {"properties", props},
                              {"source_labels", label.source_labels},
                              {"target_labels", label.target_labels}});
        }
    }
    return {{"version", schema.version()}, {"labels", labels}};
}

} // namespace fairkg

namespace fairkg {

namespace {

ValueKind value_kind_from_string(std::string_view s) {
    if (s == "string") return ValueKind::String;
    if (s == "integer") return ValueKind::Integer;
    if (s == "float") return ValueKind::Float;
    if (s == "boolean") return ValueKind::Boolean;
    throw Error(ErrorCode::InvalidArgument, "unknown value kind: " + std::string(s));
}

} // namespace

DataModelSchema schema_from_json(const nlohmann::json& doc) {
    std::vector<SchemaLabel> labels;
    for (const auto& j : doc.at("labels")) {
        SchemaLabel l;
        l.name = j.at("name").get<std::string>();
        l.kind = j.at("kind").get<std::string>() == "EdgeType" ? LabelKind::EdgeType : LabelKind::NodeLabel;
        l.status = j.at("status").get<std::string>() == "Provisional" ? LabelStatus::Provisional : LabelStatus::Core;
        for (const auto& p : j.value("properties", nlohmann::json::array()))
            l.properties.push_back({p.at("name").get<std::string>(), value_kind_from_string(p.at("kind").get<std::string>()),
                                    p.value("required", false)});
        l.source_labels = j.value("source_labels", std::set<std::string>{});
        l.target_labels = j.value("target_labels", std::set<std::string>{});
        labels.push_back(std::move(l));
    }
    return DataModelSchema::make(doc.at("version").get<int>(), labels);
}

} // namespace fairkg
