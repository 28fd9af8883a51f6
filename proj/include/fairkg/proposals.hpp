#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairkg/graph.hpp"
#include "fairkg/schema.hpp"

namespace fairkg {

/// Identity of a node that may not exist yet: (label, identity key).
struct NodeRef {
    std::string label;
    std::string key;

    bool operator==(const NodeRef&) const = default;
    static NodeRef dataset(std::string_view doi) { return {std::string(kDatasetLabel), std::string(doi)}; }
};

struct NodeProposal {
    std::string label;
    Properties properties;
    bool replace = false; // overwrite instead of merging properties

    NodeRef ref() const { return {label, PropertyGraph::identity_key(label, properties)}; }
};

struct EdgeProposal {
    std::string edge_type;
    NodeRef source;
    NodeRef target;
};

struct GraphProposals {
    std::vector<NodeProposal> nodes;
    std::vector<EdgeProposal> edges;
};

struct UpsertSummary {
    std::size_t nodes_created = 0;
    std::size_t nodes_reused = 0;
    std::size_t edges_created = 0;
    std::size_t edges_reused = 0;

    std::size_t created() const noexcept { return nodes_created + edges_created; }
    UpsertSummary& operator+=(const UpsertSummary& o);
};

nlohmann::json to_json(const UpsertSummary& summary);

/// Labels whose nodes belong to one dataset rather than being shared.
bool is_dataset_scoped(std::string_view label);

/// Checks every proposal against the schema first (SchemaViolation on the
/// first offence, graph untouched), then applies them. Edges may reference
/// nodes already in the graph.
UpsertSummary apply_proposals(PropertyGraph& graph, const DataModelSchema& schema, const GraphProposals& proposals);

} // namespace fairkg
