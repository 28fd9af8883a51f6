#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairkg/graph.hpp"
#include "fairkg/proposals.hpp"
#include "fairkg/record.hpp"
#include "fairkg/schema.hpp"

namespace fairkg {

struct DataReport;

enum class ValueSource { AfterColon, WholeField };

/// Maps metadata keys mentioning `pattern` to a node of `target_label`
/// attached to the dataset through `edge_type`.
struct KeywordRule {
    std::string pattern;
    std::string target_label;
    std::string edge_type;
    ValueSource value_source = ValueSource::AfterColon;
};

std::vector<KeywordRule> builtin_rules();

/// Throws SchemaViolation when a rule names an unknown label/edge type or an
/// edge type that cannot connect Dataset to the rule's label.
void validate_rules(const std::vector<KeywordRule>& rules, const DataModelSchema& schema);

/// [{pattern, target_label, edge_type, value_source: "after_colon"|"whole_field"}]
std::vector<KeywordRule> rules_from_json(const nlohmann::json& doc);

/// GET {repo_base}/api/datasets/export?exporter=ddi&persistentId={doi}.
/// Throws InvalidIdentifier, NetworkError, NotFound, MalformedResponse.
std::string fetch_record(std::string_view repo_base, std::string_view doi);

bool is_well_formed_doi(std::string_view doi);

/// Parses a Dataverse-style JSON export. Every metadata block field is
/// flattened into kv_fields in document order. Throws MissingIdentifier,
/// MissingTitle, MalformedResponse (not JSON, unsafe file path).
MetadataRecord parse_ddi(std::string_view json_text, std::string_view repo_base = {});

struct EntityProposal {
    std::string label;
    Properties properties;
    std::string edge_type;
};

struct Extraction {
    std::vector<EntityProposal> entities;
    std::size_t matched_fields = 0;      // record kv_fields hit by a rule
    std::vector<KvField> unmapped_fields; // record kv_fields no rule matched
};

/// Returns the index of the rule that claims `key`, or -1. Exposed for tests.
int match_rule(const std::vector<KeywordRule>& rules, std::string_view key);

Extraction extract_entities(const MetadataRecord& record, const DataReport* report,
                            const std::vector<KeywordRule>& rules);

/// Dataset node, DataFile nodes for the record's files and entity nodes.
GraphProposals dataset_proposals(const MetadataRecord& record, const Extraction& extraction);

UpsertSummary upsert_dataset(PropertyGraph& graph, const DataModelSchema& schema, const MetadataRecord& record,
                             const Extraction& extraction);

} // namespace fairkg
