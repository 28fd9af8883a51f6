#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairkg/graph.hpp"

namespace fairkg {

enum class IntentKind { WhichDatasets, Detail, Compare, LocateFiles, FreeForm };

std::string_view to_string(IntentKind kind);

/// Structured reading of a question. Slots are canonical (DOIs and facets
/// sorted, numeric filter values without leading zeros) so that paraphrases
/// compare equal.
struct Intent {
    IntentKind kind = IntentKind::FreeForm;
    std::string entity_label;        // WhichDatasets
    std::string entity_name;         // WhichDatasets (display form)
    std::vector<std::string> dois;   // Detail, LocateFiles: 1+; Compare: 2+
    std::vector<std::string> facets; // edge types named by the question
    FileFilters filters;             // LocateFiles
    std::string text;                // FreeForm: folded question

    bool operator==(const Intent&) const = default;
};

nlohmann::json to_json(const Intent& intent);

/// Facet edge types named in free text ("sensors" -> hasSensor, "robot model"
/// -> usesModel). A bare "robot" counts only when nothing more specific does.
std::vector<std::string> topic_facets(std::string_view question);

/// Datasets whose title, alternative title, short title or DOI occurs in the
/// question (case-insensitive, whole words). Sorted by DOI.
std::vector<std::string> match_datasets(std::string_view question, const PropertyGraph& graph);

/// Rule-based classification; throws AmbiguousComparison when comparison cue
/// words appear but fewer than two datasets are named.
Intent parse_intent(std::string_view question, const PropertyGraph& graph);

} // namespace fairkg
