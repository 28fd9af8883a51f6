#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairkg/proposals.hpp"
#include "fairkg/record.hpp"
#include "fairkg/schema.hpp"

namespace fairkg {

struct KeywordRule;

inline constexpr std::string_view kKnownSections[] = {
    "Overview",  "RobotDescription", "Methodology",      "ParticipantsAndEthics", "Instruments",
    "Processing", "QualityStatement", "FileOrganization", "Appendix",
};
inline constexpr std::string_view kPreambleSection = "Preamble";

bool is_known_section(std::string_view name);

struct ReportSection {
    std::string name;
    bool provisional = false; // unknown heading, tracked for appendix promotion
    std::vector<KvField> fields;
    std::vector<std::string> free_text;
};

/// A data report in the "## Section" / "Key: Value" text dialect.
struct DataReport {
    std::string source_doi;
    std::vector<ReportSection> sections;
    std::size_t heading_lines = 0;

    const ReportSection* section(std::string_view name) const;
};

/// Lines before the first heading land in a "Preamble" section. Repeated
/// headings merge into one section. Throws EmptyDocument.
DataReport parse_report(std::string_view text, std::string_view doi = {});

struct LineAccounting {
    std::size_t recognized_kv = 0;
    std::size_t provisional_kv = 0;
    std::size_t free_text = 0;
    std::size_t headings = 0;

    std::size_t total() const noexcept { return recognized_kv + provisional_kv + free_text + headings; }
};

LineAccounting account_lines(const DataReport& report);

// ---- naming conventions ----------------------------------------------------------

struct TemplateSegment {
    bool is_token = false;
    std::string text; // literal text or token name
};

struct FilePattern {
    int priority = 0;
    std::string template_text;
    bool wildcard = false; // "*": matches any basename, binds nothing
    std::vector<TemplateSegment> segments;
    std::map<std::string, std::set<std::string>> domains; // absent token = any value

    std::vector<std::string> tokens() const;
};

struct NamingConvention {
    std::vector<FilePattern> patterns; // ascending priority
};

/// Throws MalformedPattern (unbalanced brace, bad token name, adjacent tokens,
/// duplicate token, '/' in template, no literal text).
FilePattern compile_pattern(int priority, std::string_view template_text);

/// Reads "pattern <n>: <template>" and "tokens: name ∈ {a, b}" lines (also
/// "name in {a, b}" and "name ∈ *"). Throws MalformedPattern, DuplicatePriority.
NamingConvention parse_naming_convention(std::string_view section_text);
NamingConvention parse_naming_convention(const ReportSection& section);

struct FileClassification {
    int priority = 0;
    std::map<std::string, std::string> bindings;

    bool operator==(const FileClassification&) const = default;
};

/// Matches the basename of `path` against each pattern in priority order.
std::optional<FileClassification> classify_file(const NamingConvention& conv, std::string_view path);

/// Label used for a provisional section ("Stress Signals" -> "StressSignals").
std::string provisional_label(std::string_view section_name);
std::string provisional_edge_type(std::string_view section_name);

/// Adds a Provisional node label and Dataset -> label edge type for every
/// provisional section not already in the schema.
DataModelSchema extend_with_provisional(const DataModelSchema& schema, const DataReport& report);

/// Session, DataFile, quality/ethics and provisional-section proposals, plus
/// the report's key/value pairs run through the keyword rules.
GraphProposals report_to_graph(const DataReport& report, const NamingConvention& conv,
                               std::span<const FileEntry> files, const std::vector<KeywordRule>& rules);

/// Convention from the FileOrganization section, or an empty one.
NamingConvention report_convention(const DataReport& report);

} // namespace fairkg
