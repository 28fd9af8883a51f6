#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace fairkg {

struct FileEntry {
    std::string path; // relative, '/'-separated, no ".." segments
    std::int64_t size = 0;
    std::string content_type;
    std::string access_url;
    std::optional<std::string> checksum; // "<algorithm>:<hex>", e.g. "md5:9e10..."

    bool operator==(const FileEntry&) const = default;
};

using KvField = std::pair<std::string, std::string>;

/// Repository-independent description of one published dataset.
struct MetadataRecord {
    std::string doi;
    std::string title;
    std::string alternative_title;
    std::string description;
    std::vector<std::string> authors;
    std::vector<std::string> subjects;
    std::optional<std::string> license;
    std::string publication_date;
    std::string repository_url;
    std::vector<FileEntry> files;
    std::vector<KvField> kv_fields;

    bool operator==(const MetadataRecord&) const = default;
};

/// Canonical record JSON (sorted keys).
nlohmann::json to_json(const MetadataRecord& record);
MetadataRecord record_from_json(const nlohmann::json& doc);

/// Throws InvalidArgument unless `path` is relative, '/'-separated and free of
/// ".." segments. Returns the path with redundant "./" and "//" removed.
std::string sanitize_relative_path(std::string_view path);

} // namespace fairkg
