#include "fairkg/intent.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "fairkg/error.hpp"
#include "fairkg/text.hpp"

namespace fairkg {

std::string_view to_string(IntentKind kind) {
    switch (kind) {
    case IntentKind::WhichDatasets: return "WhichDatasets";
    case IntentKind::Detail: return "Detail";
    case IntentKind::Compare: return "Compare";
    case IntentKind::LocateFiles: return "LocateFiles";
    case IntentKind::FreeForm: return "FreeForm";
    }
    return "FreeForm";
}

nlohmann::json to_json(const Intent& intent) {
    nlohmann::json filters = nlohmann::json::object();
    for (const auto& [k, v] : intent.filters) filters[k] = v;
    nlohmann::json j{{"kind", to_string(intent.kind)}, {"dois", intent.dois}, {"facets", intent.facets}};
    if (intent.kind == IntentKind::WhichDatasets)
        j["entity"] = {{"label", intent.entity_label}, {"name", intent.entity_name}};
    if (intent.kind == IntentKind::LocateFiles) j["filters"] = filters;
    if (intent.kind == IntentKind::FreeForm) j["text"] = intent.text;
    return j;
}

namespace {

std::vector<std::string> stemmed(std::string_view s) {
    auto words = text::split_whitespace(text::fold_for_matching(s));
    for (auto& w : words) w = text::stem(w);
    return words;
}

struct TopicCue {
    std::string_view phrase;
    std::string_view facet;
};

// Longer phrases first so "robot model" claims its words before "robot".
constexpr TopicCue kStrongCues[] = {
    {"robot model", "usesModel"},      {"experiment session", "hasSession"}, {"control mode", "usesControl"},
    {"research method", "usesMethod"}, {"data quality", "hasQuality"},       {"model", "usesModel"},
    {"sensor", "hasSensor"},           {"sensory", "hasSensor"},             {"sensing", "hasSensor"},
    {"lidar", "hasSensor"},            {"camera", "hasSensor"},              {"imu", "hasSensor"},
    {"control", "usesControl"},        {"teleoperation", "usesControl"},     {"teleoperated", "usesControl"},
    {"autonomous", "usesControl"},     {"autonomy", "usesControl"},          {"joystick", "usesControl"},
    {"method", "usesMethod"},          {"methodology", "usesMethod"},        {"participant", "involves"},
    {"subject", "involves"},           {"demographic", "involves"},          {"location", "conductedAt"},
    {"where", "conductedAt"},          {"setting", "hasSetting"},            {"environment", "hasSetting"},
    {"session", "hasSession"},         {"condition", "hasCondition"},        {"instrument", "usesInstrument"},
    {"survey", "usesInstrument"},      {"interview", "usesInstrument"},      {"questionnaire", "usesInstrument"},
    {"publication", "describedBy"},    {"paper", "describedBy"},             {"citation", "describedBy"},
    {"lab", "producedBy"},             {"laboratory", "producedBy"},         {"ethic", "approvedBy"},
    {"irb", "approvedBy"},             {"consent", "approvedBy"},            {"quality", "hasQuality"},
};

constexpr TopicCue kWeakCues[] = {
    {"robot", "usesModel"},
    {"platform", "usesModel"},
};

constexpr std::string_view kCompareCues[] = {"difference", "differ", "different", "compare", "comparison",
                                             "compared", "versu", "vs", "contrast", "better", "worse"};

constexpr std::string_view kFileCues[] = {"file"};

bool contains_word(const std::vector<std::string>& words, std::string_view w) {
    return std::find(words.begin(), words.end(), w) != words.end();
}

/// Word-boundary occurrences of `needle` (space-joined words) in `hay`.
std::vector<std::pair<std::size_t, std::size_t>> occurrences(const std::string& hay, const std::string& needle) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (needle.empty()) return out;
    const std::string padded = " " + hay + " ";
    const std::string pn = " " + needle + " ";
    for (auto pos = padded.find(pn); pos != std::string::npos; pos = padded.find(pn, pos + 1))
        out.emplace_back(pos, pos + needle.size());
    return out;
}

std::vector<std::string> dataset_names(const Node& ds) {
    std::vector<std::string> names;
    auto add = [&](const std::string& s) {
        std::string folded = text::fold_for_matching(s);
        if (folded.size() >= 2) names.push_back(folded);
    };
    std::string title = string_property(ds.properties, "title");
    add(title);
    add(string_property(ds.properties, "alternative_title"));
    add(string_property(ds.properties, "doi"));
    auto cut = title.find_first_of(":(");
    if (cut != std::string::npos) add(title.substr(0, cut));
    return names;
}

bool is_entity_label(std::string_view label) {
    return label != kDatasetLabel && label != kDataFileLabel && label != "ExperimentSession" &&
           label != "QualityStatement" && label != "EthicsApproval";
}

constexpr std::string_view kReservedFileProps[] = {"path",         "name",     "dataset",         "size",
                                                    "content_type", "checksum", "pattern_priority", "access_url"};

bool is_reserved_file_prop(std::string_view key) {
    return std::find(std::begin(kReservedFileProps), std::end(kReservedFileProps), key) != std::end(kReservedFileProps);
}

FileFilters extract_filters(const std::vector<std::string>& words, const std::string& folded,
                            const PropertyGraph& graph, const std::string& doi) {
    std::map<std::string, std::set<std::string>> values;
    for (const Node& f : locate_files(graph, doi, {})) {
        for (const auto& [k, v] : f.properties) {
            if (!is_reserved_file_prop(k)) values[k].insert(scalar_to_string(v));
        }
    }
    FileFilters filters;
    std::map<std::string, std::size_t> first_at;
    for (const auto& [key, vals] : values) {
        const std::string key_stem = text::stem(text::fold_for_matching(key));
        bool numeric_key = std::any_of(vals.begin(), vals.end(), [](const auto& v) { return text::is_all_digits(v); });
        if (numeric_key) {
            for (std::size_t i = 0; i + 1 < words.size(); ++i) {
                if (words[i] == key_stem && text::is_all_digits(words[i + 1])) {
                    filters[key] = text::strip_leading_zeros(words[i + 1]);
                    break;
                }
            }
            continue;
        }
        for (const auto& v : vals) {
            auto occ = occurrences(folded, text::fold_for_matching(v));
            if (occ.empty()) continue;
            auto it = first_at.find(key);
            if (it == first_at.end() || occ.front().first < it->second) {
                first_at[key] = occ.front().first;
                filters[key] = v;
            }
        }
    }
    return filters;
}

} // namespace

std::vector<std::string> topic_facets(std::string_view question) {
    auto words = stemmed(question);
    std::vector<bool> used(words.size(), false);
    std::set<std::string> facets;
    auto scan = [&](const TopicCue& cue) {
        auto phrase = text::split_whitespace(cue.phrase);
        for (auto& p : phrase) p = text::stem(p);
        bool hit = false;
        for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i) {
            bool match = true;
            for (std::size_t j = 0; j < phrase.size() && match; ++j)
                match = !used[i + j] && words[i + j] == phrase[j];
            if (!match) continue;
            for (std::size_t j = 0; j < phrase.size(); ++j) used[i + j] = true;
            hit = true;
        }
        if (hit) facets.insert(std::string(cue.facet));
    };
    for (const auto& cue : kStrongCues) scan(cue);
    if (facets.empty()) {
        for (const auto& cue : kWeakCues) scan(cue);
    }
    return {facets.begin(), facets.end()};
}

std::vector<std::string> match_datasets(std::string_view question, const PropertyGraph& graph) {
    const std::string folded = text::fold_for_matching(question);
    struct Span {
        std::size_t begin, end;
        std::string doi;
    };
    std::vector<Span> spans;
    for (const Node* ds : graph.nodes_with_label(kDatasetLabel)) {
        std::string doi = string_property(ds->properties, "doi");
        for (const auto& name : dataset_names(*ds)) {
            for (auto [b, e] : occurrences(folded, name)) spans.push_back({b, e, doi});
        }
    }
    std::set<std::string> dois;
    for (const auto& s : spans) {
        // a name nested inside a longer match of another dataset does not count
        bool shadowed = std::any_of(spans.begin(), spans.end(), [&](const Span& o) {
            return o.doi != s.doi && o.begin <= s.begin && s.end <= o.end && (o.end - o.begin) > (s.end - s.begin);
        });
        if (!shadowed) dois.insert(s.doi);
    }
    return {dois.begin(), dois.end()};
}

Intent parse_intent(std::string_view question, const PropertyGraph& graph) {
    const std::string folded = text::fold_for_matching(question);
    const auto words = stemmed(question);
    const auto datasets = match_datasets(question, graph);
    Intent intent;

    bool compare_cue = std::any_of(std::begin(kCompareCues), std::end(kCompareCues),
                                   [&](std::string_view c) { return contains_word(words, c); });
    if (compare_cue) {
        if (datasets.size() < 2)
            throw Error(ErrorCode::AmbiguousComparison,
                        "comparison questions must name at least two datasets; name the datasets to compare",
                        datasets);
        intent.kind = IntentKind::Compare;
        intent.dois = datasets;
        intent.facets = topic_facets(question);
        return intent;
    }

    bool which_cue = false;
    for (std::size_t i = 0; i < words.size() && !which_cue; ++i) {
        if (words[i] != "which" && words[i] != "what") continue;
        for (std::size_t j = i + 1; j < std::min(words.size(), i + 4); ++j) {
            if (words[j] == "dataset" || words[j] == "studie" || words[j] == "study" || words[j] == "collection") {
                which_cue = true;
                break;
            }
        }
    }
    if (which_cue) {
        const Node* best = nullptr;
        std::size_t best_len = 0;
        for (const auto& [id, n] : graph.nodes()) {
            if (!is_entity_label(n.label)) continue;
            std::string name = text::fold_for_matching(n.name());
            if (name.size() < 2 || occurrences(folded, name).empty()) continue;
            if (name.size() > best_len || (name.size() == best_len && best && n.id < best->id)) {
                best = &n;
                best_len = name.size();
            }
        }
        if (best) {
            intent.kind = IntentKind::WhichDatasets;
            intent.entity_label = best->label;
            intent.entity_name = best->name();
            return intent;
        }
    }

    bool file_cue = std::any_of(std::begin(kFileCues), std::end(kFileCues),
                                [&](std::string_view c) { return contains_word(words, c); }) ||
                    !occurrences(folded, "point to").empty();
    if (file_cue && !datasets.empty()) {
        intent.kind = IntentKind::LocateFiles;
        intent.dois = {datasets.front()};
        intent.filters = extract_filters(words, folded, graph, datasets.front());
        return intent;
    }

    if (!datasets.empty()) {
        intent.kind = IntentKind::Detail;
        intent.dois = datasets;
        intent.facets = topic_facets(question);
        return intent;
    }

    intent.kind = IntentKind::FreeForm;
    intent.text = folded;
    return intent;
}

} // namespace fairkg
