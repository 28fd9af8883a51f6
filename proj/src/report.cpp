#include "fairkg/report.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "fairkg/error.hpp"
#include "fairkg/harvester.hpp"
#include "fairkg/text.hpp"

namespace fairkg {

bool is_known_section(std::string_view name) {
    return std::find(std::begin(kKnownSections), std::end(kKnownSections), name) != std::end(kKnownSections);
}

const ReportSection* DataReport::section(std::string_view name) const {
    for (const auto& s : sections) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

namespace {

constexpr std::size_t kMaxKeyWords = 6;

std::optional<KvField> split_kv(std::string_view line) {
    auto colon = line.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    std::string key = text::trim(line.substr(0, colon));
    std::string value = text::trim(line.substr(colon + 1));
    if (key.empty() || value.empty()) return std::nullopt;
    if (key.front() == '-' || key.front() == '*' || key.front() == '#') return std::nullopt;
    if (value.rfind("//", 0) == 0) return std::nullopt; // bare URL
    if (text::split_whitespace(key).size() > kMaxKeyWords) return std::nullopt;
    return KvField{std::move(key), std::move(value)};
}

} // namespace

DataReport parse_report(std::string_view input, std::string_view doi) {
    if (text::trim(input).empty()) throw Error(ErrorCode::EmptyDocument, "data report is empty");
    DataReport report;
    report.source_doi = std::string(doi);

    ReportSection* current = nullptr;
    auto open_section = [&](const std::string& name) {
        for (auto& s : report.sections) {
            if (s.name == name) return &s;
        }
        ReportSection s;
        s.name = name;
        s.provisional = name != kPreambleSection && !is_known_section(name);
        report.sections.push_back(std::move(s));
        return &report.sections.back();
    };

    for (const auto& raw : text::split_lines(input)) {
        std::string line = text::trim(raw);
        if (line.empty()) continue;
        if (line.rfind("## ", 0) == 0 && line.rfind("### ", 0) != 0) {
            ++report.heading_lines;
            std::string name = text::trim(std::string_view(line).substr(3));
            current = open_section(name.empty() ? std::string(kPreambleSection) : name);
            continue;
        }
        if (!current) current = open_section(std::string(kPreambleSection));
        if (auto kv = split_kv(line)) current->fields.push_back(std::move(*kv));
        else current->free_text.push_back(line);
    }

    if (report.source_doi.empty()) {
        if (const ReportSection* overview = report.section("Overview")) {
            for (const auto& [k, v] : overview->fields) {
                if (text::to_lower(k) == "doi") report.source_doi = v;
            }
        }
    }
    return report;
}

LineAccounting account_lines(const DataReport& report) {
    LineAccounting acc;
    acc.headings = report.heading_lines;
    for (const auto& s : report.sections) {
        (s.provisional ? acc.provisional_kv : acc.recognized_kv) += s.fields.size();
        acc.free_text += s.free_text.size();
    }
    return acc;
}

// ---- naming convention ---------------------------------------------------------------

std::vector<std::string> FilePattern::tokens() const {
    std::vector<std::string> out;
    for (const auto& s : segments)
        if (s.is_token) out.push_back(s.text);
    return out;
}

namespace {

[[noreturn]] void malformed(std::string_view tmpl, const std::string& why) {
    throw Error(ErrorCode::MalformedPattern, "bad pattern '" + std::string(tmpl) + "': " + why, {std::string(tmpl)});
}

bool valid_token_name(std::string_view name) {
    if (name.empty() || std::isdigit(static_cast<unsigned char>(name.front()))) return false;
    return std::all_of(name.begin(), name.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

} // namespace

FilePattern compile_pattern(int priority, std::string_view tmpl) {
    FilePattern p;
    p.priority = priority;
    p.template_text = text::trim(tmpl);
    if (p.template_text == "*") {
        p.wildcard = true;
        return p;
    }
    if (p.template_text.empty()) malformed(tmpl, "empty template");
    if (p.template_text.find('/') != std::string::npos) malformed(tmpl, "templates match basenames only");

    std::set<std::string> names;
    std::string literal;
    const std::string& t = p.template_text;
    for (std::size_t i = 0; i < t.size(); ++i) {
        char c = t[i];
        if (c == '}') malformed(tmpl, "unbalanced '}'");
        if (c != '{') {
            literal.push_back(c);
            continue;
        }
        auto close = t.find('}', i + 1);
        if (close == std::string::npos) malformed(tmpl, "unbalanced '{'");
        std::string name = t.substr(i + 1, close - i - 1);
        if (!valid_token_name(name)) malformed(tmpl, "bad token name '" + name + "'");
        if (!names.insert(name).second) malformed(tmpl, "token '" + name + "' used twice");
        if (!literal.empty()) {
            p.segments.push_back({false, literal});
            literal.clear();
        } else if (!p.segments.empty() && p.segments.back().is_token) {
            malformed(tmpl, "adjacent tokens need a separator");
        }
        p.segments.push_back({true, name});
        i = close;
    }
    if (!literal.empty()) p.segments.push_back({false, literal});
    if (std::none_of(p.segments.begin(), p.segments.end(), [](const auto& s) { return !s.is_token; }))
        malformed(tmpl, "template needs literal text");
    return p;
}

namespace {

// "modality ∈ {video, audio}", "modality in {video, audio}", "ext ∈ *"
std::pair<std::string, std::optional<std::set<std::string>>> parse_domain(std::string_view spec) {
    std::string s = text::trim(spec);
    std::size_t op_at = s.find("∈");
    std::size_t op_len = 3;
    if (op_at == std::string::npos) {
        op_at = s.find(" in ");
        op_len = 4;
    }
    if (op_at == std::string::npos) malformed(spec, "token domain needs '∈' or 'in'");
    std::string name = text::trim(std::string_view(s).substr(0, op_at));
    std::string rhs = text::trim(std::string_view(s).substr(op_at + op_len));
    if (!valid_token_name(name)) malformed(spec, "bad token name '" + name + "'");
    if (rhs == "*") return {name, std::nullopt};
    if (rhs.size() < 2 || rhs.front() != '{' || rhs.back() != '}') malformed(spec, "domain must be {a, b, ...} or *");
    std::set<std::string> values;
    for (const auto& v : text::split(std::string_view(rhs).substr(1, rhs.size() - 2), ',')) {
        std::string value = text::trim(v);
        if (value.empty()) malformed(spec, "empty domain value");
        values.insert(value);
    }
    return {name, values};
}

NamingConvention build_convention(const std::vector<KvField>& lines) {
    NamingConvention conv;
    std::map<std::string, std::optional<std::set<std::string>>> domains;
    std::set<int> priorities;
    for (const auto& [key, value] : lines) {
        auto words = text::split_whitespace(key);
        if (words.size() == 2 && text::to_lower(words[0]) == "pattern") {
            int priority = 0;
            try {
                std::size_t used = 0;
                priority = std::stoi(words[1], &used);
                if (used != words[1].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                malformed(key, "priority must be an integer");
            }
            if (!priorities.insert(priority).second)
                throw Error(ErrorCode::DuplicatePriority, "two patterns share priority " + words[1], {words[1]});
            conv.patterns.push_back(compile_pattern(priority, value));
        } else if (words.size() == 1 && text::to_lower(words[0]) == "tokens") {
            for (const auto& spec : text::split(value, ';')) {
                if (text::trim(spec).empty()) continue;
                auto [name, domain] = parse_domain(spec);
                domains[name] = domain;
            }
        }
    }
    if (conv.patterns.empty()) throw Error(ErrorCode::MalformedPattern, "no 'pattern <n>: <template>' lines found");
    std::sort(conv.patterns.begin(), conv.patterns.end(),
              [](const FilePattern& a, const FilePattern& b) { return a.priority < b.priority; });
    for (auto& p : conv.patterns) {
        for (const auto& tok : p.tokens()) {
            auto it = domains.find(tok);
            if (it != domains.end() && it->second) p.domains[tok] = *it->second;
        }
    }
    return conv;
}

} // namespace

NamingConvention parse_naming_convention(std::string_view section_text) {
    std::vector<KvField> lines;
    for (const auto& raw : text::split_lines(section_text)) {
        auto colon = raw.find(':');
        if (colon == std::string::npos) continue;
        lines.emplace_back(text::trim(std::string_view(raw).substr(0, colon)),
                           text::trim(std::string_view(raw).substr(colon + 1)));
    }
    return build_convention(lines);
}

NamingConvention parse_naming_convention(const ReportSection& section) { return build_convention(section.fields); }

NamingConvention report_convention(const DataReport& report) {
    const ReportSection* org = report.section("FileOrganization");
    if (!org) return {};
    bool has_pattern = std::any_of(org->fields.begin(), org->fields.end(), [](const KvField& f) {
        return text::starts_with_icase(f.first, "pattern");
    });
    return has_pattern ? parse_naming_convention(*org) : NamingConvention{};
}

namespace {

bool match_segments(const FilePattern& p, std::size_t seg, std::string_view name, std::size_t pos,
                    std::map<std::string, std::string>& bindings) {
    if (seg == p.segments.size()) return pos == name.size();
    const auto& s = p.segments[seg];
    if (!s.is_token) {
        if (name.substr(pos, s.text.size()) != s.text) return false;
        return match_segments(p, seg + 1, name, pos + s.text.size(), bindings);
    }
    auto domain = p.domains.find(s.text);
    for (std::size_t len = 1; pos + len <= name.size(); ++len) {
        std::string value(name.substr(pos, len));
        if (domain != p.domains.end() && !domain->second.contains(value)) continue;
        bindings[s.text] = value;
        if (match_segments(p, seg + 1, name, pos + len, bindings)) return true;
    }
    bindings.erase(s.text);
    return false;
}

} // namespace

std::optional<FileClassification> classify_file(const NamingConvention& conv, std::string_view path) {
    auto slash = path.rfind('/');
    std::string_view base = slash == std::string_view::npos ? path : path.substr(slash + 1);
    if (base.empty()) return std::nullopt;
    for (const auto& p : conv.patterns) {
        if (p.wildcard) return FileClassification{p.priority, {}};
        std::map<std::string, std::string> bindings;
        if (match_segments(p, 0, base, 0, bindings)) return FileClassification{p.priority, std::move(bindings)};
    }
    return std::nullopt;
}

// ---- graph proposals -------------------------------------------------------------------

std::string provisional_label(std::string_view section_name) {
    std::string out;
    for (const auto& w : text::key_words(section_name)) {
        std::string word = w;
        word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
        out += word;
    }
    // keep the original casing when the heading is already one identifier
    std::string compact;
    for (char c : section_name)
        if (std::isalnum(static_cast<unsigned char>(c))) compact.push_back(c);
    if (compact.size() == section_name.size() && text::to_lower(compact) == text::to_lower(out)) return compact;
    return out;
}

std::string provisional_edge_type(std::string_view section_name) { return "has" + provisional_label(section_name); }

DataModelSchema extend_with_provisional(const DataModelSchema& schema, const DataReport& report) {
    DataModelSchema out = schema;
    for (const auto& s : report.sections) {
        if (!s.provisional) continue;
        std::string label = provisional_label(s.name);
        if (label.empty()) continue;
        if (!out.node_label(label)) out = add_provisional(out, SchemaLabel::node(label));
        std::string edge = provisional_edge_type(s.name);
        if (!out.edge_type(edge))
            out = add_provisional(out, SchemaLabel::edge(edge, {std::string(kDatasetLabel)}, {label}));
    }
    return out;
}

namespace {

std::string snake_key(std::string_view key) { return text::join(text::key_words(key), "_"); }

bool mentions_ethics(std::string_view key) {
    for (const auto& w : text::key_words(key)) {
        if (w == "irb" || w == "ethics" || w == "ethical" || w == "approval" || w == "consent") return true;
    }
    return false;
}

void add_reserved_safe(Properties& props, const std::string& key, std::string value) {
    if (key.empty() || key == "name" || key == "dataset" || key == "path" || key == "doi") return;
    props.try_emplace(key, std::move(value));
}

} // namespace

GraphProposals report_to_graph(const DataReport& report, const NamingConvention& conv,
                               std::span<const FileEntry> files, const std::vector<KeywordRule>& rules) {
    if (report.source_doi.empty())
        throw Error(ErrorCode::InvalidArgument, "data report is not attached to a dataset DOI");
    const std::string& doi = report.source_doi;
    const NodeRef dataset = NodeRef::dataset(doi);
    GraphProposals gp;
    gp.nodes.push_back({std::string(kDatasetLabel), {{"doi", doi}, {"report_ingested", true}}, false});

    std::set<std::string> sessions;
    for (const auto& f : files) {
        auto cls = classify_file(conv, f.path);
        if (!cls) continue;
        Properties props{{"path", f.path},
                         {"name", f.path},
                         {"dataset", doi},
                         {"size", f.size},
                         {"content_type", f.content_type},
                         {"access_url", f.access_url},
                         {"pattern_priority", std::int64_t{cls->priority}}};
        if (f.checksum) props["checksum"] = *f.checksum;
        for (const auto& [token, value] : cls->bindings) add_reserved_safe(props, token, value);
        NodeProposal file{std::string(kDataFileLabel), std::move(props), false};
        NodeRef file_ref = file.ref();
        gp.nodes.push_back(std::move(file));
        gp.edges.push_back({"containsFile", dataset, file_ref});

        auto session = cls->bindings.find("session");
        if (session == cls->bindings.end()) continue;
        NodeProposal sess{"ExperimentSession",
                          {{"name", "session " + session->second}, {"session", session->second}, {"dataset", doi}},
                          false};
        NodeRef sess_ref = sess.ref();
        if (sessions.insert(session->second).second) {
            gp.nodes.push_back(std::move(sess));
            gp.edges.push_back({"hasSession", dataset, sess_ref});
        }
        gp.edges.push_back({"includesFile", sess_ref, file_ref});
    }

    MetadataRecord shell;
    shell.doi = doi;
    Extraction ex = extract_entities(shell, &report, rules);
    for (const auto& e : ex.entities) {
        NodeProposal n{e.label, e.properties, false};
        gp.edges.push_back({e.edge_type, dataset, n.ref()});
        gp.nodes.push_back(std::move(n));
    }

    if (const ReportSection* q = report.section("QualityStatement"); q && (!q->fields.empty() || !q->free_text.empty())) {
        Properties props{{"name", "quality statement"}, {"dataset", doi}};
        for (const auto& [k, v] : q->fields) add_reserved_safe(props, snake_key(k), v);
        if (!q->free_text.empty()) props["text"] = text::join(q->free_text, "\n");
        NodeProposal n{"QualityStatement", std::move(props), false};
        gp.edges.push_back({"hasQuality", dataset, n.ref()});
        gp.nodes.push_back(std::move(n));
    }

    if (const ReportSection* pe = report.section("ParticipantsAndEthics")) {
        Properties props{{"name", "ethics approval"}, {"dataset", doi}};
        bool any = false;
        for (const auto& [k, v] : pe->fields) {
            if (!mentions_ethics(k)) continue;
            add_reserved_safe(props, snake_key(k), v);
            any = true;
        }
        if (any) {
            NodeProposal n{"EthicsApproval", std::move(props), false};
            gp.edges.push_back({"approvedBy", dataset, n.ref()});
            gp.nodes.push_back(std::move(n));
        }
    }

    for (const auto& s : report.sections) {
        if (!s.provisional) continue;
        std::string label = provisional_label(s.name);
        if (label.empty()) continue;
        Properties props{{"name", s.name}, {"dataset", doi}};
        for (const auto& [k, v] : s.fields) add_reserved_safe(props, snake_key(k), v);
        if (!s.free_text.empty()) props["text"] = text::join(s.free_text, "\n");
        NodeProposal n{label, std::move(props), false};
        gp.edges.push_back({provisional_edge_type(s.name), dataset, n.ref()});
        gp.nodes.push_back(std::move(n));
    }
    return gp;
}

} // namespace fairkg
