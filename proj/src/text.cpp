#include "fairkg/text.hpp"
#include "fairkg/error.hpp"

#include <algorithm>
#include <cctype>

namespace fairkg {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NotProvisional: return "NotProvisional";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::InvalidIdentifier: return "InvalidIdentifier";
    case ErrorCode::MissingIdentifier: return "MissingIdentifier";
    case ErrorCode::MissingTitle: return "MissingTitle";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::MalformedPattern: return "MalformedPattern";
    case ErrorCode::DuplicatePriority: return "DuplicatePriority";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::DatasetNotFound: return "DatasetNotFound";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::CorruptStore: return "CorruptStore";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::AmbiguousComparison: return "AmbiguousComparison";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DuplicateCell: return "DuplicateCell";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SessionNotFound: return "SessionNotFound";
    }
    return "Unknown";
}

namespace text {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
} // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool pending = false;
    for (char c : s) {
        if (is_space(c)) {
            pending = !out.empty();
            continue;
        }
        if (pending) out.push_back(' ');
        pending = false;
        out.push_back(c);
    }
    return out;
}

std::string normalize_name(std::string_view s) { return to_lower(collapse_whitespace(s)); }

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_space(c)) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> split_lines(std::string_view s) {
    auto lines = split(s, '\n');
    for (auto& l : lines) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
    }
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::vector<std::string> key_words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (!is_alnum(c)) {
            flush();
            continue;
        }
        bool upper = std::isupper(static_cast<unsigned char>(c)) != 0;
        if (upper && !cur.empty()) {
            bool prev_lower = std::islower(static_cast<unsigned char>(s[i - 1])) != 0 ||
                              std::isdigit(static_cast<unsigned char>(s[i - 1])) != 0;
            bool next_lower = i + 1 < s.size() && std::islower(static_cast<unsigned char>(s[i + 1])) != 0;
            // "robotModel" and "URLPath" both split before the capital that starts a word.
            if (prev_lower || next_lower) flush();
        }
        cur.push_back(lower(c));
    }
    flush();
    return out;
}

std::string stem(std::string_view word) {
    if (word.size() > 3 && word.back() == 's' && word[word.size() - 2] != 's')
        return std::string(word.substr(0, word.size() - 1));
    return std::string(word);
}

std::string fold_for_matching(std::string_view s) {
    std::string out;
    bool pending = false;
    for (char c : s) {
        if (!is_alnum(c)) {
            pending = !out.empty();
            continue;
        }
        if (pending) out.push_back(' ');
        pending = false;
        out.push_back(lower(c));
    }
    return out;
}

bool is_all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) != 0;
    });
}

std::string strip_leading_zeros(std::string_view s) {
    if (!is_all_digits(s)) return std::string(s);
    auto pos = s.find_first_not_of('0');
    if (pos == std::string_view::npos) return "0";
    return std::string(s.substr(pos));
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (lower(s[i]) != lower(prefix[i])) return false;
    }
    return true;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

} // namespace text
} // namespace fairkg
