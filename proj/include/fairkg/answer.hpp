#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fairkg/graph.hpp"
#include "fairkg/intent.hpp"
#include "fairkg/retrieval.hpp"
#include "fairkg/schema.hpp"

namespace fairkg {

/// Edge in the graph cited as evidence (node ids).
struct FactSource {
    std::string subject;
    std::string predicate;
    std::string object;

    bool operator==(const FactSource&) const = default;
};

struct ChunkSource {
    std::string chunk_id;

    bool operator==(const ChunkSource&) const = default;
};

using Source = std::variant<FactSource, ChunkSource>;

nlohmann::json to_json(const Source& source);

enum class AnswerMode { Grounded, LLM };

AnswerMode answer_mode_from_string(std::string_view s);

inline constexpr std::string_view kNoGroundedInformation = "no grounded information found";

struct GroundedAnswer {
    std::string text;
    std::vector<Source> sources;
    Intent intent;
    bool empty_result = false; // true iff text is the no-information marker
};

nlohmann::json to_json(const GroundedAnswer& answer);

class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;
    virtual std::string complete(const std::string& prompt, int max_tokens) = 0;
};

struct AnswerContext {
    const PropertyGraph& graph;
    const DataModelSchema& schema;
    const VectorIndex& index;
    EmbeddingProvider* embedder = nullptr;
    CompletionProvider* completer = nullptr;
    std::size_t top_k = 5;
    int max_tokens = 512;
};

inline constexpr std::size_t kMaxContextFacts = 12;
inline constexpr std::size_t kMaxContextChunks = 6;

/// "<subject name> | <predicate> | <object name>"
std::string serialize_fact(const PropertyGraph& graph, const FactSource& fact);

/// Edges of type `facet` leaving the dataset node or one of its direct
/// out-neighbours.
std::vector<FactSource> facet_facts(const PropertyGraph& graph, const Node& dataset, std::string_view facet);

/// Prompt sent to the completion provider in LLM mode.
std::string build_prompt(std::string_view question, const PropertyGraph& graph, const std::vector<FactSource>& facts,
                         const std::vector<RetrievalHit>& chunks);

/// Throws AmbiguousComparison (from intent parsing) and ProviderError (LLM
/// mode). Never returns an unsourced non-empty answer.
GroundedAnswer answer(std::string_view question, const AnswerContext& ctx, AnswerMode mode);

/// True when the source exists: the edge is in the graph or the chunk id is
/// in the index.
bool verify_source(const Source& source, const PropertyGraph& graph, const VectorIndex& index);

} // namespace fairkg
