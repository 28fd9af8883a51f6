#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairkg/answer.hpp"
#include "fairkg/curation.hpp"
#include "fairkg/error.hpp"

namespace fairkg {

struct ServiceConfig {
    std::optional<std::string> store_path;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::string> embedding_endpoint;  // hashing embedder when absent
    std::optional<std::string> completion_endpoint; // llm mode unavailable when absent
    std::size_t embedding_dimension = 256;
    std::size_t top_k = 5;
    std::size_t chunk_tokens = 300;
    std::size_t chunk_overlap = 50;
    std::vector<KeywordRule> keyword_rules;
};

/// Throws InvalidArgument on unknown value types, IoError when unreadable.
ServiceConfig service_config_from_json(const nlohmann::json& doc);
ServiceConfig load_service_config(const std::string& path);

struct SessionMessage {
    std::string role; // "user" or "system"
    std::string text;
    nlohmann::json sources = nlohmann::json::array();

    bool operator==(const SessionMessage&) const = default;
};

/// HTTP status for an error code.
int http_status(ErrorCode code);
/// {error_code, message, details}
nlohmann::json error_body(const Error& e);

/// REST front end over a KnowledgeBase. Requests are served concurrently;
/// graph mutations go through the knowledge base's writer lock and every
/// session has its own lock.
class ChatService {
public:
    ChatService(std::shared_ptr<KnowledgeBase> kb, std::shared_ptr<CompletionProvider> completer = nullptr,
                std::size_t top_k = 5);
    ~ChatService();
    ChatService(const ChatService&) = delete;
    ChatService& operator=(const ChatService&) = delete;

    /// Builds the knowledge base and providers described by `config`.
    static std::unique_ptr<ChatService> from_config(const ServiceConfig& config);

    // Session operations, also reachable over HTTP.
    std::string create_session();
    GroundedAnswer query(const std::string& session_id, const std::string& text, AnswerMode mode);
    std::vector<SessionMessage> session_log(const std::string& session_id) const;

    /// Binds and serves until stop(). Returns false when the bind fails.
    bool listen(const std::string& host, int port);
    /// Binds to a free port and returns it (or -1); serve with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();

    KnowledgeBase& knowledge_base() { return *kb_; }

private:
    struct Impl;
    std::shared_ptr<KnowledgeBase> kb_;
    std::unique_ptr<Impl> impl_;
};

} // namespace fairkg
