#include "fairkg/providers.hpp"

#include "fairkg/error.hpp"
#include "http_util.hpp"

namespace fairkg {

namespace {

nlohmann::json post_json(const std::string& endpoint, const std::string& route, const nlohmann::json& body) {
    detail::HttpTarget target;
    try {
        target = detail::parse_http_url(endpoint);
    } catch (const Error& e) {
        throw Error(ErrorCode::ProviderError, e.what());
    }
    auto cli = detail::make_client(target, 60);
    auto res = cli.Post(target.base_path + route, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::ProviderError, "provider unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw Error(ErrorCode::ProviderError, "provider returned status " + std::to_string(res->status));
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::ProviderError, "provider returned a non-JSON body");
    }
}

} // namespace

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string endpoint, std::size_t dimension)
    : endpoint_(std::move(endpoint)), dimension_(dimension) {}

std::vector<std::vector<double>> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    auto reply = post_json(endpoint_, "/embed", {{"texts", texts}});
    try {
        auto vectors = reply.at("vectors").get<std::vector<std::vector<double>>>();
        for (const auto& v : vectors) {
            if (v.size() != dimension_)
                throw Error(ErrorCode::DimensionMismatch, "provider returned dimension " + std::to_string(v.size()) +
                                                              ", configured " + std::to_string(dimension_));
        }
        return vectors;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ProviderError, std::string("malformed embedding reply: ") + e.what());
    }
}

HttpCompletionProvider::HttpCompletionProvider(std::string endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpCompletionProvider::complete(const std::string& prompt, int max_tokens) {
    auto reply = post_json(endpoint_, "/complete", {{"prompt", prompt}, {"max_tokens", max_tokens}});
    if (!reply.contains("text") || !reply["text"].is_string())
        throw Error(ErrorCode::ProviderError, "completion reply has no text");
    return reply["text"].get<std::string>();
}

} // namespace fairkg
