#pragma once

#include <string>
#include <vector>

#include "fairkg/answer.hpp"
#include "fairkg/retrieval.hpp"

namespace fairkg {

/// POST {endpoint}/embed {texts:[...]} -> {vectors:[[...]]}
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string endpoint, std::size_t dimension);

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::string endpoint_;
    std::size_t dimension_;
};

/// POST {endpoint}/complete {prompt, max_tokens} -> {text}
class HttpCompletionProvider final : public CompletionProvider {
public:
    explicit HttpCompletionProvider(std::string endpoint);

    std::string complete(const std::string& prompt, int max_tokens) override;

private:
    std::string endpoint_;
};

} // namespace fairkg
