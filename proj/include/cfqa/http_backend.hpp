#pragma once
// Remote chat-completion backend speaking the OpenAI-style wire format.
// Credentials come from the LLM_API_KEY environment variable, base URL and
// model names from config.

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "cfqa/errors.hpp"
#include "cfqa/llm_gateway.hpp"

namespace cfqa {

class HttpBackend : public ChatBackend {
public:
    HttpBackend(std::string base_url, std::string model, std::string completion_path = "/v1/chat/completions")
        : base_url_(std::move(base_url)), model_(std::move(model)), path_(std::move(completion_path)) {
        if (base_url_.empty()) throw UsageError("http backend: base URL is empty");
        if (const char* key = std::getenv("LLM_API_KEY")) api_key_ = key;
    }

    std::string id() const override { return "http:" + model_; }

    std::string complete_raw(const LlmRequest& req) override {
        json body{{"model", model_},
                  {"temperature", req.temperature},
                  {"seed", req.seed},
                  {"messages",
                   json::array({json{{"role", "system"}, {"content", req.system_prompt}},
                                json{{"role", "user"}, {"content", req.user_payload}}})}};

        httplib::Client client(base_url_);
        client.set_connection_timeout(10);
        client.set_read_timeout(120);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (!res) throw TransportError("http backend: no response from " + base_url_);
        if (res->status >= 500)
            throw TransportError("http backend: status " + std::to_string(res->status));
        if (res->status != 200)
            throw GatewayError("http backend: status " + std::to_string(res->status) + ": " + res->body);

        json doc = json::parse(res->body, nullptr, false);
        if (doc.is_discarded())
            throw GatewayError("http backend: response body is not JSON");
        try {
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
            throw GatewayError("http backend: unexpected response shape: " + res->body);
        }
    }

private:
    std::string base_url_;
    std::string model_;
    std::string path_;
    std::string api_key_;
};

// Remote embedding provider (OpenAI-style /v1/embeddings).
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string base_url, std::string model, std::size_t dim,
                          std::string path = "/v1/embeddings")
        : base_url_(std::move(base_url)), model_(std::move(model)), dim_(dim), path_(std::move(path)) {
        if (const char* key = std::getenv("LLM_API_KEY")) api_key_ = key;
    }

    std::size_t dim() const override { return dim_; }

    EmbeddingVector embed(const std::string& text) override {
        if (text.empty()) throw ValidationError("embed: empty text");
        httplib::Client client(base_url_);
        client.set_connection_timeout(10);
        client.set_read_timeout(60);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        json body{{"model", model_}, {"input", text}};
        auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (!res || res->status != 200)
            throw GatewayError("http embeddings: request failed");
        json doc = json::parse(res->body, nullptr, false);
        if (doc.is_discarded()) throw GatewayError("http embeddings: response body is not JSON");
        EmbeddingVector v;
        try {
            v.values = doc.at("data").at(0).at("embedding").get<std::vector<double>>();
        } catch (const json::exception&) {
            throw GatewayError("http embeddings: unexpected response shape");
        }
        if (v.values.size() != dim_)
            throw GatewayError("http embeddings: expected dim " + std::to_string(dim_) + ", got " +
                               std::to_string(v.values.size()));
        return v;
    }

private:
    std::string base_url_;
    std::string model_;
    std::size_t dim_;
    std::string path_;
    std::string api_key_;
};

}  // namespace cfqa
