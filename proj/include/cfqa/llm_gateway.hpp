#pragma once
// Uniform access to chat-completion and embedding backends.
//
// The deterministic mock backend replays canned responses keyed by a stable
// request digest, which keeps the whole pipeline testable offline: same
// fixtures + same seed => byte-identical behavior, across runs and threads.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cfqa/errors.hpp"
#include "cfqa/util.hpp"

namespace cfqa {

enum class RoleTag { observer, verifier, critic, synthesizer, generator, judge, answerer };

inline std::string to_string(RoleTag tag) {
    switch (tag) {
        case RoleTag::observer: return "observer";
        case RoleTag::verifier: return "verifier";
        case RoleTag::critic: return "critic";
        case RoleTag::synthesizer: return "synthesizer";
        case RoleTag::generator: return "generator";
        case RoleTag::judge: return "judge";
        case RoleTag::answerer: return "answerer";
    }
    return "unknown";
}

struct LlmRequest {
    RoleTag role_tag = RoleTag::observer;
    std::string system_prompt;
    std::string user_payload;
    double temperature = 0.0;
    std::uint64_t seed = 0;
    bool expects_json = true;
};

struct LlmResponse {
    std::string text;
    std::optional<json> parsed;  // present iff expects_json and parsing succeeded
    std::string backend_id;
    int attempt_count = 1;
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }

    double cosine(const EmbeddingVector& other) const {
        if (values.size() != other.values.size())
            throw ValidationError("cosine: dimension mismatch");
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            dot += values[i] * other.values[i];
            na += values[i] * values[i];
            nb += other.values[i] * other.values[i];
        }
        if (na == 0.0 || nb == 0.0) throw ValidationError("cosine: zero-norm vector");
        return dot / (std::sqrt(na) * std::sqrt(nb));
    }
};

// Temperature and seed are deliberately left out so fixtures survive tuning.
inline std::string request_digest(const LlmRequest& req) {
    std::string key = to_string(req.role_tag);
    key.push_back('\x1f');
    key += req.system_prompt;
    key.push_back('\x1f');
    key += req.user_payload;
    return stable_hash(key);
}

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string id() const = 0;
    // Returns raw response text. Throws TransportError (retryable) or
    // FixtureMissError (not retryable).
    virtual std::string complete_raw(const LlmRequest& req) = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = 0;
    virtual std::size_t dim() const = 0;
    virtual EmbeddingVector embed(const std::string& text) = 0;
};

inline EmbeddingProvider::~EmbeddingProvider() = default;

namespace detail {

// Accept a bare JSON object, or one wrapped in prose/code fences, as long as
// exactly one object can be carved out of the text.
inline std::optional<json> parse_single_object(const std::string& text) {
    auto try_parse = [](const std::string& s) -> std::optional<json> {
        json parsed = json::parse(s, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
        return parsed;
    };
    if (auto direct = try_parse(text)) return direct;
    const auto first = text.find('{');
    const auto last = text.rfind('}');
    if (first == std::string::npos || last == std::string::npos || last <= first) return std::nullopt;
    return try_parse(text.substr(first, last - first + 1));
}

}  // namespace detail

// Wraps a backend with the JSON-retry loop and an in-flight cap.
class LlmGateway {
public:
    explicit LlmGateway(std::shared_ptr<ChatBackend> backend, int retry_limit = 3,
                        int in_flight_cap = 8)
        : backend_(std::move(backend)),
          retry_limit_(retry_limit > 0 ? retry_limit : 1),
          slots_(in_flight_cap > 0 ? in_flight_cap : 1) {}

    LlmResponse complete(const LlmRequest& req) {
        slots_.acquire();
        struct Release {
            std::counting_semaphore<>& s;
            ~Release() { s.release(); }
        } release{slots_};

        std::string last_text;
        for (int attempt = 1; attempt <= retry_limit_; ++attempt) {
            std::string text;
            try {
                text = backend_->complete_raw(req);
            } catch (const TransportError& e) {
                if (attempt == retry_limit_)
                    throw GatewayError("backend transport failed after " + std::to_string(attempt) +
                                       " attempts: " + e.what());
                std::this_thread::sleep_for(std::chrono::milliseconds(10 * attempt));
                continue;
            }
            if (!req.expects_json)
                return LlmResponse{std::move(text), std::nullopt, backend_->id(), attempt};
            if (auto parsed = detail::parse_single_object(text))
                return LlmResponse{std::move(text), std::move(parsed), backend_->id(), attempt};
            last_text = std::move(text);
        }
        throw MalformedOutputError("backend returned no valid JSON object in " +
                                       std::to_string(retry_limit_) + " attempts",
                                   last_text, retry_limit_);
    }

    ChatBackend& backend() { return *backend_; }

private:
    std::shared_ptr<ChatBackend> backend_;
    int retry_limit_;
    std::counting_semaphore<> slots_;
};

// L2-normalized hashed bag-of-tokens. Texts sharing words score a higher
// cosine; token-disjoint texts are orthogonal (up to bucket collisions).
class HashedTokenEmbedder : public EmbeddingProvider {
public:
    explicit HashedTokenEmbedder(std::size_t dim = 256) : dim_(dim) {}

    std::size_t dim() const override { return dim_; }

    EmbeddingVector embed(const std::string& text) override {
        {
            std::lock_guard lock(mu_);
            if (auto it = cache_.find(text); it != cache_.end()) return it->second;
        }
        const auto tokens = tokenize(text);
        if (tokens.empty()) throw ValidationError("embed: empty text");
        EmbeddingVector v;
        v.values.assign(dim_, 0.0);
        for (const auto& tok : tokens) v.values[fnv1a64(tok) % dim_] += 1.0;
        double norm = 0.0;
        for (double x : v.values) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v.values) x /= norm;
        std::lock_guard lock(mu_);
        cache_.emplace(text, v);
        return v;
    }

private:
    std::size_t dim_;
    std::mutex mu_;
    std::map<std::string, EmbeddingVector> cache_;
};

// Scripted replay backend. In strict mode an unmatched digest is an error;
// in lenient mode it gets a seeded deterministic canned response.
class MockBackend : public ChatBackend, public HashedTokenEmbedder {
public:
    MockBackend(std::map<std::string, std::string> fixtures, bool strict, std::uint64_t fallback_seed,
                std::size_t embed_dim = 256)
        : HashedTokenEmbedder(embed_dim),
          fixtures_(std::move(fixtures)),
          strict_(strict),
          fallback_seed_(fallback_seed) {}

    static std::map<std::string, std::string> load_fixture_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open fixture file: " + path);
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded() || !doc.is_object())
            throw UsageError("fixture file is not a JSON object: " + path);
        std::map<std::string, std::string> fixtures;
        for (const auto& [digest, text] : doc.items()) {
            if (!text.is_string()) throw UsageError("fixture value for " + digest + " is not a string");
            fixtures.emplace(digest, text.get<std::string>());
        }
        return fixtures;
    }

    std::string id() const override { return "mock"; }

    std::string complete_raw(const LlmRequest& req) override {
        const std::string digest = request_digest(req);
        if (auto it = fixtures_.find(digest); it != fixtures_.end()) return it->second;
        if (strict_) throw FixtureMissError("no fixture for request digest " + digest, digest);
        std::mt19937_64 rng(fallback_seed_ ^ fnv1a64(digest));
        return json{{"canned", true}, {"token", to_hex(rng())}}.dump();
    }

    std::size_t fixture_count() const { return fixtures_.size(); }

private:
    std::map<std::string, std::string> fixtures_;
    bool strict_;
    std::uint64_t fallback_seed_;
};

}  // namespace cfqa
