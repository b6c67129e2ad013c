#pragma once
// Scoring for sampled model outputs: a causal-consistency reward (edge-set
// F1 against the relevant subgraph), a visual-grounding reward (fraction of
// mentioned events present in the annotation), their weighted combination,
// and group-relative advantages over K samples. No parameter updates happen
// here; the stack ends at advantages.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cfqa/annotations.hpp"
#include "cfqa/causal_graph.hpp"
#include "cfqa/errors.hpp"
#include "cfqa/llm_gateway.hpp"
#include "cfqa/prompts.hpp"
#include "cfqa/qgen.hpp"
#include "cfqa/util.hpp"

namespace cfqa {

struct CausalClaim {
    int cause_step = 0;
    int effect_step = 0;

    auto operator<=>(const CausalClaim&) const = default;
};

struct MentionedEvent {
    std::string text;
    bool grounded = false;
    std::optional<int> matched_step;
};

struct ModelOutput {
    std::string question_id;
    std::string cot_text;
    std::string answer;
    std::vector<CausalClaim> claims;          // populated by extract_claims
    std::vector<MentionedEvent> mentioned_events;  // populated by extract_claims
};

struct RewardScore {
    double r_causal = 0.0;
    double r_visual = 0.0;
    double alpha = 0.5;
    double beta = 0.5;
    double total = 0.0;
};

struct GroupResult {
    std::vector<double> rewards;
    std::vector<double> advantages;
};

struct ExtractionOptions {
    double grounding_cosine = 0.8;
};

// Judge call mapping chain-of-thought assertions to step-id claims, then a
// deterministic grounding pass over the mentioned events: an event counts as
// grounded when it matches a step text after normalization or sits within
// the cosine threshold of one.
inline std::pair<std::vector<CausalClaim>, std::vector<MentionedEvent>> extract_claims(
    LlmGateway& gateway, EmbeddingProvider& embedder, const std::string& cot_text,
    const VideoAnnotation& v, const ExtractionOptions& opts = {}) {
    if (normalize_text(cot_text).empty()) return {{}, {}};

    json steps = json::array();
    for (const auto& s : v.steps) steps.push_back({{"id", s.id}, {"text", s.text}});
    json payload{{"video_id", v.video_id}, {"cot", cot_text}, {"steps", std::move(steps)}};
    LlmRequest req{RoleTag::judge, std::string(prompts::kClaimJudgeSystem), payload.dump(), 0.0, 0, true};

    json doc;
    try {
        doc = *gateway.complete(req).parsed;
    } catch (const MalformedOutputError& e) {
        throw ExtractionError("claim judge: " + std::string(e.what()));
    }

    std::vector<CausalClaim> claims;
    if (auto it = doc.find("claims"); it != doc.end() && it->is_array()) {
        for (const json& c : *it) {
            if (!c.is_object() || !c.contains("cause_step") || !c.contains("effect_step")) continue;
            CausalClaim claim{c["cause_step"].get<int>(), c["effect_step"].get<int>()};
            if (!v.has_step(claim.cause_step) || !v.has_step(claim.effect_step)) {
                log_warn("claim judge referenced unknown step ids (" + std::to_string(claim.cause_step) +
                         "," + std::to_string(claim.effect_step) + "); claim dropped");
                continue;
            }
            claims.push_back(claim);
        }
    }

    std::vector<MentionedEvent> events;
    if (auto it = doc.find("mentioned_events"); it != doc.end() && it->is_array()) {
        for (const json& e : *it) {
            if (!e.is_string()) continue;
            MentionedEvent event;
            event.text = e.get<std::string>();
            const std::string norm = normalize_text(event.text);
            std::optional<EmbeddingVector> event_vec;
            if (!norm.empty()) event_vec = embedder.embed(event.text);
            for (const auto& s : v.steps) {
                if (normalize_text(s.text) == norm) {
                    event.grounded = true;
                    event.matched_step = s.id;
                    break;
                }
                if (event_vec && event_vec->cosine(embedder.embed(s.text)) >= opts.grounding_cosine) {
                    event.grounded = true;
                    event.matched_step = s.id;
                    break;
                }
            }
            events.push_back(std::move(event));
        }
    }
    return {std::move(claims), std::move(events)};
}

// Edges of g with both endpoints on a directed path from the question's
// intervention to its target. L3 questions have no step endpoints, so their
// relevant edge set is empty.
inline std::set<std::pair<int, int>> relevant_edges(const CausalGraph& g, const CounterfactualQuestion& q) {
    if (!q.intervention.step_id || !q.target.step_id) return {};
    const auto nodes = detail::chain_nodes(g, *q.intervention.step_id, *q.target.step_id);
    std::set<std::pair<int, int>> edges;
    for (const auto& e : g.edges)
        if (nodes.count(e.from_id) && nodes.count(e.to_id)) edges.emplace(e.from_id, e.to_id);
    return edges;
}

// F1 between claimed links and the gold edge set. Zero claims score 1.0
// only when the gold answer rejects the premise (nothing to claim), else 0.
inline double r_causal(const std::vector<CausalClaim>& claims,
                       const std::set<std::pair<int, int>>& gold_edges, bool premise_invalid_gold) {
    std::set<std::pair<int, int>> claimed;
    for (const auto& c : claims) claimed.emplace(c.cause_step, c.effect_step);
    if (claimed.empty()) return premise_invalid_gold ? 1.0 : 0.0;

    std::size_t tp = 0;
    for (const auto& c : claimed)
        if (gold_edges.count(c)) ++tp;
    const double precision = static_cast<double>(tp) / static_cast<double>(claimed.size());
    const double recall =
        gold_edges.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold_edges.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

// Fraction of mentioned events grounded in the annotation; vacuously 1.0.
inline double r_visual(const std::vector<MentionedEvent>& mentioned_events, const VideoAnnotation&) {
    if (mentioned_events.empty()) return 1.0;
    std::size_t grounded = 0;
    for (const auto& e : mentioned_events)
        if (e.grounded) ++grounded;
    return static_cast<double>(grounded) / static_cast<double>(mentioned_events.size());
}

inline RewardScore total_reward(const ModelOutput& output, const VideoAnnotation& v,
                                const CounterfactualQuestion& q, const CausalGraph& g,
                                double alpha = 0.5, double beta = 0.5) {
    if (alpha < 0.0 || beta < 0.0) throw ValidationError("total_reward: weights must be non-negative");
    RewardScore score;
    score.alpha = alpha;
    score.beta = beta;
    score.r_causal =
        r_causal(output.claims, relevant_edges(g, q), q.gold_answer == GoldAnswer::premise_invalid);
    score.r_visual = r_visual(output.mentioned_events, v);
    score.total = alpha * score.r_causal + beta * score.r_visual;
    return score;
}

// Group-relative advantages: per-sample z-score with the std floored at
// 1e-8, so an all-equal group gets exactly zero advantages.
inline GroupResult group_advantages(const std::vector<double>& rewards, bool population_std = true) {
    const std::size_t k = rewards.size();
    if (k < 2) throw ValidationError("group_advantages: need at least 2 samples");

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(k);

    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(population_std ? k : k - 1);
    const double std_dev = std::max(std::sqrt(var), 1e-8);

    GroupResult result;
    result.rewards = rewards;
    result.advantages.reserve(k);
    for (double r : rewards) result.advantages.push_back((r - mean) / std_dev);
    return result;
}

inline json reward_report_json(const std::string& question_id, const std::vector<RewardScore>& scores,
                               const GroupResult& group, double alpha, double beta) {
    json samples = json::array();
    for (std::size_t i = 0; i < scores.size(); ++i)
        samples.push_back({{"sample_id", static_cast<int>(i)},
                           {"r_causal", scores[i].r_causal},
                           {"r_visual", scores[i].r_visual},
                           {"total", scores[i].total},
                           {"advantage", group.advantages[i]}});
    return json{{"question_id", question_id},
                {"samples", std::move(samples)},
                {"alpha", alpha},
                {"beta", beta},
                {"k", static_cast<int>(scores.size())}};
}

}  // namespace cfqa
