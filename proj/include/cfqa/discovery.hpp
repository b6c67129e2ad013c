#pragma once
// Four-agent causal discovery: an observer scores candidate pairs, the top
// fraction (plus all temporally adjacent pairs) is shortlisted, and each
// shortlisted pair runs verifier -> critic -> synthesizer. Accepted pairs
// become graph edges; every evaluated pair keeps its full transcript.

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
#include "cfqa/util.hpp"

namespace cfqa {

struct CandidateRelation {
    int from_id = 0;
    int to_id = 0;
    double observer_confidence = 0.0;

    bool operator==(const CandidateRelation&) const = default;
};

enum class AgentStage { verifier, critic, synthesizer };

inline std::string to_string(AgentStage s) {
    switch (s) {
        case AgentStage::verifier: return "verifier";
        case AgentStage::critic: return "critic";
        case AgentStage::synthesizer: return "synthesizer";
    }
    return "unknown";
}

struct AgentVerdict {
    AgentStage stage = AgentStage::verifier;
    bool is_causal = false;  // authoritative only for the synthesizer
    double confidence = 0.0;
    std::string rationale;
    std::string raw;  // verbatim response text, kept for provenance
};

struct PairTranscript {
    int from_id = 0;
    int to_id = 0;
    double observer_confidence = 0.0;
    AgentVerdict verifier;
    AgentVerdict critic;
    AgentVerdict synthesizer;
};

struct TranscriptBundle {
    std::string video_id;
    std::vector<PairTranscript> pairs;  // sorted by (from_id, to_id)
};

struct DiscoveryOptions {
    int window = 0;               // 0 = unbounded; else only pairs with to-from <= window
    double fraction = 0.2;        // observer shortlist fraction
    bool force_adjacent = true;   // adjacent pairs always reach the verifier
    bool batch_observer = true;   // one observer call per video vs one per pair
    int pair_workers = 1;         // concurrency across shortlisted pairs
};

namespace detail {

inline json steps_json(const VideoAnnotation& v) {
    json steps = json::array();
    for (const auto& s : v.steps)
        steps.push_back({{"id", s.id}, {"text", s.text}, {"timestamp_s", s.timestamp_s}});
    return steps;
}

inline double clamp_confidence(double value, const std::string& context) {
    if (value < 0.0 || value > 1.0) {
        log_warn(context + ": confidence " + std::to_string(value) + " clamped to [0,1]");
        return std::clamp(value, 0.0, 1.0);
    }
    return value;
}

inline AgentVerdict parse_verdict(const LlmResponse& res, AgentStage stage, const std::string& context) {
    const json& doc = *res.parsed;
    AgentVerdict verdict;
    verdict.stage = stage;
    verdict.raw = res.text;
    auto conf = doc.find("confidence");
    if (conf == doc.end() || !conf->is_number())
        throw DiscoveryError(context + ": " + to_string(stage) + " verdict missing \"confidence\"");
    verdict.confidence = clamp_confidence(conf->get<double>(), context);
    auto causal = doc.find("causal");
    if (stage == AgentStage::synthesizer && (causal == doc.end() || !causal->is_boolean()))
        throw DiscoveryError(context + ": synthesizer verdict missing \"causal\"");
    if (causal != doc.end() && causal->is_boolean()) verdict.is_causal = causal->get<bool>();
    if (auto r = doc.find("rationale"); r != doc.end() && r->is_string())
        verdict.rationale = r->get<std::string>();
    return verdict;
}

inline void sort_candidates(std::vector<CandidateRelation>& candidates) {
    std::sort(candidates.begin(), candidates.end(),
              [](const CandidateRelation& a, const CandidateRelation& b) {
                  if (a.observer_confidence != b.observer_confidence)
                      return a.observer_confidence > b.observer_confidence;
                  if (a.from_id != b.from_id) return a.from_id < b.from_id;
                  return a.to_id < b.to_id;
              });
}

}  // namespace detail

inline std::vector<std::pair<int, int>> forward_pairs(const VideoAnnotation& v, int window) {
    std::vector<std::pair<int, int>> pairs;
    const int n = static_cast<int>(v.steps.size());
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            if (window <= 0 || j - i <= window) pairs.emplace_back(i, j);
    return pairs;
}

// One observer call scores every forward pair within the window (or one call
// per pair when batching is off). Result is sorted by confidence, ties by ids.
inline std::vector<CandidateRelation> propose_candidates(LlmGateway& gateway, const VideoAnnotation& v,
                                                         const DiscoveryOptions& opts = {}) {
    const auto pairs = forward_pairs(v, opts.window);
    const std::string context = "video " + v.video_id + " observer";

    auto request_for = [&](const std::vector<std::pair<int, int>>& batch) {
        json pair_list = json::array();
        for (const auto& [a, b] : batch) pair_list.push_back(json::array({a, b}));
        json payload{{"video_id", v.video_id},
                     {"task_name", v.task_name},
                     {"steps", detail::steps_json(v)},
                     {"pairs", std::move(pair_list)}};
        return LlmRequest{RoleTag::observer, std::string(prompts::kObserverSystem), payload.dump(), 0.0, 0,
                          true};
    };

    std::map<std::pair<int, int>, double> scored;
    auto absorb = [&](const json& doc) {
        auto scores = doc.find("scores");
        if (scores == doc.end() || !scores->is_array())
            throw DiscoveryError(context + ": response missing \"scores\" array");
        for (const json& entry : *scores) {
            if (!entry.is_object() || !entry.contains("from") || !entry.contains("to") ||
                !entry.contains("confidence"))
                throw DiscoveryError(context + ": malformed score entry");
            const int from = entry["from"].get<int>();
            const int to = entry["to"].get<int>();
            scored[{from, to}] = detail::clamp_confidence(entry["confidence"].get<double>(), context);
        }
    };

    try {
        if (opts.batch_observer) {
            absorb(*gateway.complete(request_for(pairs)).parsed);
        } else {
            for (const auto& p : pairs) absorb(*gateway.complete(request_for({p})).parsed);
        }
    } catch (const MalformedOutputError& e) {
        throw DiscoveryError(context + ": " + e.what());
    }

    std::vector<CandidateRelation> candidates;
    candidates.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
        auto it = scored.find({a, b});
        if (it == scored.end())
            throw DiscoveryError(context + ": response did not score pair (" + std::to_string(a) + "," +
                                 std::to_string(b) + ")");
        candidates.push_back({a, b, it->second});
    }
    detail::sort_candidates(candidates);
    return candidates;
}

// Keeps max(1, floor(fraction*n)) by rank; adjacent pairs are force-included
// when requested. Output is deduplicated and sorted by (from_id, to_id).
inline std::vector<CandidateRelation> select_top(const std::vector<CandidateRelation>& candidates,
                                                 double fraction, bool force_adjacent = true) {
    if (candidates.empty()) throw DiscoveryError("select_top: empty candidate list");
    if (!(fraction > 0.0) || fraction > 1.0)
        throw DiscoveryError("select_top: fraction must be in (0,1]");

    const std::size_t keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(candidates.size()))));

    std::map<std::pair<int, int>, CandidateRelation> shortlist;
    for (std::size_t i = 0; i < keep && i < candidates.size(); ++i)
        shortlist.emplace(std::make_pair(candidates[i].from_id, candidates[i].to_id), candidates[i]);
    if (force_adjacent)
        for (const auto& c : candidates)
            if (c.to_id == c.from_id + 1) shortlist.emplace(std::make_pair(c.from_id, c.to_id), c);

    std::vector<CandidateRelation> out;
    out.reserve(shortlist.size());
    for (auto& [key, c] : shortlist) out.push_back(c);
    return out;
}

inline AgentVerdict verify_relation(LlmGateway& gateway, const CandidateRelation& pair,
                                    const VideoAnnotation& v) {
    json payload{{"video_id", v.video_id},
                 {"task_name", v.task_name},
                 {"from", pair.from_id},
                 {"from_text", v.step(pair.from_id).text},
                 {"to", pair.to_id},
                 {"to_text", v.step(pair.to_id).text},
                 {"steps", detail::steps_json(v)}};
    LlmRequest req{RoleTag::verifier, std::string(prompts::kVerifierSystem), payload.dump(), 0.0, 0, true};
    const std::string context =
        "video " + v.video_id + " pair (" + std::to_string(pair.from_id) + "," + std::to_string(pair.to_id) + ")";
    return detail::parse_verdict(gateway.complete(req), AgentStage::verifier, context);
}

inline AgentVerdict critique(LlmGateway& gateway, const CandidateRelation& pair,
                             const AgentVerdict& verifier_verdict, const VideoAnnotation& v) {
    json payload{{"video_id", v.video_id},
                 {"task_name", v.task_name},
                 {"from", pair.from_id},
                 {"from_text", v.step(pair.from_id).text},
                 {"to", pair.to_id},
                 {"to_text", v.step(pair.to_id).text},
                 {"verifier_transcript", verifier_verdict.raw}};
    LlmRequest req{RoleTag::critic, std::string(prompts::kCriticSystem), payload.dump(), 0.0, 0, true};
    const std::string context =
        "video " + v.video_id + " pair (" + std::to_string(pair.from_id) + "," + std::to_string(pair.to_id) + ")";
    return detail::parse_verdict(gateway.complete(req), AgentStage::critic, context);
}

inline AgentVerdict synthesize(LlmGateway& gateway, const CandidateRelation& pair,
                               const AgentVerdict& verifier_verdict, const AgentVerdict& critic_verdict,
                               const std::string& video_id) {
    json payload{{"video_id", video_id},
                 {"from", pair.from_id},
                 {"to", pair.to_id},
                 {"verifier_transcript", verifier_verdict.raw},
                 {"critic_transcript", critic_verdict.raw}};
    LlmRequest req{RoleTag::synthesizer, std::string(prompts::kSynthesizerSystem), payload.dump(), 0.0, 0,
                   true};
    const std::string context =
        "video " + video_id + " pair (" + std::to_string(pair.from_id) + "," + std::to_string(pair.to_id) + ")";
    return detail::parse_verdict(gateway.complete(req), AgentStage::synthesizer, context);
}

struct DiscoveryResult {
    CausalGraph graph;
    TranscriptBundle transcripts;
};

// Full per-video protocol. Deterministic under the mock backend: the
// shortlist is sorted, pair results are collected by index, and edges are
// sorted before assembly, so worker count never changes the output.
inline DiscoveryResult discover_graph(LlmGateway& gateway, const VideoAnnotation& v,
                                      const DiscoveryOptions& opts = {}) {
    try {
        const auto candidates = propose_candidates(gateway, v, opts);
        const auto shortlist = select_top(candidates, opts.fraction, opts.force_adjacent);

        auto evaluate = [&](const CandidateRelation& pair) {
            PairTranscript t;
            t.from_id = pair.from_id;
            t.to_id = pair.to_id;
            t.observer_confidence = pair.observer_confidence;
            t.verifier = verify_relation(gateway, pair, v);
            t.critic = critique(gateway, pair, t.verifier, v);
            t.synthesizer = synthesize(gateway, pair, t.verifier, t.critic, v.video_id);
            return t;
        };
        auto transcripts = parallel_map(shortlist, opts.pair_workers, evaluate);

        std::vector<CausalEdge> accepted;
        for (const auto& t : transcripts)
            if (t.synthesizer.is_causal)
                accepted.push_back({t.from_id, t.to_id, t.synthesizer.confidence,
                                    "pair " + std::to_string(t.from_id) + "->" + std::to_string(t.to_id)});
        std::sort(accepted.begin(), accepted.end(), [](const CausalEdge& a, const CausalEdge& b) {
            return std::make_pair(a.from_id, a.to_id) < std::make_pair(b.from_id, b.to_id);
        });

        std::set<int> nodes;
        for (const auto& s : v.steps) nodes.insert(s.id);

        DiscoveryResult result;
        result.graph = build_graph(v.video_id, std::move(nodes), accepted);
        result.transcripts = TranscriptBundle{v.video_id, std::move(transcripts)};
        return result;
    } catch (const DiscoveryError&) {
        throw;
    } catch (const Error& e) {
        throw DiscoveryError("video " + v.video_id + ": " + e.what());
    }
}

inline json verdict_to_json(const AgentVerdict& verdict) {
    return json{{"stage", to_string(verdict.stage)},
                {"is_causal", verdict.is_causal},
                {"confidence", verdict.confidence},
                {"rationale", verdict.rationale},
                {"raw", verdict.raw}};
}

inline json transcripts_to_json(const TranscriptBundle& bundle) {
    json pairs = json::array();
    for (const auto& t : bundle.pairs)
        pairs.push_back({{"from", t.from_id},
                         {"to", t.to_id},
                         {"observer_conf", t.observer_confidence},
                         {"verifier", verdict_to_json(t.verifier)},
                         {"critic", verdict_to_json(t.critic)},
                         {"synthesizer", verdict_to_json(t.synthesizer)}});
    return json{{"video_id", bundle.video_id}, {"pairs", std::move(pairs)}};
}

}  // namespace cfqa
