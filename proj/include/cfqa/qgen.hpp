#pragma once
// Counterfactual question generation for filtered videos, three levels:
//
//   L1  intervention on a step adjacent to the target, with no edge between
//       them (tests the adjacency = causality fallacy; gold answer "yes")
//   L2  intervention >= 2 causal hops upstream of the target, no direct
//       edge (chain collapses; gold answer "no" unless the target has an
//       incoming path from outside the chain)
//   L3  intervention on a plausible decoy action absent from the steps
//       (gold answer "premise_invalid")
//
// The generator LLM proposes candidates; the graph is the source of truth,
// so every candidate is re-validated structurally and silently dropped when
// it does not satisfy its level's invariant. Surviving candidates then face
// two independent answer models; a question is kept only when both answer
// the gold answer.

#include <algorithm>
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

enum class Level { L1 = 1, L2 = 2, L3 = 3 };

inline int level_number(Level l) { return static_cast<int>(l); }

enum class GoldAnswer { yes, no, premise_invalid };

inline std::string to_string(GoldAnswer a) {
    switch (a) {
        case GoldAnswer::yes: return "yes";
        case GoldAnswer::no: return "no";
        case GoldAnswer::premise_invalid: return "premise_invalid";
    }
    return "unknown";
}

// Maps free text onto the answer enum: a leading yes/no wins, otherwise any
// mention of an invalid premise. Returns nullopt when nothing matches.
inline std::optional<GoldAnswer> normalize_answer(const std::string& text) {
    const std::string norm = normalize_text(text);
    if (norm == "yes" || norm.starts_with("yes ")) return GoldAnswer::yes;
    if (norm == "no" || norm.starts_with("no ")) return GoldAnswer::no;
    if (norm.find("premise") != std::string::npos && norm.find("invalid") != std::string::npos)
        return GoldAnswer::premise_invalid;
    return std::nullopt;
}

enum class QuestionStatus { candidate, kept, dropped };

inline std::string to_string(QuestionStatus s) {
    switch (s) {
        case QuestionStatus::candidate: return "candidate";
        case QuestionStatus::kept: return "kept";
        case QuestionStatus::dropped: return "dropped";
    }
    return "unknown";
}

// A step id for L1/L2 endpoints; free text for L3 decoys and goals.
struct QuestionEndpoint {
    std::optional<int> step_id;
    std::string text;

    std::string key() const { return step_id ? std::to_string(*step_id) : normalize_text(text); }

    json to_json() const {
        if (step_id) return json(*step_id);
        return json(text);
    }
};

struct CounterfactualQuestion {
    std::string question_id;
    std::string video_id;
    Level level = Level::L1;
    QuestionEndpoint intervention;
    QuestionEndpoint target;
    std::string question_text;
    GoldAnswer gold_answer = GoldAnswer::yes;
    std::string rationale;
    QuestionStatus status = QuestionStatus::candidate;
    std::string drop_reason;
};

inline std::string question_id_for(const std::string& video_id, Level level,
                                   const QuestionEndpoint& intervention, const QuestionEndpoint& target) {
    std::string key = video_id;
    key.push_back('\x1f');
    key += std::to_string(level_number(level));
    key.push_back('\x1f');
    key += intervention.key();
    key.push_back('\x1f');
    key += target.key();
    return "q" + stable_hash(key);
}

struct VerifierVerdictEntry {
    std::string answer;
    bool correct = false;
};

struct VerificationRecord {
    std::string question_id;
    std::vector<VerifierVerdictEntry> verdicts;  // two entries
    bool kept = false;
};

// Adjacent step pairs with no connecting edge.
inline std::vector<std::pair<int, int>> enumerate_l1_sites(const CausalGraph& g, const VideoAnnotation& v) {
    std::set<int> step_ids;
    for (const auto& s : v.steps) step_ids.insert(s.id);
    if (step_ids != g.node_ids)
        throw ValidationError(g.video_id + ": graph nodes do not match annotation step ids");
    std::vector<std::pair<int, int>> sites;
    for (const auto& [a, b] : adjacent_pairs(v))
        if (!g.has_edge(a.id, b.id)) sites.emplace_back(a.id, b.id);
    return sites;
}

// Ordered pairs (s, t) with a directed path of >= 2 edges and no direct
// edge. With forward edges, reachability without a direct edge implies
// every path has >= 2 hops.
inline std::vector<std::pair<int, int>> enumerate_l2_sites(const CausalGraph& g) {
    std::map<int, std::set<int>> successors;
    for (const auto& e : g.edges) successors[e.from_id].insert(e.to_id);

    std::map<int, std::set<int>> reach;  // filled in descending node order
    for (auto it = g.node_ids.rbegin(); it != g.node_ids.rend(); ++it) {
        std::set<int> r;
        for (int next : successors[*it]) {
            r.insert(next);
            r.insert(reach[next].begin(), reach[next].end());
        }
        reach[*it] = std::move(r);
    }

    std::vector<std::pair<int, int>> sites;
    for (int s : g.node_ids)
        for (int t : reach[s])
            if (!successors[s].count(t)) sites.emplace_back(s, t);
    std::sort(sites.begin(), sites.end());
    return sites;
}

namespace detail {

// Nodes lying on some directed path from s to t, endpoints included.
inline std::set<int> chain_nodes(const CausalGraph& g, int s, int t) {
    std::map<int, std::set<int>> successors;
    for (const auto& e : g.edges) successors[e.from_id].insert(e.to_id);
    std::map<int, std::set<int>> reach;
    for (auto it = g.node_ids.rbegin(); it != g.node_ids.rend(); ++it) {
        std::set<int> r;
        for (int next : successors[*it]) {
            r.insert(next);
            r.insert(reach[next].begin(), reach[next].end());
        }
        reach[*it] = std::move(r);
    }
    std::set<int> nodes{s, t};
    for (int n : g.node_ids)
        if (reach[s].count(n) && reach[n].count(t)) nodes.insert(n);
    return nodes;
}

// True when t has a cause that is neither the intervention nor downstream of
// it; the chain-collapse argument does not apply then.
inline bool has_outside_parent(const CausalGraph& g, int intervention, int target) {
    std::map<int, std::set<int>> successors;
    for (const auto& e : g.edges) successors[e.from_id].insert(e.to_id);
    std::map<int, std::set<int>> reach;
    for (auto it = g.node_ids.rbegin(); it != g.node_ids.rend(); ++it) {
        std::set<int> r;
        for (int next : successors[*it]) {
            r.insert(next);
            r.insert(reach[next].begin(), reach[next].end());
        }
        reach[*it] = std::move(r);
    }
    for (const auto& e : g.edges) {
        if (e.to_id != target) continue;
        if (e.from_id == intervention) continue;
        if (!reach[intervention].count(e.from_id)) return true;
    }
    return false;
}

}  // namespace detail

// Step ids whose outlier score exceeds the video average: the "critical or
// non-default actions" hint handed to the generator prompt.
inline std::vector<int> key_actions(const VideoAnnotation& v, EmbeddingProvider& embedder) {
    EmbeddingMap embeddings;
    for (const auto& s : v.steps) embeddings[s.id] = embedder.embed(s.text).values;
    std::map<int, double> scores;
    double sum = 0.0;
    for (const auto& s : v.steps) {
        scores[s.id] = outlier_score(s.id, embeddings);
        sum += scores[s.id];
    }
    const double avg = sum / static_cast<double>(v.steps.size());
    std::vector<int> keys;
    for (const auto& [id, score] : scores)
        if (score > avg) keys.push_back(id);
    return keys;
}

struct GenerationOptions {
    int per_level = 10;
    double decoy_cosine_max = 0.95;
};

// One generator call per video; every returned candidate is re-validated
// against its level's structural invariant (the graph wins over the LLM).
inline std::vector<CounterfactualQuestion> generate_candidates(LlmGateway& gateway,
                                                               EmbeddingProvider& embedder,
                                                               const VideoAnnotation& v,
                                                               const CausalGraph& g,
                                                               const GenerationOptions& opts = {}) {
    const auto l1_sites = enumerate_l1_sites(g, v);
    const auto l2_sites = enumerate_l2_sites(g);
    const std::set<std::pair<int, int>> l1_set(l1_sites.begin(), l1_sites.end());
    const std::set<std::pair<int, int>> l2_set(l2_sites.begin(), l2_sites.end());

    json causal_links = json::array();
    for (const auto& e : g.edges) causal_links.push_back(json::array({e.from_id, e.to_id}));
    json key_ids = json::array();
    for (int id : key_actions(v, embedder)) key_ids.push_back(id);
    json steps = json::array();
    for (const auto& s : v.steps)
        steps.push_back({{"id", s.id}, {"text", s.text}, {"timestamp_s", s.timestamp_s}});
    json payload{{"video_id", v.video_id},
                 {"task_name", v.task_name},
                 {"steps", std::move(steps)},
                 {"causal_links", std::move(causal_links)},
                 {"key_actions", std::move(key_ids)}};

    LlmRequest req{RoleTag::generator, prompts::generator_system(opts.per_level), payload.dump(), 0.0, 0,
                   true};
    json doc;
    try {
        doc = *gateway.complete(req).parsed;
    } catch (const MalformedOutputError& e) {
        throw GenerationError("video " + v.video_id + " generator: " + e.what());
    }

    std::vector<CounterfactualQuestion> questions;

    auto base_question = [&](Level level) {
        CounterfactualQuestion q;
        q.video_id = v.video_id;
        q.level = level;
        return q;
    };
    auto finish = [&](CounterfactualQuestion q) {
        q.question_id = question_id_for(q.video_id, q.level, q.intervention, q.target);
        questions.push_back(std::move(q));
    };
    auto take_level = [&](const char* field) {
        std::vector<json> entries;
        if (auto it = doc.find(field); it != doc.end() && it->is_array())
            for (const json& e : *it) {
                if (static_cast<int>(entries.size()) >= opts.per_level) break;
                entries.push_back(e);
            }
        return entries;
    };

    for (const json& entry : take_level("level1")) {
        CounterfactualQuestion q = base_question(Level::L1);
        q.gold_answer = GoldAnswer::yes;
        try {
            const int from = entry.at("intervention").get<int>();
            const int to = entry.at("target").get<int>();
            q.intervention = {from, v.has_step(from) ? v.step(from).text : ""};
            q.target = {to, v.has_step(to) ? v.step(to).text : ""};
            q.question_text = entry.at("question").get<std::string>();
            if (entry.contains("rationale")) q.rationale = entry["rationale"].get<std::string>();
            if (!l1_set.count({from, to})) {
                q.status = QuestionStatus::dropped;
                q.drop_reason = "structural";
            }
        } catch (const json::exception&) {
            q.status = QuestionStatus::dropped;
            q.drop_reason = "structural";
        }
        finish(std::move(q));
    }

    for (const json& entry : take_level("level2")) {
        CounterfactualQuestion q = base_question(Level::L2);
        try {
            const int from = entry.at("intervention").get<int>();
            const int to = entry.at("target").get<int>();
            q.intervention = {from, v.has_step(from) ? v.step(from).text : ""};
            q.target = {to, v.has_step(to) ? v.step(to).text : ""};
            q.question_text = entry.at("question").get<std::string>();
            if (entry.contains("rationale")) q.rationale = entry["rationale"].get<std::string>();
            if (!l2_set.count({from, to})) {
                q.status = QuestionStatus::dropped;
                q.drop_reason = "structural";
                q.gold_answer = GoldAnswer::no;
            } else {
                // Chain collapse gives "no"; the generator may claim "yes"
                // only when the target has a cause outside the chain.
                q.gold_answer = GoldAnswer::no;
                const auto claimed = normalize_answer(entry.value("answer", ""));
                if (claimed == GoldAnswer::yes && detail::has_outside_parent(g, from, to))
                    q.gold_answer = GoldAnswer::yes;
            }
        } catch (const json::exception&) {
            q.status = QuestionStatus::dropped;
            q.drop_reason = "structural";
        }
        finish(std::move(q));
    }

    std::vector<EmbeddingVector> step_embeddings;
    step_embeddings.reserve(v.steps.size());
    for (const auto& s : v.steps) step_embeddings.push_back(embedder.embed(s.text));

    for (const json& entry : take_level("level3")) {
        CounterfactualQuestion q = base_question(Level::L3);
        q.gold_answer = GoldAnswer::premise_invalid;
        try {
            const std::string decoy = entry.at("decoy").get<std::string>();
            q.intervention = {std::nullopt, decoy};
            q.target = {std::nullopt, entry.value("goal", v.task_name)};
            q.question_text = entry.at("question").get<std::string>();
            if (entry.contains("rationale")) q.rationale = entry["rationale"].get<std::string>();

            bool absent = !normalize_text(decoy).empty();
            const auto decoy_norm = normalize_text(decoy);
            for (const auto& s : v.steps)
                if (normalize_text(s.text) == decoy_norm) absent = false;
            if (absent) {
                const auto decoy_vec = embedder.embed(decoy);
                for (const auto& vec : step_embeddings)
                    if (decoy_vec.cosine(vec) >= opts.decoy_cosine_max) absent = false;
            }
            if (!absent) {
                q.status = QuestionStatus::dropped;
                q.drop_reason = "structural";
            }
        } catch (const json::exception&) {
            q.status = QuestionStatus::dropped;
            q.drop_reason = "structural";
        }
        finish(std::move(q));
    }

    return questions;
}

struct VerificationOptions {
    bool difficulty_mode = false;  // also drop questions answerable without annotations
    int workers = 1;
};

namespace detail {

inline std::string answer_of(LlmGateway& gateway, const CounterfactualQuestion& q,
                             const VideoAnnotation& v, std::string_view system_prompt,
                             bool with_annotations) {
    json payload{{"video_id", q.video_id}, {"question", q.question_text}};
    if (with_annotations) {
        json steps = json::array();
        for (const auto& s : v.steps) steps.push_back({{"id", s.id}, {"text", s.text}});
        payload["annotations"] = json{{"task_name", v.task_name}, {"steps", std::move(steps)}};
    }
    LlmRequest req{RoleTag::answerer, std::string(system_prompt), payload.dump(), 0.0, 0, true};
    const json doc = *gateway.complete(req).parsed;
    auto it = doc.find("answer");
    if (it == doc.end() || !it->is_string())
        throw GenerationError("question " + q.question_id + ": answer model response missing \"answer\"");
    return it->get<std::string>();
}

}  // namespace detail

// Two independent answer slots per question; kept iff both hit the gold
// answer. Verifier failures drop the question rather than aborting the run.
inline std::vector<VerificationRecord> verify_questions(LlmGateway& gateway,
                                                        std::vector<CounterfactualQuestion>& candidates,
                                                        const VideoAnnotation& v,
                                                        const VerificationOptions& opts = {}) {
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i].status == QuestionStatus::candidate) indices.push_back(i);

    struct Outcome {
        VerificationRecord record;
        QuestionStatus status;
        std::string drop_reason;
    };

    auto check = [&](std::size_t index) {
        const CounterfactualQuestion& q = candidates[index];
        Outcome out;
        out.record.question_id = q.question_id;
        try {
            for (std::string_view prompt : {prompts::kAnswererSystemA, prompts::kAnswererSystemB}) {
                const std::string answer = detail::answer_of(gateway, q, v, prompt, true);
                const bool correct = normalize_answer(answer) == q.gold_answer;
                out.record.verdicts.push_back({answer, correct});
            }
            out.record.kept = out.record.verdicts[0].correct && out.record.verdicts[1].correct;
            out.status = out.record.kept ? QuestionStatus::kept : QuestionStatus::dropped;
            if (!out.record.kept) out.drop_reason = "verifier_disagreement";

            if (out.record.kept && opts.difficulty_mode) {
                bool both_blind_correct = true;
                for (std::string_view prompt : {prompts::kAnswererSystemA, prompts::kAnswererSystemB}) {
                    const std::string answer = detail::answer_of(gateway, q, v, prompt, false);
                    both_blind_correct = both_blind_correct && normalize_answer(answer) == q.gold_answer;
                }
                if (both_blind_correct) {
                    out.record.kept = false;
                    out.status = QuestionStatus::dropped;
                    out.drop_reason = "caption_leakage";
                }
            }
        } catch (const Error&) {
            out.record.kept = false;
            out.status = QuestionStatus::dropped;
            out.drop_reason = "verifier_error";
        }
        return out;
    };

    auto outcomes = parallel_map(indices, opts.workers, check);

    std::vector<VerificationRecord> records;
    records.reserve(outcomes.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        CounterfactualQuestion& q = candidates[indices[k]];
        q.status = outcomes[k].status;
        q.drop_reason = outcomes[k].drop_reason;
        records.push_back(std::move(outcomes[k].record));
    }
    return records;
}

inline json question_to_json(const CounterfactualQuestion& q, const VideoAnnotation* v = nullptr) {
    json doc{{"question_id", q.question_id},
             {"video_id", q.video_id},
             {"level", level_number(q.level)},
             {"question_text", q.question_text},
             {"gold_answer", to_string(q.gold_answer)},
             {"rationale", q.rationale},
             {"intervention", q.intervention.to_json()},
             {"target", q.target.to_json()}};
    if (v != nullptr) doc["interaction_type"] = to_string(v->interaction_type);
    return doc;
}

// Benchmark bundle: kept questions sorted by question_id plus per-level and
// per-interaction counts. Deterministic for identical inputs.
inline json package_dataset(const std::vector<CounterfactualQuestion>& questions,
                            const std::vector<VideoAnnotation>& annotations) {
    std::map<std::string, const VideoAnnotation*> by_id;
    for (const auto& v : annotations) by_id[v.video_id] = &v;

    std::vector<const CounterfactualQuestion*> kept;
    for (const auto& q : questions)
        if (q.status == QuestionStatus::kept) kept.push_back(&q);
    if (kept.empty()) throw ValidationError("package_dataset: empty dataset");

    std::sort(kept.begin(), kept.end(), [](const CounterfactualQuestion* a, const CounterfactualQuestion* b) {
        return a->question_id < b->question_id;
    });

    std::set<std::string> seen_ids;
    std::set<std::string> videos;
    std::map<int, int> per_level{{1, 0}, {2, 0}, {3, 0}};
    std::map<std::string, int> per_interaction{{"H2H", 0}, {"H2O", 0}};
    json entries = json::array();
    for (const auto* q : kept) {
        if (!seen_ids.insert(q->question_id).second)
            throw ValidationError("package_dataset: duplicate question_id " + q->question_id);
        auto it = by_id.find(q->video_id);
        if (it == by_id.end())
            throw ValidationError("package_dataset: unknown video " + q->video_id);
        entries.push_back(question_to_json(*q, it->second));
        videos.insert(q->video_id);
        ++per_level[level_number(q->level)];
        ++per_interaction[to_string(it->second->interaction_type)];
    }

    json level_counts = json::object();
    for (const auto& [level, count] : per_level) level_counts[std::to_string(level)] = count;
    json interaction_counts = json::object();
    for (const auto& [kind, count] : per_interaction) interaction_counts[kind] = count;

    return json{{"videos", json(videos)},
                {"questions", std::move(entries)},
                {"stats", json{{"per_level", std::move(level_counts)},
                               {"per_interaction", std::move(interaction_counts)}}}};
}

}  // namespace cfqa
