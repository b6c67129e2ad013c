#pragma once
// Causal graph over action steps, plus the three complexity metrics used to
// decide whether a video is worth generating questions for:
//
//   ancd          fraction of temporally adjacent step pairs with no edge
//   causal_depth  longest directed path, counted in edges
//   avg_cnda      mean semantic outlier score of the step embeddings
//
// Edges always point forward in time (from_id < to_id), which makes every
// graph a DAG and keeps longest-path linear in the graph size.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cfqa/annotations.hpp"
#include "cfqa/errors.hpp"

namespace cfqa {

struct CausalEdge {
    int from_id = 0;
    int to_id = 0;
    double confidence = 0.0;  // in [0,1]
    std::string provenance;   // agent-transcript reference

    bool operator==(const CausalEdge&) const = default;
};

struct CausalGraph {
    std::string video_id;
    std::set<int> node_ids;
    std::vector<CausalEdge> edges;  // sorted by (from_id, to_id), unique

    bool has_edge(int from, int to) const {
        return std::any_of(edges.begin(), edges.end(),
                           [&](const CausalEdge& e) { return e.from_id == from && e.to_id == to; });
    }
};

struct FilterThresholds {
    double ancd = 0.2;
    int depth = 3;
    double cnda = 0.12;
};

struct GraphMetrics {
    double ancd = 0.0;
    int causal_depth = 0;
    double avg_cnda = 0.0;
    bool pass_filter = false;
    std::vector<std::string> fail_reasons;  // empty iff pass_filter
};

// Validates endpoints and direction, merges duplicate edges keeping the
// highest confidence.
inline CausalGraph build_graph(std::string video_id, std::set<int> node_ids,
                               const std::vector<CausalEdge>& accepted) {
    CausalGraph g;
    g.video_id = std::move(video_id);
    g.node_ids = std::move(node_ids);

    std::map<std::pair<int, int>, CausalEdge> merged;
    for (const CausalEdge& e : accepted) {
        const std::string where = "edge (" + std::to_string(e.from_id) + "," + std::to_string(e.to_id) + ")";
        if (e.from_id == e.to_id) throw ValidationError(g.video_id + ": self edge " + where);
        if (e.from_id > e.to_id) throw ValidationError(g.video_id + ": backward edge " + where);
        if (!g.node_ids.count(e.from_id) || !g.node_ids.count(e.to_id))
            throw ValidationError(g.video_id + ": unknown endpoint in " + where);
        auto [it, inserted] = merged.emplace(std::make_pair(e.from_id, e.to_id), e);
        if (!inserted && e.confidence > it->second.confidence) it->second = e;
    }
    g.edges.reserve(merged.size());
    for (auto& [key, edge] : merged) g.edges.push_back(std::move(edge));
    return g;
}

// (# adjacent pairs with no edge) / (# adjacent pairs).
inline double ancd(const CausalGraph& g, const VideoAnnotation& v) {
    std::set<int> step_ids;
    for (const auto& s : v.steps) step_ids.insert(s.id);
    if (step_ids != g.node_ids)
        throw ValidationError(g.video_id + ": graph nodes do not match annotation step ids");

    const auto pairs = adjacent_pairs(v);
    int non_causal = 0;
    for (const auto& [a, b] : pairs)
        if (!g.has_edge(a.id, b.id)) ++non_causal;
    return static_cast<double>(non_causal) / static_cast<double>(pairs.size());
}

// Longest path in edges; 0 for an edgeless graph. Forward edges make the
// graph a DAG, so a single pass in ascending node order is exact.
inline int causal_depth(const CausalGraph& g) {
    std::map<int, int> depth;  // node -> longest path ending at node
    for (int node : g.node_ids) depth[node] = 0;
    int best = 0;
    // node_ids is ordered, and every edge goes from a smaller to a larger id.
    for (int node : g.node_ids) {
        for (const CausalEdge& e : g.edges) {
            if (e.to_id != node) continue;
            depth[node] = std::max(depth[node], depth[e.from_id] + 1);
        }
        best = std::max(best, depth[node]);
    }
    return best;
}

using EmbeddingMap = std::map<int, std::vector<double>>;

// 1 - cos(e(v), centroid of the whole context, v included). Range [0,2].
inline double outlier_score(int node_id, const EmbeddingMap& context_embeddings) {
    auto it = context_embeddings.find(node_id);
    if (it == context_embeddings.end())
        throw ValidationError("outlier_score: node " + std::to_string(node_id) + " has no embedding");
    const std::vector<double>& e = it->second;
    const std::size_t dim = e.size();

    std::vector<double> centroid(dim, 0.0);
    for (const auto& [id, vec] : context_embeddings) {
        if (vec.size() != dim)
            throw ValidationError("outlier_score: embedding dimension mismatch at node " + std::to_string(id));
        for (std::size_t i = 0; i < dim; ++i) centroid[i] += vec[i];
    }
    const double count = static_cast<double>(context_embeddings.size());
    for (double& c : centroid) c /= count;

    double dot = 0.0, norm_e = 0.0, norm_c = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        dot += e[i] * centroid[i];
        norm_e += e[i] * e[i];
        norm_c += centroid[i] * centroid[i];
    }
    norm_e = std::sqrt(norm_e);
    norm_c = std::sqrt(norm_c);
    if (norm_e == 0.0)
        throw ValidationError("outlier_score: zero-norm embedding at node " + std::to_string(node_id));
    if (norm_c == 0.0) throw ValidationError("outlier_score: zero-norm context centroid");
    return 1.0 - dot / (norm_e * norm_c);
}

// Mean outlier score over the graph's nodes. The context (and therefore the
// centroid) is the full embedding map, i.e. all steps of the video.
inline double avg_cnda(const CausalGraph& g, const EmbeddingMap& embeddings) {
    if (g.node_ids.empty()) throw ValidationError(g.video_id + ": avg_cnda on empty graph");
    double sum = 0.0;
    for (int node : g.node_ids) {
        if (!embeddings.count(node))
            throw ValidationError(g.video_id + ": missing embedding for node " + std::to_string(node));
        sum += outlier_score(node, embeddings);
    }
    return sum / static_cast<double>(g.node_ids.size());
}

namespace detail {
inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}
}  // namespace detail

// Threshold comparisons are inclusive; each failed one appends a reason.
inline GraphMetrics filter_video(double ancd_value, int depth_value, double cnda_value,
                                 const FilterThresholds& t = {}) {
    GraphMetrics m;
    m.ancd = ancd_value;
    m.causal_depth = depth_value;
    m.avg_cnda = cnda_value;
    if (!(ancd_value >= t.ancd))
        m.fail_reasons.push_back("ANCD " + detail::fmt2(ancd_value) + " < " + detail::fmt2(t.ancd));
    if (!(depth_value >= t.depth))
        m.fail_reasons.push_back("Causal-Depth " + std::to_string(depth_value) + " < " +
                                 std::to_string(t.depth));
    if (!(cnda_value >= t.cnda))
        m.fail_reasons.push_back("Avg-CNDA " + detail::fmt2(cnda_value) + " < " + detail::fmt2(t.cnda));
    m.pass_filter = m.fail_reasons.empty();
    return m;
}

inline json metrics_to_json(const GraphMetrics& m) {
    return json{{"ancd", m.ancd},
                {"causal_depth", m.causal_depth},
                {"avg_cnda", m.avg_cnda},
                {"pass_filter", m.pass_filter},
                {"fail_reasons", m.fail_reasons}};
}

inline GraphMetrics metrics_from_json(const json& doc) {
    GraphMetrics m;
    m.ancd = doc.at("ancd").get<double>();
    m.causal_depth = doc.at("causal_depth").get<int>();
    m.avg_cnda = doc.at("avg_cnda").get<double>();
    m.pass_filter = doc.at("pass_filter").get<bool>();
    m.fail_reasons = doc.at("fail_reasons").get<std::vector<std::string>>();
    return m;
}

inline json graph_to_json(const CausalGraph& g, const GraphMetrics* metrics = nullptr) {
    json nodes = json::array();
    for (int id : g.node_ids) nodes.push_back(id);
    json edges = json::array();
    for (const CausalEdge& e : g.edges)
        edges.push_back({{"from", e.from_id}, {"to", e.to_id}, {"confidence", e.confidence}});
    json doc{{"video_id", g.video_id}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
    if (metrics != nullptr) doc["metrics"] = metrics_to_json(*metrics);
    return doc;
}

inline CausalGraph graph_from_json(const json& doc) {
    std::set<int> nodes;
    for (const json& n : doc.at("nodes")) nodes.insert(n.get<int>());
    std::vector<CausalEdge> edges;
    for (const json& e : doc.at("edges"))
        edges.push_back({e.at("from").get<int>(), e.at("to").get<int>(), e.at("confidence").get<double>(), ""});
    return build_graph(doc.at("video_id").get<std::string>(), std::move(nodes), edges);
}

}  // namespace cfqa
