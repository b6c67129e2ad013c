#pragma once
// Offline evaluation: score prediction files against the gold dataset into
// accuracy tables (3 levels x 2 interaction types plus count-weighted
// marginals), compute graph-quality metrics against human edge labels, and
// bucket wrong answers into failure categories via a judge call.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cfqa/causal_graph.hpp"
#include "cfqa/errors.hpp"
#include "cfqa/llm_gateway.hpp"
#include "cfqa/prompts.hpp"
#include "cfqa/qgen.hpp"
#include "cfqa/util.hpp"

namespace cfqa {

struct PredictionRecord {
    std::string question_id;
    std::string predicted_answer;
    std::optional<std::string> raw_output;
};

inline std::vector<PredictionRecord> parse_predictions(const json& doc) {
    if (!doc.is_array()) throw ParseError("predictions: expected a JSON array");
    std::vector<PredictionRecord> records;
    for (const json& entry : doc) {
        if (!entry.is_object() || !entry.contains("question_id") || !entry.contains("predicted_answer"))
            throw ParseError("predictions: entries need question_id and predicted_answer");
        PredictionRecord r;
        r.question_id = entry["question_id"].get<std::string>();
        r.predicted_answer = entry["predicted_answer"].get<std::string>();
        if (entry.contains("raw_output") && entry["raw_output"].is_string())
            r.raw_output = entry["raw_output"].get<std::string>();
        records.push_back(std::move(r));
    }
    return records;
}

// What scoring needs to know about one gold question.
struct GoldEntry {
    GoldAnswer answer = GoldAnswer::yes;
    int level = 1;
    InteractionType interaction = InteractionType::H2O;
};

using GoldSet = std::map<std::string, GoldEntry>;

inline GoldSet gold_set_from_bundle(const json& bundle) {
    GoldSet gold;
    for (const json& q : bundle.at("questions")) {
        GoldEntry entry;
        const std::string answer = q.at("gold_answer").get<std::string>();
        const auto normalized = normalize_answer(answer);
        if (!normalized) throw ParseError("dataset bundle: unrecognized gold_answer " + answer);
        entry.answer = *normalized;
        entry.level = q.at("level").get<int>();
        entry.interaction = interaction_from_string(q.at("interaction_type").get<std::string>());
        gold[q.at("question_id").get<std::string>()] = entry;
    }
    return gold;
}

struct CellStats {
    int correct = 0;
    int total = 0;

    double accuracy_pct() const {
        return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
    }
};

struct AccuracyTable {
    // (level, interaction) -> counts
    std::map<std::pair<int, InteractionType>, CellStats> cells;

    CellStats cell(int level, InteractionType it) const {
        auto found = cells.find({level, it});
        return found == cells.end() ? CellStats{} : found->second;
    }

    // Marginals are count-weighted sums of cells, never means of means.
    CellStats level_marginal(int level) const {
        CellStats m;
        for (const auto& [key, c] : cells)
            if (key.first == level) {
                m.correct += c.correct;
                m.total += c.total;
            }
        return m;
    }

    CellStats interaction_marginal(InteractionType it) const {
        CellStats m;
        for (const auto& [key, c] : cells)
            if (key.second == it) {
                m.correct += c.correct;
                m.total += c.total;
            }
        return m;
    }

    CellStats grand_total() const {
        CellStats m;
        for (const auto& [key, c] : cells) {
            m.correct += c.correct;
            m.total += c.total;
        }
        return m;
    }
};

inline AccuracyTable score_predictions(const std::vector<PredictionRecord>& predictions,
                                       const GoldSet& gold) {
    if (predictions.empty()) throw EvalError("score_predictions: empty prediction set");

    std::set<std::string> seen;
    std::vector<std::string> unknown;
    for (const auto& p : predictions) {
        if (!seen.insert(p.question_id).second)
            throw EvalError("score_predictions: duplicate prediction for " + p.question_id);
        if (!gold.count(p.question_id)) unknown.push_back(p.question_id);
    }
    if (!unknown.empty()) {
        std::string msg = "score_predictions: unknown question ids:";
        for (const auto& id : unknown) msg += " " + id;
        throw EvalError(msg);
    }

    AccuracyTable table;
    for (const auto& p : predictions) {
        const GoldEntry& entry = gold.at(p.question_id);
        CellStats& cell = table.cells[{entry.level, entry.interaction}];
        ++cell.total;
        if (normalize_answer(p.predicted_answer) == entry.answer) ++cell.correct;
    }
    return table;
}

struct GraphEvalReport {
    int tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0, accuracy = 0.0;
};

using PairLabels = std::map<std::pair<int, int>, bool>;

// Confusion counts over exactly the labeled pairs; division-by-zero metric
// cases are defined as 0.
inline GraphEvalReport graph_eval(const CausalGraph& predicted, const PairLabels& human_labels) {
    for (const auto& e : predicted.edges)
        if (!human_labels.count({e.from_id, e.to_id}))
            throw EvalError(predicted.video_id + ": predicted edge (" + std::to_string(e.from_id) + "," +
                            std::to_string(e.to_id) + ") has no human label");

    GraphEvalReport r;
    for (const auto& [pair, causal] : human_labels) {
        const bool has = predicted.has_edge(pair.first, pair.second);
        if (causal && has) ++r.tp;
        else if (!causal && has) ++r.fp;
        else if (causal && !has) ++r.fn;
        else ++r.tn;
    }
    r.precision = (r.tp + r.fp) == 0 ? 0.0 : static_cast<double>(r.tp) / (r.tp + r.fp);
    r.recall = (r.tp + r.fn) == 0 ? 0.0 : static_cast<double>(r.tp) / (r.tp + r.fn);
    r.f1 = (r.precision + r.recall) == 0.0 ? 0.0
                                           : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    const int total = r.tp + r.fp + r.fn + r.tn;
    r.accuracy = total == 0 ? 0.0 : static_cast<double>(r.tp + r.tn) / total;
    return r;
}

// Pools confusion counts across several graphs before computing metrics.
inline GraphEvalReport graph_eval_pooled(const std::vector<std::pair<CausalGraph, PairLabels>>& pairs) {
    GraphEvalReport pooled;
    for (const auto& [graph, labels] : pairs) {
        const GraphEvalReport r = graph_eval(graph, labels);
        pooled.tp += r.tp;
        pooled.fp += r.fp;
        pooled.fn += r.fn;
        pooled.tn += r.tn;
    }
    pooled.precision = (pooled.tp + pooled.fp) == 0 ? 0.0 : static_cast<double>(pooled.tp) / (pooled.tp + pooled.fp);
    pooled.recall = (pooled.tp + pooled.fn) == 0 ? 0.0 : static_cast<double>(pooled.tp) / (pooled.tp + pooled.fn);
    pooled.f1 = (pooled.precision + pooled.recall) == 0.0
                    ? 0.0
                    : 2.0 * pooled.precision * pooled.recall / (pooled.precision + pooled.recall);
    const int total = pooled.tp + pooled.fp + pooled.fn + pooled.tn;
    pooled.accuracy = total == 0 ? 0.0 : static_cast<double>(pooled.tp + pooled.tn) / total;
    return pooled;
}

inline const std::vector<std::string>& error_categories() {
    static const std::vector<std::string> categories{"direct_inference", "nonexistent_action",
                                                     "cannot_infer", "other"};
    return categories;
}

struct ErrorBreakdown {
    std::map<std::string, int> counts;       // category -> count
    std::map<std::string, double> fractions; // category -> fraction of records
};

inline ErrorBreakdown categorize_errors(LlmGateway& gateway,
                                        const std::vector<PredictionRecord>& wrong_records) {
    ErrorBreakdown breakdown;
    for (const auto& c : error_categories()) {
        breakdown.counts[c] = 0;
        breakdown.fractions[c] = 0.0;
    }
    for (const auto& record : wrong_records) {
        if (!record.raw_output)
            throw EvalError("categorize_errors: record " + record.question_id + " has no raw_output");
        json payload{{"question_id", record.question_id},
                     {"predicted_answer", record.predicted_answer},
                     {"raw_output", *record.raw_output}};
        LlmRequest req{RoleTag::judge, std::string(prompts::kErrorJudgeSystem), payload.dump(), 0.0, 0,
                       true};
        const json doc = *gateway.complete(req).parsed;
        std::string category = doc.value("category", "other");
        if (std::find(error_categories().begin(), error_categories().end(), category) ==
            error_categories().end()) {
            log_warn("categorize_errors: unknown category \"" + category + "\" mapped to other");
            category = "other";
        }
        ++breakdown.counts[category];
    }
    if (!wrong_records.empty())
        for (const auto& c : error_categories())
            breakdown.fractions[c] =
                static_cast<double>(breakdown.counts[c]) / static_cast<double>(wrong_records.size());
    return breakdown;
}

namespace detail {
inline std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}
inline std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}
}  // namespace detail

// Twelve numeric columns: Level 1/2/3/Avg per interaction block plus Total.
inline std::string format_table_csv(const AccuracyTable& t) {
    std::string csv =
        "block,level_1,level_2,level_3,avg\n";
    auto block_row = [&](const std::string& name, InteractionType it) {
        csv += name;
        for (int level = 1; level <= 3; ++level) csv += "," + detail::fmt1(t.cell(level, it).accuracy_pct());
        csv += "," + detail::fmt1(t.interaction_marginal(it).accuracy_pct()) + "\n";
    };
    block_row("human_to_human", InteractionType::H2H);
    block_row("human_to_object", InteractionType::H2O);
    csv += "total";
    for (int level = 1; level <= 3; ++level) csv += "," + detail::fmt1(t.level_marginal(level).accuracy_pct());
    csv += "," + detail::fmt1(t.grand_total().accuracy_pct()) + "\n";
    return csv;
}

inline std::string format_table_text(const AccuracyTable& t) {
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.insert(0, w - s.size(), ' ');
        return s;
    };
    const std::size_t w = 9;
    std::string out;
    out += pad("", 18);
    for (const char* block : {"Human to Human", "Human to Object", "Total"}) {
        std::string title(block);
        out += " | " + title;
        const std::size_t block_width = 4 * w + 3;
        if (title.size() < block_width) out += std::string(block_width - title.size(), ' ');
    }
    out += "\n" + pad("", 18);
    for (int b = 0; b < 3; ++b) {
        out += " | ";
        for (const char* col : {"Level 1", "Level 2", "Level 3", "Avg."}) out += pad(col, w) + " ";
    }
    out += "\n" + pad("accuracy (%)", 18);
    auto emit_cells = [&](auto accuracy_of) {
        out += " | ";
        for (int level = 1; level <= 3; ++level) out += pad(detail::fmt1(accuracy_of(level)), w) + " ";
    };
    for (InteractionType it : {InteractionType::H2H, InteractionType::H2O}) {
        emit_cells([&](int level) { return t.cell(level, it).accuracy_pct(); });
        out += pad(detail::fmt1(t.interaction_marginal(it).accuracy_pct()), w) + " ";
    }
    emit_cells([&](int level) { return t.level_marginal(level).accuracy_pct(); });
    out += pad(detail::fmt1(t.grand_total().accuracy_pct()), w) + " ";
    out += "\n" + pad("correct/total", 18);
    auto emit_counts = [&](auto stats_of) {
        out += " | ";
        for (int level = 1; level <= 3; ++level) {
            const CellStats c = stats_of(level);
            out += pad(std::to_string(c.correct) + "/" + std::to_string(c.total), w) + " ";
        }
    };
    for (InteractionType it : {InteractionType::H2H, InteractionType::H2O}) {
        emit_counts([&](int level) { return t.cell(level, it); });
        const CellStats m = t.interaction_marginal(it);
        out += pad(std::to_string(m.correct) + "/" + std::to_string(m.total), w) + " ";
    }
    emit_counts([&](int level) { return t.level_marginal(level); });
    const CellStats g = t.grand_total();
    out += pad(std::to_string(g.correct) + "/" + std::to_string(g.total), w) + " ";
    out += "\n";
    return out;
}

inline std::string format_graph_eval(const GraphEvalReport& r) {
    std::string out;
    out += "precision " + detail::fmt4(r.precision) + "\n";
    out += "recall    " + detail::fmt4(r.recall) + "\n";
    out += "f1        " + detail::fmt4(r.f1) + "\n";
    out += "accuracy  " + detail::fmt4(r.accuracy) + "\n";
    out += "tp " + std::to_string(r.tp) + " fp " + std::to_string(r.fp) + " fn " + std::to_string(r.fn) +
           " tn " + std::to_string(r.tn) + "\n";
    return out;
}

inline json error_breakdown_to_json(const ErrorBreakdown& b) {
    json counts = json::object();
    json fractions = json::object();
    for (const auto& c : error_categories()) {
        counts[c] = b.counts.at(c);
        fractions[c] = b.fractions.at(c);
    }
    return json{{"counts", std::move(counts)}, {"fractions", std::move(fractions)}};
}

}  // namespace cfqa
