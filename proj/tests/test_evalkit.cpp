#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <memory>
#include <random>

#include "cfqa/evalkit.hpp"
#include "corpus_plan.hpp"

using namespace cfqa;
using cfqa::testing::CorpusPlan;
using cfqa::testing::ScriptedBackend;

namespace {

GoldSet gold_grid(const std::vector<std::tuple<std::string, GoldAnswer, int, InteractionType>>& rows) {
    GoldSet gold;
    for (const auto& [id, answer, level, it] : rows) gold[id] = {answer, level, it};
    return gold;
}

}  // namespace

TEST_CASE("score_predictions fills cells and normalizes free-text answers") {
    GoldSet gold;
    for (int i = 0; i < 10; ++i)
        gold["q" + std::to_string(i)] = {GoldAnswer::yes, 1, InteractionType::H2H};

    std::vector<PredictionRecord> preds;
    for (int i = 0; i < 10; ++i) {
        const bool correct = i < 7;
        preds.push_back({"q" + std::to_string(i),
                         correct ? (i % 2 == 0 ? "yes" : "Yes, it still happens.") : "no", std::nullopt});
    }
    const auto table = score_predictions(preds, gold);
    const auto cell = table.cell(1, InteractionType::H2H);
    CHECK(cell.correct == 7);
    CHECK(cell.total == 10);
    CHECK(cell.accuracy_pct() == Catch::Approx(70.0));
}

TEST_CASE("marginals are count-weighted, not means of means") {
    // L1: 5/10 and L2: 1/1 shaped counts, built by repeating predictions.
    GoldSet big;
    std::vector<PredictionRecord> preds;
    for (int i = 0; i < 10; ++i) {
        const std::string id = "l1_" + std::to_string(i);
        big[id] = {GoldAnswer::yes, 1, InteractionType::H2O};
        preds.push_back({id, i < 5 ? "yes" : "no", std::nullopt});
    }
    big["l2_0"] = {GoldAnswer::no, 2, InteractionType::H2O};
    preds.push_back({"l2_0", "no", std::nullopt});

    const auto table = score_predictions(preds, big);
    const auto marginal = table.interaction_marginal(InteractionType::H2O);
    CHECK(marginal.correct == 6);
    CHECK(marginal.total == 11);
    // 6/11 = 54.5%, not the 75% a mean of means would claim.
    CHECK(marginal.accuracy_pct() == Catch::Approx(100.0 * 6.0 / 11.0));
}

TEST_CASE("score_predictions validates its inputs") {
    const auto gold = gold_grid({{"q1", GoldAnswer::yes, 1, InteractionType::H2H}});
    CHECK_THROWS_AS(score_predictions({}, gold), EvalError);
    CHECK_THROWS_WITH(score_predictions({{"zz", "yes", std::nullopt}}, gold),
                      Catch::Matchers::ContainsSubstring("zz"));
    CHECK_THROWS_WITH(
        score_predictions({{"q1", "yes", std::nullopt}, {"q1", "no", std::nullopt}}, gold),
        Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("marginals equal brute-force recounts on randomized tables") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        GoldSet gold;
        std::vector<PredictionRecord> preds;
        struct Raw {
            int level;
            InteractionType it;
            bool correct;
        };
        std::vector<Raw> raw;
        const int n = 1 + static_cast<int>(rng() % 60);
        for (int i = 0; i < n; ++i) {
            const int level = 1 + static_cast<int>(rng() % 3);
            const InteractionType it = rng() % 2 == 0 ? InteractionType::H2H : InteractionType::H2O;
            const bool correct = rng() % 2 == 0;
            const std::string id = "q" + std::to_string(i);
            gold[id] = {GoldAnswer::yes, level, it};
            preds.push_back({id, correct ? "yes" : "no", std::nullopt});
            raw.push_back({level, it, correct});
        }
        const auto table = score_predictions(preds, gold);

        for (int level = 1; level <= 3; ++level) {
            int correct = 0, total = 0;
            for (const auto& r : raw)
                if (r.level == level) {
                    ++total;
                    if (r.correct) ++correct;
                }
            const auto m = table.level_marginal(level);
            CHECK(m.correct == correct);
            CHECK(m.total == total);
        }
        for (InteractionType it : {InteractionType::H2H, InteractionType::H2O}) {
            int correct = 0, total = 0;
            for (const auto& r : raw)
                if (r.it == it) {
                    ++total;
                    if (r.correct) ++correct;
                }
            const auto m = table.interaction_marginal(it);
            CHECK(m.correct == correct);
            CHECK(m.total == total);
        }
        int correct = 0;
        for (const auto& r : raw)
            if (r.correct) ++correct;
        CHECK(table.grand_total().correct == correct);
        CHECK(table.grand_total().total == n);
    }
}

TEST_CASE("graph_eval reproduces hand confusion matrices") {
    SECTION("one true positive, one true negative") {
        const auto g = build_graph("v", {1, 2, 3}, {{1, 2, 0.9, ""}});
        const PairLabels labels{{{1, 2}, true}, {{2, 3}, false}};
        const auto r = graph_eval(g, labels);
        CHECK(r.tp == 1);
        CHECK(r.tn == 1);
        CHECK(r.fp == 0);
        CHECK(r.fn == 0);
        CHECK(r.precision == 1.0);
        CHECK(r.recall == 1.0);
        CHECK(r.f1 == 1.0);
        CHECK(r.accuracy == 1.0);
    }
    SECTION("mixed counts") {
        const auto g = build_graph("v", {1, 2, 3}, {{1, 2, 0.9, ""}, {2, 3, 0.9, ""}});
        const PairLabels labels{{{1, 2}, true}, {{2, 3}, false}, {{1, 3}, true}};
        const auto r = graph_eval(g, labels);
        CHECK(r.tp == 1);
        CHECK(r.fp == 1);
        CHECK(r.fn == 1);
        CHECK(r.tn == 0);
        CHECK(r.precision == Catch::Approx(0.5));
        CHECK(r.recall == Catch::Approx(0.5));
        CHECK(r.f1 == Catch::Approx(0.5));
        CHECK(r.accuracy == Catch::Approx(1.0 / 3.0));
    }
    SECTION("division-by-zero metrics are defined as zero") {
        const auto g = build_graph("v", {1, 2, 3}, {});
        const PairLabels labels{{{1, 2}, false}, {{2, 3}, false}};
        const auto r = graph_eval(g, labels);
        CHECK(r.precision == 0.0);
        CHECK(r.recall == 0.0);
        CHECK(r.f1 == 0.0);
        CHECK(r.accuracy == 1.0);
    }
    SECTION("a predicted edge without a label is an error") {
        const auto g = build_graph("v", {1, 2, 3}, {{1, 3, 0.9, ""}});
        const PairLabels labels{{{1, 2}, true}};
        CHECK_THROWS_WITH(graph_eval(g, labels), Catch::Matchers::ContainsSubstring("no human label"));
    }
}

TEST_CASE("graph_eval metrics satisfy their defining formulas on random counts") {
    std::mt19937 rng(555);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 8);
        std::vector<CausalEdge> edges;
        PairLabels labels;
        std::set<int> nodes;
        for (int i = 1; i <= n; ++i) nodes.insert(i);
        for (int i = 1; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j) {
                const bool predicted = rng() % 2 == 0;
                labels[{i, j}] = rng() % 2 == 0;
                if (predicted) edges.push_back({i, j, 0.9, ""});
            }
        const auto g = build_graph("v", nodes, edges);
        const auto r = graph_eval(g, labels);
        if (r.tp + r.fp > 0)
            CHECK(r.precision == Catch::Approx(static_cast<double>(r.tp) / (r.tp + r.fp)));
        if (r.tp + r.fn > 0)
            CHECK(r.recall == Catch::Approx(static_cast<double>(r.tp) / (r.tp + r.fn)));
        if (r.precision + r.recall > 0)
            CHECK(r.f1 == Catch::Approx(2 * r.precision * r.recall / (r.precision + r.recall)));
        CHECK(r.accuracy ==
              Catch::Approx(static_cast<double>(r.tp + r.tn) / (r.tp + r.fp + r.fn + r.tn)));
        CHECK(r.tp + r.fp + r.fn + r.tn == static_cast<int>(labels.size()));
    }
}

TEST_CASE("categorize_errors buckets wrong answers via the judge") {
    CorpusPlan plan;
    plan.error_judge[normalize_text("the oven was surely opened at some point")] =
        json{{"category", "nonexistent_action"}}.dump();
    plan.error_judge[normalize_text("cannot be determined from the video")] =
        json{{"category", "cannot_infer"}}.dump();
    plan.error_judge[normalize_text("unknown bucket")] = json{{"category", "weird"}}.dump();
    auto backend = std::make_shared<ScriptedBackend>(plan);
    LlmGateway gateway(backend, 3, 8);

    SECTION("known categories count directly; unknown maps to other") {
        std::vector<PredictionRecord> wrong{
            {"q1", "no", "the oven was surely opened at some point"},
            {"q2", "yes", "cannot be determined from the video"},
            {"q3", "yes", "unknown bucket"},
        };
        const auto breakdown = categorize_errors(gateway, wrong);
        CHECK(breakdown.counts.at("nonexistent_action") == 1);
        CHECK(breakdown.counts.at("cannot_infer") == 1);
        CHECK(breakdown.counts.at("other") == 1);
        CHECK(breakdown.counts.at("direct_inference") == 0);
        double sum = 0.0;
        for (const auto& [cat, f] : breakdown.fractions) sum += f;
        CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    }
    SECTION("7/1/1/1 fixture yields 0.7/0.1/0.1/0.1") {
        CorpusPlan p;
        auto resp = [&](const std::string& text, const std::string& cat) {
            p.error_judge[normalize_text(text)] = json{{"category", cat}}.dump();
        };
        std::vector<PredictionRecord> wrong;
        for (int i = 0; i < 7; ++i) {
            const std::string t = "direct guess " + std::to_string(i);
            resp(t, "direct_inference");
            wrong.push_back({"d" + std::to_string(i), "no", t});
        }
        resp("ghost action", "nonexistent_action");
        wrong.push_back({"n0", "no", "ghost action"});
        resp("cannot tell", "cannot_infer");
        wrong.push_back({"c0", "no", "cannot tell"});
        resp("misc", "other");
        wrong.push_back({"o0", "no", "misc"});

        auto b = std::make_shared<ScriptedBackend>(p);
        LlmGateway gw(b, 3, 8);
        const auto breakdown = categorize_errors(gw, wrong);
        CHECK(breakdown.fractions.at("direct_inference") == Catch::Approx(0.7));
        CHECK(breakdown.fractions.at("nonexistent_action") == Catch::Approx(0.1));
        CHECK(breakdown.fractions.at("cannot_infer") == Catch::Approx(0.1));
        CHECK(breakdown.fractions.at("other") == Catch::Approx(0.1));
    }
    SECTION("records without raw_output error") {
        std::vector<PredictionRecord> wrong{{"q1", "no", std::nullopt}};
        CHECK_THROWS_AS(categorize_errors(gateway, wrong), EvalError);
    }
}

TEST_CASE("format_table emits 12 numeric columns and stable bytes") {
    GoldSet gold;
    std::vector<PredictionRecord> preds;
    int n = 0;
    for (int level = 1; level <= 3; ++level)
        for (InteractionType it : {InteractionType::H2H, InteractionType::H2O})
            for (int i = 0; i < 4; ++i) {
                const std::string id = "q" + std::to_string(n++);
                gold[id] = {GoldAnswer::yes, level, it};
                preds.push_back({id, i < level ? "yes" : "no", std::nullopt});
            }
    const auto table = score_predictions(preds, gold);

    const std::string csv = format_table_csv(table);
    CHECK(csv == format_table_csv(table));  // deterministic
    REQUIRE(csv.find("block,level_1,level_2,level_3,avg") == 0);
    // three data rows, each with 4 numeric columns
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

    const std::string text = format_table_text(table);
    CHECK(text.find("Human to Human") != std::string::npos);
    CHECK(text.find("Human to Object") != std::string::npos);
    CHECK(text.find("Total") != std::string::npos);
    CHECK(text.find("Level 3") != std::string::npos);
    CHECK(text == format_table_text(table));

    // 25.0 / 50.0 / 75.0 per level in every block (same pattern for both types)
    CHECK(csv.find("human_to_human,25.0,50.0,75.0,50.0") != std::string::npos);
    CHECK(csv.find("total,25.0,50.0,75.0,50.0") != std::string::npos);
}

TEST_CASE("graph eval report renders to four decimals") {
    GraphEvalReport r;
    r.tp = 4;
    r.fp = 1;
    r.fn = 0;
    r.tn = 3;
    r.precision = 0.8;
    r.recall = 1.0;
    r.f1 = 2 * 0.8 / 1.8;
    r.accuracy = 0.875;
    const std::string text = format_graph_eval(r);
    CHECK(text.find("precision 0.8000") != std::string::npos);
    CHECK(text.find("recall    1.0000") != std::string::npos);
    CHECK(text.find("f1        0.8889") != std::string::npos);
    CHECK(text.find("accuracy  0.8750") != std::string::npos);
}

TEST_CASE("parse_predictions validates the file shape") {
    const json good = json::array({json{{"question_id", "q1"}, {"predicted_answer", "yes"}},
                                   json{{"question_id", "q2"},
                                        {"predicted_answer", "no"},
                                        {"raw_output", "No because."}}});
    const auto records = parse_predictions(good);
    REQUIRE(records.size() == 2);
    CHECK(records[1].raw_output.has_value());

    CHECK_THROWS_AS(parse_predictions(json::object()), ParseError);
    CHECK_THROWS_AS(parse_predictions(json::array({json{{"question_id", "q1"}}})), ParseError);
}
