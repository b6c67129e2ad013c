// Regenerates the committed fixture files from the corpus plan:
//
//   tests/fixtures/mock_fixtures.json        digest -> response replay map
//   tests/fixtures/model_samples.json        sampled outputs for `score`
//   tests/fixtures/predictions_sample.json   predictions for `eval`
//   tests/fixtures/graph_labels_sample.json  human edge labels for `eval`
//   tests/fixtures/mock_config.json          ready-to-run CLI config
//
// It replays the whole pipeline through the scripted backend, audits every
// staged expectation (edges, filter verdicts, candidate and kept counts),
// and only then writes the files. Run from the repository root:
//
//   ./build/tests/fixture_gen tests/fixtures

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfqa/annotations.hpp"
#include "cfqa/causal_graph.hpp"
#include "cfqa/discovery.hpp"
#include "cfqa/evalkit.hpp"
#include "cfqa/llm_gateway.hpp"
#include "cfqa/pipeline.hpp"
#include "cfqa/qgen.hpp"
#include "cfqa/reward.hpp"
#include "corpus_plan.hpp"

namespace fs = std::filesystem;
using cfqa::json;

#define EXPECT(cond, msg)                                                    \
    do {                                                                     \
        if (!(cond)) {                                                       \
            std::cerr << "fixture_gen: expectation failed: " << msg << "\n"; \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(int argc, char** argv) {
    const fs::path fixtures_dir = argc > 1 ? fs::path(argv[1]) : fs::path("tests/fixtures");
    const fs::path corpus_dir = fixtures_dir / "corpus";
    if (!fs::is_directory(corpus_dir)) {
        std::cerr << "fixture_gen: no corpus at " << corpus_dir << "\n";
        return 1;
    }

    const auto corpus = cfqa::load_annotations_dir(corpus_dir.string());
    EXPECT(corpus.size() == 3, "corpus should hold 3 videos");

    auto backend = std::make_shared<cfqa::testing::ScriptedBackend>(cfqa::testing::make_corpus_plan());
    cfqa::LlmGateway gateway(backend, 3, 8);

    // --- discovery --------------------------------------------------------
    std::map<std::string, cfqa::CausalGraph> graphs;
    for (const auto& v : corpus) {
        const auto result = cfqa::discover_graph(gateway, v);
        graphs[v.video_id] = result.graph;
    }
    EXPECT(graphs.at("v001_salad_prep").edges.size() == 5, "v001 should keep 5 edges");
    EXPECT(graphs.at("v002_passing_drill").edges.size() == 2, "v002 should keep 2 edges");
    EXPECT(graphs.at("v003_bike_repair").edges.size() == 4, "v003 should keep 4 edges");

    // --- filter -----------------------------------------------------------
    std::map<std::string, cfqa::GraphMetrics> metrics;
    for (const auto& v : corpus) {
        cfqa::EmbeddingMap embeddings;
        for (const auto& s : v.steps) embeddings[s.id] = backend->embed(s.text).values;
        const auto& g = graphs.at(v.video_id);
        metrics[v.video_id] =
            cfqa::filter_video(cfqa::ancd(g, v), cfqa::causal_depth(g), cfqa::avg_cnda(g, embeddings));
        std::cerr << v.video_id << ": ancd " << metrics[v.video_id].ancd << " depth "
                  << metrics[v.video_id].causal_depth << " cnda " << metrics[v.video_id].avg_cnda << "\n";
    }
    EXPECT(metrics.at("v001_salad_prep").pass_filter, "v001 should pass the filter");
    EXPECT(!metrics.at("v002_passing_drill").pass_filter, "v002 should fail the filter");
    EXPECT(metrics.at("v002_passing_drill").fail_reasons ==
               std::vector<std::string>{"Causal-Depth 2 < 3"},
           "v002 should fail on depth only");
    EXPECT(!metrics.at("v003_bike_repair").pass_filter, "v003 should fail the filter");
    EXPECT(metrics.at("v003_bike_repair").fail_reasons == std::vector<std::string>{"ANCD 0.00 < 0.20"},
           "v003 should fail on ANCD only");

    // --- generation + verification for the passing video -------------------
    const cfqa::VideoAnnotation& salad = corpus[0];
    EXPECT(salad.video_id == "v001_salad_prep", "corpus order");
    auto candidates =
        cfqa::generate_candidates(gateway, *backend, salad, graphs.at(salad.video_id));
    EXPECT(candidates.size() == 30, "generator should yield 30 candidates");
    for (const auto& q : candidates)
        EXPECT(q.status == cfqa::QuestionStatus::candidate,
               "candidate " + q.question_id + " unexpectedly dropped: " + q.drop_reason);

    const auto records = cfqa::verify_questions(gateway, candidates, salad);
    int kept = 0;
    for (const auto& q : candidates)
        if (q.status == cfqa::QuestionStatus::kept) ++kept;
    EXPECT(kept == 6, "verification should keep exactly 6 of 30");
    EXPECT(records.size() == 30, "all 30 candidates should be verified");

    const json bundle = cfqa::package_dataset(candidates, corpus);
    EXPECT(bundle.at("questions").size() == 6, "bundle should hold 6 questions");

    // Kept question ids by (level, first kept index) for the derived files.
    std::string l2_qid, l3_qid;
    std::vector<json> kept_questions;
    for (const json& q : bundle.at("questions")) kept_questions.push_back(q);
    for (const json& q : kept_questions) {
        if (q.at("level") == 2 && q.at("target") == 3) l2_qid = q.at("question_id");
        if (q.at("level") == 3 &&
            q.at("intervention").get<std::string>() == "preheat the oven")
            l3_qid = q.at("question_id");
    }
    EXPECT(!l2_qid.empty() && !l3_qid.empty(), "kept set should contain the planned L2 and L3 questions");

    // --- score samples (records the claim-judge digests) --------------------
    json samples = json::array();
    {
        json l2_samples = json::array();
        const char* l2_answers[] = {"no", "no", "yes", "no"};
        for (int i = 0; i < 4; ++i)
            l2_samples.push_back({{"answer", l2_answers[i]}, {"cot", cfqa::testing::sample_cot(i)}});
        samples.push_back({{"question_id", l2_qid}, {"samples", std::move(l2_samples)}});

        json l3_samples = json::array();
        const char* l3_answers[] = {"premise_invalid", "premise_invalid", "premise_invalid", "no"};
        for (int i = 4; i < 8; ++i)
            l3_samples.push_back({{"answer", l3_answers[i - 4]}, {"cot", cfqa::testing::sample_cot(i)}});
        samples.push_back({{"question_id", l3_qid}, {"samples", std::move(l3_samples)}});
    }
    for (const json& entry : samples)
        for (const json& sample : entry.at("samples")) {
            auto [claims, events] = cfqa::extract_claims(gateway, *backend,
                                                         sample.at("cot").get<std::string>(), salad);
            (void)claims;
            (void)events;
        }

    // --- predictions (records the error-judge digests) ----------------------
    json predictions = json::array();
    {
        int correct_budget = 4;
        const std::string wrong_raw[] = {
            "The person must have kneaded the dough first, so the answer is no.",
            "This cannot be determined from the video content alone."};
        int wrong_used = 0;
        for (const json& q : kept_questions) {
            const std::string gold = q.at("gold_answer").get<std::string>();
            if (correct_budget > 0) {
                std::string answer = gold;
                if (gold == "no") answer = "No, the chain collapses without it.";
                if (gold == "yes") answer = "Yes";
                if (gold == "premise_invalid") answer = "Premise invalid: that action never happens.";
                predictions.push_back({{"question_id", q.at("question_id")}, {"predicted_answer", answer}});
                --correct_budget;
            } else {
                const std::string wrong = gold == "yes" ? "no" : "yes";
                predictions.push_back({{"question_id", q.at("question_id")},
                                       {"predicted_answer", wrong},
                                       {"raw_output", wrong_raw[wrong_used % 2]}});
                ++wrong_used;
            }
        }
        EXPECT(wrong_used == 2, "predictions should contain 2 wrong answers");
        std::vector<cfqa::PredictionRecord> wrong_records;
        for (const json& p : predictions)
            if (p.contains("raw_output"))
                wrong_records.push_back({p.at("question_id"), p.at("predicted_answer"), p.at("raw_output")});
        const auto breakdown = cfqa::categorize_errors(gateway, wrong_records);
        EXPECT(breakdown.counts.at("nonexistent_action") == 1, "one nonexistent_action error");
        EXPECT(breakdown.counts.at("cannot_infer") == 1, "one cannot_infer error");
    }

    // --- graph labels for the pooled quality report -------------------------
    const json labels = json::array({json{
        {"video_id", "v001_salad_prep"},
        {"labels", json::array({
                       json{{"from", 1}, {"to", 2}, {"causal", true}},
                       json{{"from", 2}, {"to", 3}, {"causal", true}},
                       json{{"from", 3}, {"to", 4}, {"causal", true}},
                       json{{"from", 4}, {"to", 5}, {"causal", false}},
                       json{{"from", 5}, {"to", 6}, {"causal", true}},
                       json{{"from", 6}, {"to", 7}, {"causal", false}},
                       json{{"from", 7}, {"to", 8}, {"causal", false}},
                       json{{"from", 1}, {"to", 3}, {"causal", false}},
                   })}}});

    // --- write everything ----------------------------------------------------
    auto write = [](const fs::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << content;
        std::cerr << "wrote " << path << "\n";
    };
    json fixture_map = json::object();
    for (const auto& [digest, response] : backend->recorded()) fixture_map[digest] = response;
    write(fixtures_dir / "mock_fixtures.json", fixture_map.dump(2) + "\n");
    write(fixtures_dir / "model_samples.json", samples.dump(2) + "\n");
    write(fixtures_dir / "predictions_sample.json", predictions.dump(2) + "\n");
    write(fixtures_dir / "graph_labels_sample.json", labels.dump(2) + "\n");

    const json mock_config{
        {"paths", json{{"annotations_dir", "tests/fixtures/corpus"},
                       {"output_dir", "out/mock_run"},
                       {"fixtures_path", "tests/fixtures/mock_fixtures.json"}}},
        {"flags", json{{"mock", true}, {"strict_mock", true}}},
        {"workers", 4}};
    write(fixtures_dir / "mock_config.json", mock_config.dump(2) + "\n");

    std::cerr << "fixture_gen: " << backend->recorded().size() << " fixtures recorded\n";
    return 0;
}
