#pragma once
// Batch orchestration behind the CLI subcommands. Each stage reads its
// inputs from the output directory of the previous one, isolates per-video
// failures, and writes deterministic JSON: stage outputs are sorted and all
// file writes happen on the calling thread after parallel work is collected.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cfqa/annotations.hpp"
#include "cfqa/causal_graph.hpp"
#include "cfqa/config.hpp"
#include "cfqa/discovery.hpp"
#include "cfqa/errors.hpp"
#include "cfqa/evalkit.hpp"
#include "cfqa/http_backend.hpp"
#include "cfqa/llm_gateway.hpp"
#include "cfqa/qgen.hpp"
#include "cfqa/reward.hpp"

namespace cfqa {

namespace fs = std::filesystem;

struct StageResult {
    int exit_code = 0;  // 0 ok, 1 partial per-item failures, 2 invalid invocation
    json summary;
};

struct Runtime {
    std::shared_ptr<ChatBackend> chat;
    std::shared_ptr<EmbeddingProvider> embedder;
    std::unique_ptr<LlmGateway> gateway;
};

inline Runtime make_runtime(const PipelineConfig& cfg) {
    Runtime rt;
    if (cfg.flags.mock || cfg.flags.strict_mock) {
        std::map<std::string, std::string> fixtures;
        if (!cfg.paths.fixtures_path.empty())
            fixtures = MockBackend::load_fixture_file(cfg.paths.fixtures_path);
        else if (cfg.flags.strict_mock)
            throw UsageError("strict mock requires paths.fixtures_path");
        auto mock = std::make_shared<MockBackend>(std::move(fixtures), cfg.flags.strict_mock, cfg.seed,
                                                  static_cast<std::size_t>(cfg.embedding_dim));
        rt.chat = mock;
        rt.embedder = mock;
    } else {
        if (cfg.backend.base_url.empty())
            throw UsageError("remote backend requires backend.base_url (or pass --mock)");
        rt.chat = std::make_shared<HttpBackend>(cfg.backend.base_url, cfg.backend.models.at("agents"));
        rt.embedder = nullptr;  // remote embeddings must be configured explicitly
    }
    rt.gateway = std::make_unique<LlmGateway>(rt.chat, cfg.backend.retry_limit, cfg.backend.in_flight_cap);
    return rt;
}

namespace detail {

inline void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + path.string());
    out << content;
}

inline json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ParseError("invalid JSON in " + path.string());
    return doc;
}

inline std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace detail

inline std::vector<VideoAnnotation> load_annotations_dir(const std::string& dir) {
    if (dir.empty()) throw UsageError("paths.annotations_dir is not set");
    if (!fs::is_directory(dir)) throw UsageError("annotations dir does not exist: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw UsageError("no .json annotation files in " + dir);

    std::vector<VideoAnnotation> annotations;
    std::set<std::string> ids;
    for (const auto& path : files) {
        std::ifstream in(path, std::ios::binary);
        std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        VideoAnnotation v = parse_annotation(raw);
        if (!ids.insert(v.video_id).second)
            throw UsageError("duplicate video_id " + v.video_id + " in " + dir);
        annotations.push_back(std::move(v));
    }
    std::sort(annotations.begin(), annotations.end(),
              [](const VideoAnnotation& a, const VideoAnnotation& b) { return a.video_id < b.video_id; });
    return annotations;
}

// discover: one graph + one transcript file per video; failing videos get a
// failure record instead of aborting the batch.
inline StageResult run_discover(const PipelineConfig& cfg) {
    const auto annotations = load_annotations_dir(cfg.paths.annotations_dir);
    Runtime rt = make_runtime(cfg);
    const fs::path out_dir = cfg.paths.output_dir;

    DiscoveryOptions opts;
    opts.window = cfg.window;
    opts.fraction = cfg.observer_fraction;
    opts.force_adjacent = cfg.flags.adjacent_force_include;
    opts.batch_observer = cfg.flags.batch_observer;
    opts.pair_workers = 1;  // videos parallelize; pair order stays stable within one

    struct VideoOutcome {
        std::string video_id;
        std::optional<DiscoveryResult> result;
        std::string error;
    };
    auto outcomes = parallel_map(annotations, cfg.workers, [&](const VideoAnnotation& v) {
        VideoOutcome o;
        o.video_id = v.video_id;
        try {
            o.result = discover_graph(*rt.gateway, v, opts);
        } catch (const Error& e) {
            o.error = e.what();
        }
        return o;
    });

    json ok = json::array();
    json failures = json::array();
    for (const auto& o : outcomes) {
        if (o.result) {
            detail::write_file(out_dir / "graphs" / (o.video_id + ".json"),
                               detail::dump(graph_to_json(o.result->graph)));
            detail::write_file(out_dir / "transcripts" / (o.video_id + ".json"),
                               detail::dump(transcripts_to_json(o.result->transcripts)));
            ok.push_back(o.video_id);
        } else {
            failures.push_back({{"video_id", o.video_id}, {"error", o.error}});
        }
    }
    json summary{{"videos", std::move(ok)}, {"failures", failures}};
    detail::write_file(out_dir / "discover_report.json", detail::dump(summary));
    return {failures.empty() ? 0 : 1, std::move(summary)};
}

// filter: computes the three metrics for every discovered graph and applies
// the thresholds; rewrites graph files with metrics attached.
inline StageResult run_filter(const PipelineConfig& cfg) {
    const auto annotations = load_annotations_dir(cfg.paths.annotations_dir);
    Runtime rt = make_runtime(cfg);
    if (!rt.embedder) throw UsageError("filter requires an embeddings provider (run with --mock, or configure one)");
    const fs::path out_dir = cfg.paths.output_dir;
    const fs::path graphs_dir = out_dir / "graphs";
    if (!fs::is_directory(graphs_dir)) throw UsageError("no graphs directory at " + graphs_dir.string());

    json results = json::array();
    json passing = json::array();
    for (const auto& v : annotations) {
        const fs::path graph_path = graphs_dir / (v.video_id + ".json");
        if (!fs::exists(graph_path)) continue;  // discovery failed for this video
        CausalGraph g = graph_from_json(detail::read_json_file(graph_path));

        EmbeddingMap embeddings;
        for (const auto& s : v.steps) embeddings[s.id] = rt.embedder->embed(s.text).values;
        const GraphMetrics m = filter_video(ancd(g, v), causal_depth(g), avg_cnda(g, embeddings),
                                            cfg.thresholds);

        detail::write_file(graph_path, detail::dump(graph_to_json(g, &m)));
        results.push_back({{"video_id", v.video_id},
                           {"ancd", m.ancd},
                           {"causal_depth", m.causal_depth},
                           {"avg_cnda", m.avg_cnda},
                           {"pass_filter", m.pass_filter},
                           {"fail_reasons", m.fail_reasons}});
        if (m.pass_filter) passing.push_back(v.video_id);
    }
    json summary{{"results", std::move(results)}, {"passing", std::move(passing)}};
    detail::write_file(out_dir / "filter_report.json", detail::dump(summary));
    return {0, std::move(summary)};
}

// generate: candidate questions for every video that passed the filter.
inline StageResult run_generate(const PipelineConfig& cfg) {
    const auto annotations = load_annotations_dir(cfg.paths.annotations_dir);
    Runtime rt = make_runtime(cfg);
    if (!rt.embedder) throw UsageError("generate requires an embeddings provider");
    const fs::path out_dir = cfg.paths.output_dir;
    const json filter_report = detail::read_json_file(out_dir / "filter_report.json");

    std::set<std::string> passing;
    for (const json& id : filter_report.at("passing")) passing.insert(id.get<std::string>());

    std::vector<const VideoAnnotation*> selected;
    for (const auto& v : annotations)
        if (passing.count(v.video_id)) selected.push_back(&v);

    GenerationOptions gen_opts;
    gen_opts.per_level = cfg.candidates_per_level;
    gen_opts.decoy_cosine_max = cfg.decoy_cosine_max;

    struct GenOutcome {
        std::string video_id;
        std::vector<CounterfactualQuestion> questions;
        std::string error;
        bool ok = false;
    };
    auto outcomes = parallel_map(selected, cfg.workers, [&](const VideoAnnotation* v) {
        GenOutcome o;
        o.video_id = v->video_id;
        try {
            CausalGraph g = graph_from_json(
                detail::read_json_file(out_dir / "graphs" / (v->video_id + ".json")));
            o.questions = generate_candidates(*rt.gateway, *rt.embedder, *v, g, gen_opts);
            o.ok = true;
        } catch (const Error& e) {
            o.error = e.what();
        }
        return o;
    });

    json failures = json::array();
    int candidate_count = 0;
    for (const auto& o : outcomes) {
        if (!o.ok) {
            failures.push_back({{"video_id", o.video_id}, {"error", o.error}});
            continue;
        }
        json questions = json::array();
        for (const auto& q : o.questions) {
            json entry = question_to_json(q);
            entry["status"] = to_string(q.status);
            entry["drop_reason"] = q.drop_reason;
            questions.push_back(std::move(entry));
            if (q.status == QuestionStatus::candidate) ++candidate_count;
        }
        detail::write_file(out_dir / "candidates" / (o.video_id + ".json"),
                           detail::dump(json{{"video_id", o.video_id}, {"candidates", std::move(questions)}}));
    }
    json summary{{"videos", json::array()}, {"failures", failures}, {"candidates", candidate_count}};
    for (const auto& o : outcomes)
        if (o.ok) summary["videos"].push_back(o.video_id);
    detail::write_file(out_dir / "generate_report.json", detail::dump(summary));
    return {failures.empty() ? 0 : 1, std::move(summary)};
}

namespace detail {

inline CounterfactualQuestion question_from_json(const json& doc) {
    CounterfactualQuestion q;
    q.question_id = doc.at("question_id").get<std::string>();
    q.video_id = doc.at("video_id").get<std::string>();
    q.level = static_cast<Level>(doc.at("level").get<int>());
    q.question_text = doc.at("question_text").get<std::string>();
    q.rationale = doc.value("rationale", "");
    const auto gold = normalize_answer(doc.at("gold_answer").get<std::string>());
    if (!gold) throw ParseError("question " + q.question_id + ": unrecognized gold_answer");
    q.gold_answer = *gold;
    auto endpoint = [](const json& v) {
        QuestionEndpoint e;
        if (v.is_number_integer()) e.step_id = v.get<int>();
        else e.text = v.get<std::string>();
        return e;
    };
    q.intervention = endpoint(doc.at("intervention"));
    q.target = endpoint(doc.at("target"));
    const std::string status = doc.value("status", "candidate");
    q.status = status == "kept"      ? QuestionStatus::kept
               : status == "dropped" ? QuestionStatus::dropped
                                     : QuestionStatus::candidate;
    q.drop_reason = doc.value("drop_reason", "");
    return q;
}

}  // namespace detail

// verify: paired answer-model verification of generated candidates.
inline StageResult run_verify(const PipelineConfig& cfg) {
    const auto annotations = load_annotations_dir(cfg.paths.annotations_dir);
    Runtime rt = make_runtime(cfg);
    const fs::path out_dir = cfg.paths.output_dir;
    const fs::path candidates_dir = out_dir / "candidates";
    if (!fs::is_directory(candidates_dir))
        throw UsageError("no candidates directory at " + candidates_dir.string());

    std::map<std::string, const VideoAnnotation*> by_id;
    for (const auto& v : annotations) by_id[v.video_id] = &v;

    struct VerifyItem {
        const VideoAnnotation* video;
        std::vector<CounterfactualQuestion> questions;
    };
    std::vector<VerifyItem> items;
    for (const auto& v : annotations) {
        const fs::path path = candidates_dir / (v.video_id + ".json");
        if (!fs::exists(path)) continue;
        VerifyItem item;
        item.video = &v;
        const json doc = detail::read_json_file(path);
        for (const json& q : doc.at("candidates"))
            item.questions.push_back(detail::question_from_json(q));
        items.push_back(std::move(item));
    }

    VerificationOptions vopts;
    vopts.difficulty_mode = cfg.flags.difficulty_mode;
    vopts.workers = 1;  // videos parallelize below

    struct VerifyOutcome {
        std::string video_id;
        std::vector<CounterfactualQuestion> questions;
        std::vector<VerificationRecord> records;
        std::string error;
        bool ok = false;
    };
    auto outcomes = parallel_map(items, cfg.workers, [&](const VerifyItem& item) {
        VerifyOutcome o;
        o.video_id = item.video->video_id;
        o.questions = item.questions;
        try {
            o.records = verify_questions(*rt.gateway, o.questions, *item.video, vopts);
            o.ok = true;
        } catch (const Error& e) {
            o.error = e.what();
        }
        return o;
    });

    json failures = json::array();
    int kept_count = 0, candidate_count = 0;
    for (const auto& o : outcomes) {
        if (!o.ok) {
            failures.push_back({{"video_id", o.video_id}, {"error", o.error}});
            continue;
        }
        json questions = json::array();
        for (const auto& q : o.questions) {
            json entry = question_to_json(q, by_id.at(o.video_id));
            entry["status"] = to_string(q.status);
            entry["drop_reason"] = q.drop_reason;
            questions.push_back(std::move(entry));
            if (q.status == QuestionStatus::kept) ++kept_count;
            if (q.status != QuestionStatus::dropped || q.drop_reason != "structural") ++candidate_count;
        }
        json records = json::array();
        for (const auto& r : o.records) {
            json verdicts = json::array();
            for (const auto& v : r.verdicts) verdicts.push_back({{"answer", v.answer}, {"correct", v.correct}});
            records.push_back(
                {{"question_id", r.question_id}, {"verdicts", std::move(verdicts)}, {"kept", r.kept}});
        }
        detail::write_file(out_dir / "verification" / (o.video_id + ".json"),
                           detail::dump(json{{"video_id", o.video_id},
                                             {"questions", std::move(questions)},
                                             {"records", std::move(records)}}));
    }
    json summary{{"kept", kept_count}, {"candidates", candidate_count}, {"failures", failures}};
    detail::write_file(out_dir / "verify_report.json", detail::dump(summary));
    return {failures.empty() ? 0 : 1, std::move(summary)};
}

// package: assemble the final benchmark bundle from kept questions.
inline StageResult run_package(const PipelineConfig& cfg) {
    const auto annotations = load_annotations_dir(cfg.paths.annotations_dir);
    const fs::path out_dir = cfg.paths.output_dir;
    const fs::path verification_dir = out_dir / "verification";
    if (!fs::is_directory(verification_dir))
        throw UsageError("no verification directory at " + verification_dir.string());

    std::vector<CounterfactualQuestion> questions;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(verification_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        const json doc = detail::read_json_file(path);
        for (const json& q : doc.at("questions")) questions.push_back(detail::question_from_json(q));
    }

    const json bundle = package_dataset(questions, annotations);
    detail::write_file(out_dir / "dataset.json", detail::dump(bundle));
    return {0, json{{"questions", bundle.at("questions").size()},
                    {"videos", bundle.at("videos").size()}}};
}

// score: reward + group advantages for externally sampled model outputs.
// Input: [{question_id, samples: [{answer, cot}]}].
inline StageResult run_score(const PipelineConfig& cfg, const std::string& samples_path) {
    const auto annotations = load_annotations_dir(cfg.paths.annotations_dir);
    Runtime rt = make_runtime(cfg);
    if (!rt.embedder) throw UsageError("score requires an embeddings provider");
    const fs::path out_dir = cfg.paths.output_dir;

    std::map<std::string, const VideoAnnotation*> videos;
    for (const auto& v : annotations) videos[v.video_id] = &v;

    std::map<std::string, CounterfactualQuestion> questions;
    const json dataset = detail::read_json_file(out_dir / "dataset.json");
    for (const json& q : dataset.at("questions")) {
        CounterfactualQuestion parsed = detail::question_from_json(q);
        questions.emplace(parsed.question_id, std::move(parsed));
    }

    const json samples_doc = detail::read_json_file(samples_path);
    if (!samples_doc.is_array()) throw UsageError("samples file: expected a JSON array");

    ExtractionOptions ex_opts;
    ex_opts.grounding_cosine = cfg.grounding_cosine;

    json reports = json::array();
    for (const json& entry : samples_doc) {
        const std::string qid = entry.at("question_id").get<std::string>();
        auto qit = questions.find(qid);
        if (qit == questions.end()) throw UsageError("samples file: unknown question_id " + qid);
        const CounterfactualQuestion& q = qit->second;
        const VideoAnnotation& v = *videos.at(q.video_id);
        const CausalGraph g =
            graph_from_json(detail::read_json_file(out_dir / "graphs" / (q.video_id + ".json")));

        std::vector<RewardScore> scores;
        std::vector<double> totals;
        for (const json& sample : entry.at("samples")) {
            ModelOutput output;
            output.question_id = qid;
            output.cot_text = sample.value("cot", "");
            output.answer = sample.value("answer", "");
            auto [claims, events] = extract_claims(*rt.gateway, *rt.embedder, output.cot_text, v, ex_opts);
            output.claims = std::move(claims);
            output.mentioned_events = std::move(events);
            const RewardScore s = total_reward(output, v, q, g, cfg.alpha, cfg.beta);
            scores.push_back(s);
            totals.push_back(s.total);
        }
        const GroupResult group = group_advantages(totals, cfg.population_std);
        reports.push_back(reward_report_json(qid, scores, group, cfg.alpha, cfg.beta));
    }
    detail::write_file(out_dir / "rewards.json", detail::dump(reports));
    return {0, json{{"questions_scored", reports.size()}}};
}

// eval: accuracy table (+ optional pooled graph metrics and error buckets).
inline StageResult run_eval(const PipelineConfig& cfg, const std::string& predictions_path,
                            const std::string& labels_path = "", bool categorize = false) {
    const fs::path out_dir = cfg.paths.output_dir;
    const json bundle = detail::read_json_file(out_dir / "dataset.json");
    const GoldSet gold = gold_set_from_bundle(bundle);
    const auto predictions = parse_predictions(detail::read_json_file(predictions_path));

    const AccuracyTable table = score_predictions(predictions, gold);
    detail::write_file(out_dir / "reports" / "accuracy.csv", format_table_csv(table));
    detail::write_file(out_dir / "reports" / "accuracy.txt", format_table_text(table));

    json summary{{"predictions", predictions.size()},
                 {"total_accuracy_pct", table.grand_total().accuracy_pct()}};

    if (!labels_path.empty()) {
        // Labels file: [{video_id, labels: [{from, to, causal}]}]
        std::vector<std::pair<CausalGraph, PairLabels>> labeled;
        const json labels_doc = detail::read_json_file(labels_path);
        for (const json& entry : labels_doc) {
            const std::string video_id = entry.at("video_id").get<std::string>();
            PairLabels labels;
            for (const json& l : entry.at("labels"))
                labels[{l.at("from").get<int>(), l.at("to").get<int>()}] = l.at("causal").get<bool>();
            CausalGraph g = graph_from_json(
                detail::read_json_file(out_dir / "graphs" / (video_id + ".json")));
            labeled.emplace_back(std::move(g), std::move(labels));
        }
        const GraphEvalReport report = graph_eval_pooled(labeled);
        detail::write_file(out_dir / "reports" / "graph_eval.txt", format_graph_eval(report));
        summary["graph_eval"] = json{{"precision", report.precision},
                                     {"recall", report.recall},
                                     {"f1", report.f1},
                                     {"accuracy", report.accuracy}};
    }

    if (categorize) {
        Runtime rt = make_runtime(cfg);
        std::vector<PredictionRecord> wrong;
        for (const auto& p : predictions) {
            const GoldEntry& entry = gold.at(p.question_id);
            if (normalize_answer(p.predicted_answer) != entry.answer && p.raw_output) wrong.push_back(p);
        }
        const ErrorBreakdown breakdown = categorize_errors(*rt.gateway, wrong);
        detail::write_file(out_dir / "reports" / "errors.json",
                           detail::dump(error_breakdown_to_json(breakdown)));
        summary["errors"] = error_breakdown_to_json(breakdown);
    }
    return {0, std::move(summary)};
}

// stats: dataset statistics over annotations and, when present, the bundle.
inline StageResult run_stats(const PipelineConfig& cfg) {
    const auto annotations = load_annotations_dir(cfg.paths.annotations_dir);
    const fs::path out_dir = cfg.paths.output_dir;

    std::vector<QuestionLevelCount> levels;
    const fs::path bundle_path = out_dir / "dataset.json";
    if (fs::exists(bundle_path)) {
        const json bundle = detail::read_json_file(bundle_path);
        for (const json& q : bundle.at("questions")) levels.push_back({q.at("level").get<int>()});
    }

    const DatasetStats stats =
        dataset_stats(annotations, levels.empty() ? nullptr : &levels);
    const json doc = dataset_stats_to_json(stats);
    detail::write_file(out_dir / "stats.json", detail::dump(doc));
    return {0, doc};
}

}  // namespace cfqa
