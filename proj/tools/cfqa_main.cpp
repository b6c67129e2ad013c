// cfqa: batch CLI for the counterfactual video-QA pipeline.
//
// Subcommands mirror the pipeline stages: discover, filter, generate,
// verify, package, score, eval, stats. One JSON config file plus flag
// overrides; the resolved config is printed at startup so a run can be
// reproduced exactly.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cfqa/config.hpp"
#include "cfqa/pipeline.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_dir;
    std::string annotations_dir;
    bool mock = false;
    bool strict_mock = false;
    bool difficulty_mode = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = 0;
};

cfqa::PipelineConfig resolve_config(const CliOverrides& o) {
    cfqa::PipelineConfig cfg = o.config_path.empty() ? cfqa::PipelineConfig{}
                                                     : cfqa::PipelineConfig::from_file(o.config_path);
    if (!o.out_dir.empty()) cfg.paths.output_dir = o.out_dir;
    if (!o.annotations_dir.empty()) cfg.paths.annotations_dir = o.annotations_dir;
    if (o.mock) cfg.flags.mock = true;
    if (o.strict_mock) {
        cfg.flags.mock = true;
        cfg.flags.strict_mock = true;
    }
    if (o.difficulty_mode) cfg.flags.difficulty_mode = true;
    if (o.seed_set) cfg.seed = o.seed;
    if (o.workers > 0) cfg.workers = o.workers;
    cfg.validate();
    std::cerr << "resolved config: " << cfg.resolved().dump() << "\n";
    return cfg;
}

int report(const cfqa::StageResult& result) {
    std::cout << result.summary.dump(2) << "\n";
    return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"counterfactual video-QA dataset pipeline"};
    app.require_subcommand(1);

    CliOverrides o;
    app.add_option("--config", o.config_path, "pipeline config JSON");
    app.add_option("--out", o.out_dir, "output directory (overrides config)");
    app.add_option("--annotations", o.annotations_dir, "annotations directory (overrides config)");
    app.add_option("--seed", o.seed, "deterministic seed (overrides config)")->each([&](const std::string&) {
        o.seed_set = true;
    });
    app.add_option("--workers", o.workers, "worker pool size (overrides config)");
    app.add_flag("--mock", o.mock, "use the deterministic mock backend");
    app.add_flag("--strict-mock", o.strict_mock, "mock backend; unmatched fixture digests are errors");
    app.add_flag("--difficulty-mode", o.difficulty_mode, "also drop questions answerable without annotations");

    auto* discover = app.add_subcommand("discover", "build causal graphs via the four-agent protocol");
    auto* filter = app.add_subcommand("filter", "apply the graph-complexity threshold filter");
    auto* generate = app.add_subcommand("generate", "generate candidate counterfactual questions");
    auto* verify = app.add_subcommand("verify", "run paired answer-model verification");
    auto* package = app.add_subcommand("package", "assemble the benchmark dataset bundle");

    std::string samples_path;
    auto* score = app.add_subcommand("score", "score sampled model outputs with the dual reward");
    score->add_option("--samples", samples_path, "sampled model outputs JSON")->required();

    std::string predictions_path, labels_path;
    bool categorize = false;
    auto* eval = app.add_subcommand("eval", "score a predictions file into accuracy reports");
    eval->add_option("--predictions", predictions_path, "predictions JSON")->required();
    eval->add_option("--labels", labels_path, "human edge-label JSON for graph quality metrics");
    eval->add_flag("--categorize", categorize, "bucket wrong answers via a judge call");

    auto* stats = app.add_subcommand("stats", "dataset statistics over annotations and bundle");

    // Global options may appear after the subcommand name.
    for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const cfqa::PipelineConfig cfg = resolve_config(o);
        if (discover->parsed()) return report(cfqa::run_discover(cfg));
        if (filter->parsed()) return report(cfqa::run_filter(cfg));
        if (generate->parsed()) return report(cfqa::run_generate(cfg));
        if (verify->parsed()) return report(cfqa::run_verify(cfg));
        if (package->parsed()) return report(cfqa::run_package(cfg));
        if (score->parsed()) return report(cfqa::run_score(cfg, samples_path));
        if (eval->parsed()) return report(cfqa::run_eval(cfg, predictions_path, labels_path, categorize));
        if (stats->parsed()) return report(cfqa::run_stats(cfg));
    } catch (const cfqa::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cfqa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
