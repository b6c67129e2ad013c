#pragma once
// One JSON config file drives every pipeline command. Defaults are the
// published operating point: thresholds 0.2 / 3 / 0.12, observer fraction
// 0.2, 10 candidates per level, K = 4 samples, alpha = beta = 0.5.

#include <cstdint>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "cfqa/causal_graph.hpp"
#include "cfqa/errors.hpp"

namespace cfqa {

struct BackendSettings {
    std::string base_url;
    std::map<std::string, std::string> models{{"agents", "deepseek-v3.1"},
                                              {"generator", "deepseek-v3"},
                                              {"answerer", "qwen-2.5-32b"},
                                              {"judge", "qwen-2.5-32b"}};
    int in_flight_cap = 8;
    int retry_limit = 3;
};

struct PipelinePaths {
    std::string annotations_dir;
    std::string output_dir = "out";
    std::string fixtures_path;
};

struct PipelineFlags {
    bool mock = false;
    bool strict_mock = false;
    bool difficulty_mode = false;
    bool adjacent_force_include = true;
    bool batch_observer = true;
};

struct PipelineConfig {
    BackendSettings backend;
    FilterThresholds thresholds;  // {0.2, 3, 0.12}
    double observer_fraction = 0.2;
    int candidates_per_level = 10;
    int k_samples = 4;
    double alpha = 0.5;
    double beta = 0.5;
    std::uint64_t seed = 0;
    int workers = 4;
    int window = 0;  // 0 = unbounded candidate window
    double decoy_cosine_max = 0.95;
    double grounding_cosine = 0.8;
    int embedding_dim = 256;
    bool population_std = true;
    PipelinePaths paths;
    PipelineFlags flags;

    void validate() const {
        if (thresholds.ancd < 0.0 || thresholds.depth < 0 || thresholds.cnda < 0.0)
            throw UsageError("config: thresholds must be non-negative");
        if (!(observer_fraction > 0.0) || observer_fraction > 1.0)
            throw UsageError("config: observer_fraction must be in (0,1]");
        if (alpha < 0.0 || beta < 0.0) throw UsageError("config: alpha and beta must be non-negative");
        if (candidates_per_level < 1) throw UsageError("config: candidates_per_level must be >= 1");
        if (k_samples < 2) throw UsageError("config: k_samples must be >= 2");
        if (workers < 1) throw UsageError("config: workers must be >= 1");
        if (embedding_dim < 1) throw UsageError("config: embedding_dim must be >= 1");
    }

    static PipelineConfig from_json(const json& doc);
    static PipelineConfig from_file(const std::string& path);
    json resolved() const;
};

inline PipelineConfig PipelineConfig::from_json(const json& doc) {
    PipelineConfig cfg;
    if (!doc.is_object()) throw UsageError("config: expected a JSON object");

    if (auto it = doc.find("backend"); it != doc.end()) {
        cfg.backend.base_url = it->value("base_url", cfg.backend.base_url);
        cfg.backend.in_flight_cap = it->value("in_flight_cap", cfg.backend.in_flight_cap);
        cfg.backend.retry_limit = it->value("retry_limit", cfg.backend.retry_limit);
        if (auto m = it->find("models"); m != it->end() && m->is_object())
            for (const auto& [role, name] : m->items()) cfg.backend.models[role] = name.get<std::string>();
    }
    if (auto it = doc.find("thresholds"); it != doc.end()) {
        cfg.thresholds.ancd = it->value("ancd", cfg.thresholds.ancd);
        cfg.thresholds.depth = it->value("depth", cfg.thresholds.depth);
        cfg.thresholds.cnda = it->value("cnda", cfg.thresholds.cnda);
    }
    cfg.observer_fraction = doc.value("observer_fraction", cfg.observer_fraction);
    cfg.candidates_per_level = doc.value("candidates_per_level", cfg.candidates_per_level);
    cfg.k_samples = doc.value("k_samples", cfg.k_samples);
    cfg.alpha = doc.value("alpha", cfg.alpha);
    cfg.beta = doc.value("beta", cfg.beta);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.workers = doc.value("workers", cfg.workers);
    cfg.window = doc.value("window", cfg.window);
    cfg.decoy_cosine_max = doc.value("decoy_cosine_max", cfg.decoy_cosine_max);
    cfg.grounding_cosine = doc.value("grounding_cosine", cfg.grounding_cosine);
    cfg.embedding_dim = doc.value("embedding_dim", cfg.embedding_dim);
    cfg.population_std = doc.value("population_std", cfg.population_std);
    if (auto it = doc.find("paths"); it != doc.end()) {
        cfg.paths.annotations_dir = it->value("annotations_dir", cfg.paths.annotations_dir);
        cfg.paths.output_dir = it->value("output_dir", cfg.paths.output_dir);
        cfg.paths.fixtures_path = it->value("fixtures_path", cfg.paths.fixtures_path);
    }
    if (auto it = doc.find("flags"); it != doc.end()) {
        cfg.flags.mock = it->value("mock", cfg.flags.mock);
        cfg.flags.strict_mock = it->value("strict_mock", cfg.flags.strict_mock);
        cfg.flags.difficulty_mode = it->value("difficulty_mode", cfg.flags.difficulty_mode);
        cfg.flags.adjacent_force_include = it->value("adjacent_force_include", cfg.flags.adjacent_force_include);
        cfg.flags.batch_observer = it->value("batch_observer", cfg.flags.batch_observer);
    }
    cfg.validate();
    return cfg;
}

inline PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config: cannot open " + path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw UsageError("config: invalid JSON in " + path);
    return from_json(doc);
}

inline json PipelineConfig::resolved() const {
    json models = json::object();
    for (const auto& [role, name] : backend.models) models[role] = name;
    return json{
        {"backend", json{{"base_url", backend.base_url},
                         {"models", std::move(models)},
                         {"in_flight_cap", backend.in_flight_cap},
                         {"retry_limit", backend.retry_limit}}},
        {"thresholds",
         json{{"ancd", thresholds.ancd}, {"depth", thresholds.depth}, {"cnda", thresholds.cnda}}},
        {"observer_fraction", observer_fraction},
        {"candidates_per_level", candidates_per_level},
        {"k_samples", k_samples},
        {"alpha", alpha},
        {"beta", beta},
        {"seed", seed},
        {"workers", workers},
        {"window", window},
        {"decoy_cosine_max", decoy_cosine_max},
        {"grounding_cosine", grounding_cosine},
        {"embedding_dim", embedding_dim},
        {"population_std", population_std},
        {"paths", json{{"annotations_dir", paths.annotations_dir},
                       {"output_dir", paths.output_dir},
                       {"fixtures_path", paths.fixtures_path}}},
        {"flags", json{{"mock", flags.mock},
                       {"strict_mock", flags.strict_mock},
                       {"difficulty_mode", flags.difficulty_mode},
                       {"adjacent_force_include", flags.adjacent_force_include},
                       {"batch_observer", flags.batch_observer}}}};
}

}  // namespace cfqa
