#pragma once
// Video action-annotation ingestion: the canonical input for the pipeline.
//
// One annotation document describes one video as an ordered list of
// timestamped action steps. Parsing renumbers step ids to 1..n in timestamp
// order (stable on ties) so that every downstream id reference is canonical.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cfqa/errors.hpp"

namespace cfqa {

using json = nlohmann::json;

enum class InteractionType { H2H, H2O };

inline std::string to_string(InteractionType t) {
    return t == InteractionType::H2H ? "H2H" : "H2O";
}

inline InteractionType interaction_from_string(const std::string& s) {
    if (s == "H2H") return InteractionType::H2H;
    if (s == "H2O") return InteractionType::H2O;
    throw ParseError("annotation field 'interaction_type': expected \"H2H\" or \"H2O\", got \"" + s + "\"");
}

struct ActionStep {
    int id = 0;                // consecutive from 1, in timestamp order
    std::string text;          // non-empty action description
    double timestamp_s = 0.0;  // seconds from video start

    bool operator==(const ActionStep&) const = default;
};

struct VideoAnnotation {
    std::string video_id;
    std::string task_name;
    InteractionType interaction_type = InteractionType::H2O;
    double duration_s = 0.0;
    std::vector<ActionStep> steps;
    std::optional<std::string> captions;

    bool operator==(const VideoAnnotation&) const = default;

    const ActionStep& step(int id) const {
        if (id < 1 || id > static_cast<int>(steps.size()))
            throw ValidationError("video " + video_id + ": no step with id " + std::to_string(id));
        return steps[static_cast<std::size_t>(id - 1)];
    }

    bool has_step(int id) const { return id >= 1 && id <= static_cast<int>(steps.size()); }
};

struct DatasetStats {
    int video_count = 0;
    double h2h_fraction = 0.0;
    double h2o_fraction = 0.0;
    std::map<int, double> duration_percentiles;  // percentile -> seconds
    std::map<int, int> per_level_counts;         // level -> question count
};

namespace detail {

inline const json& require_field(const json& doc, const char* name) {
    auto it = doc.find(name);
    if (it == doc.end())
        throw ParseError(std::string("annotation field '") + name + "': missing");
    return *it;
}

inline std::string require_string(const json& doc, const char* name) {
    const json& v = require_field(doc, name);
    if (!v.is_string())
        throw ParseError(std::string("annotation field '") + name + "': expected string");
    return v.get<std::string>();
}

inline double require_number(const json& doc, const char* name) {
    const json& v = require_field(doc, name);
    if (!v.is_number())
        throw ParseError(std::string("annotation field '") + name + "': expected number");
    return v.get<double>();
}

}  // namespace detail

// Parses one annotation document. Steps are stably sorted by timestamp and
// renumbered 1..n; source ids are discarded.
inline VideoAnnotation parse_annotation(const std::string& raw) {
    json doc;
    try {
        doc = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("annotation document: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("annotation document: expected a JSON object");

    VideoAnnotation v;
    v.video_id = detail::require_string(doc, "video_id");
    if (v.video_id.empty()) throw ParseError("annotation field 'video_id': must be non-empty");
    v.task_name = detail::require_string(doc, "task_name");
    v.interaction_type = interaction_from_string(detail::require_string(doc, "interaction_type"));
    v.duration_s = detail::require_number(doc, "duration_s");
    if (!(v.duration_s > 0.0) || !std::isfinite(v.duration_s))
        throw ParseError("annotation field 'duration_s': expected positive finite number");

    const json& steps = detail::require_field(doc, "steps");
    if (!steps.is_array()) throw ParseError("annotation field 'steps': expected array");
    if (steps.empty()) throw ValidationError("annotation field 'steps': must not be empty");

    for (const json& s : steps) {
        if (!s.is_object()) throw ParseError("annotation field 'steps': entries must be objects");
        ActionStep step;
        step.text = detail::require_string(s, "text");
        if (step.text.empty()) throw ValidationError("annotation field 'steps.text': must be non-empty");
        step.timestamp_s = detail::require_number(s, "timestamp_s");
        if (step.timestamp_s < 0.0 || !std::isfinite(step.timestamp_s))
            throw ValidationError("annotation field 'steps.timestamp_s': must be non-negative");
        if (step.timestamp_s > v.duration_s)
            throw ValidationError("annotation field 'steps.timestamp_s': " +
                                  std::to_string(step.timestamp_s) + " exceeds duration_s");
        v.steps.push_back(std::move(step));
    }
    if (v.steps.size() < 2)
        throw ValidationError("annotation field 'steps': need at least 2 steps, got " +
                              std::to_string(v.steps.size()));

    // Ties keep source-document order.
    std::stable_sort(v.steps.begin(), v.steps.end(),
                     [](const ActionStep& a, const ActionStep& b) { return a.timestamp_s < b.timestamp_s; });
    for (std::size_t i = 0; i < v.steps.size(); ++i) v.steps[i].id = static_cast<int>(i + 1);

    if (auto it = doc.find("captions"); it != doc.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError("annotation field 'captions': expected string");
        v.captions = it->get<std::string>();
    }
    return v;
}

inline json annotation_to_json(const VideoAnnotation& v) {
    json steps = json::array();
    for (const auto& s : v.steps)
        steps.push_back({{"id", s.id}, {"text", s.text}, {"timestamp_s", s.timestamp_s}});
    json doc{{"video_id", v.video_id},
             {"task_name", v.task_name},
             {"interaction_type", to_string(v.interaction_type)},
             {"duration_s", v.duration_s},
             {"steps", std::move(steps)}};
    if (v.captions) doc["captions"] = *v.captions;
    return doc;
}

// Byte-stable: keys are emitted in sorted order, so serialize(parse(x)) is a
// fixed point and parse(serialize(v)) == v.
inline std::string serialize_annotation(const VideoAnnotation& v) {
    return annotation_to_json(v).dump(2) + "\n";
}

// The n-1 consecutive step pairs, in order.
inline std::vector<std::pair<ActionStep, ActionStep>> adjacent_pairs(const VideoAnnotation& v) {
    std::vector<std::pair<ActionStep, ActionStep>> pairs;
    pairs.reserve(v.steps.size() - 1);
    for (std::size_t i = 0; i + 1 < v.steps.size(); ++i)
        pairs.emplace_back(v.steps[i], v.steps[i + 1]);
    return pairs;
}

// Nearest-rank percentile over sorted values: rank ceil(p/100 * N), 1-based.
inline double nearest_rank_percentile(std::vector<double> values, int percentile) {
    if (values.empty()) throw ValidationError("percentile of empty value set");
    if (percentile < 0 || percentile > 100)
        throw ValidationError("percentile must be in [0,100], got " + std::to_string(percentile));
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
    if (rank < 1) rank = 1;
    return values[rank - 1];
}

struct QuestionLevelCount {
    int level = 0;  // 1, 2 or 3
};

inline DatasetStats dataset_stats(const std::vector<VideoAnnotation>& collection,
                                  const std::vector<QuestionLevelCount>* questions = nullptr,
                                  const std::vector<int>& percentiles = {50, 90, 95}) {
    if (collection.empty()) throw ValidationError("dataset_stats: empty collection");

    DatasetStats stats;
    stats.video_count = static_cast<int>(collection.size());
    int h2h = 0;
    std::vector<double> durations;
    durations.reserve(collection.size());
    for (const auto& v : collection) {
        if (v.interaction_type == InteractionType::H2H) ++h2h;
        durations.push_back(v.duration_s);
    }
    stats.h2h_fraction = static_cast<double>(h2h) / stats.video_count;
    stats.h2o_fraction = static_cast<double>(stats.video_count - h2h) / stats.video_count;

    for (int p : percentiles)
        stats.duration_percentiles[p] = nearest_rank_percentile(durations, p);

    stats.per_level_counts = {{1, 0}, {2, 0}, {3, 0}};
    if (questions != nullptr)
        for (const auto& q : *questions) ++stats.per_level_counts[q.level];
    return stats;
}

inline json dataset_stats_to_json(const DatasetStats& s) {
    json percentiles = json::object();
    for (const auto& [p, v] : s.duration_percentiles) percentiles[std::to_string(p)] = v;
    json levels = json::object();
    for (const auto& [level, count] : s.per_level_counts) levels[std::to_string(level)] = count;
    return json{{"video_count", s.video_count},
                {"h2h_fraction", s.h2h_fraction},
                {"h2o_fraction", s.h2o_fraction},
                {"duration_percentiles", std::move(percentiles)},
                {"per_level_counts", std::move(levels)}};
}

}  // namespace cfqa
