#include "opskill/pipeline.hpp"

#include "opskill/error.hpp"

#include <algorithm>

#include <json.hpp>

namespace opskill {

void PipelineConfig::check() const
{
    if (!(segmentation.min_touch_duration >= 0.0)) throw ConfigError("segmentation.min_touch_duration must be >= 0");
    if (!(segmentation.cluster_radius > 0.0)) throw ConfigError("segmentation.cluster_radius must be > 0");
    if (!(segmentation.merge_gap >= 0.0)) throw ConfigError("segmentation.merge_gap must be >= 0");
    if (feature_count < 1) throw ConfigError("feature_count must be >= 1");
    if (!(map.width_px > 0.0 && map.height_px > 0.0)) throw ConfigError("map extent must be positive");
    if (prototype.feature_set.empty()) {
        // The feature set is filled per task from the skill table; check the rest.
        if (!prototype.weights.empty()) throw ConfigError("prototype weights need an explicit feature_set");
        PrototypeConfig probe = prototype;
        probe.feature_set = {"dur_all"};
        probe.check();
    } else {
        prototype.check();
    }
    synth.check();
}

namespace {

using nlohmann::json;

std::string mode_name(HotspotMode m) { return m == HotspotMode::All ? "all" : "difficult"; }

HotspotMode parse_mode(const std::string& s)
{
    if (s == "all" || s == "AL") return HotspotMode::All;
    if (s == "difficult" || s == "DF") return HotspotMode::Difficult;
    throw ConfigError("unknown hotspot_mode '" + s + "'");
}

}  // namespace

std::string config_to_json(const PipelineConfig& c)
{
    json doc;
    doc["segmentation"] = {{"min_touch_duration", c.segmentation.min_touch_duration},
                           {"cluster_radius", c.segmentation.cluster_radius},
                           {"merge_gap", c.segmentation.merge_gap}};
    const auto& p = c.prototype;
    doc["prototype"] = {{"feature_set", p.feature_set},
                        {"weights", p.weights},
                        {"pool_size_n", p.pool_size_n},
                        {"select_q", p.select_q},
                        {"hotspot_mode", mode_name(p.hotspot_mode)},
                        {"difficult_threshold", p.difficult_threshold},
                        {"use_global", p.use_global},
                        {"majority_threshold", p.majority_threshold}};
    doc["feature_count"] = c.feature_count;
    doc["pooling"] = c.pooling == SkillPooling::WithinUserAverage ? "within_user" : "pooled";
    doc["match"] = c.match == MatchMode::Multiset ? "multiset" : "lcs";
    doc["integrate_rest"] = c.integrate_rest;
    doc["synth"] = json::parse(synth_spec_to_json(c.synth));
    doc["map"] = {{"width_px", c.map.width_px}, {"height_px", c.map.height_px}};
    doc["data"] = c.data;
    doc["manual"] = c.manual;
    doc["out"] = c.out;
    return doc.dump(2);
}

PipelineConfig config_from_json(std::string_view document)
{
    PipelineConfig c;
    try {
        const json doc = json::parse(document);
        if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
        if (doc.contains("segmentation")) {
            const auto& s = doc["segmentation"];
            c.segmentation.min_touch_duration = s.value("min_touch_duration", c.segmentation.min_touch_duration);
            c.segmentation.cluster_radius = s.value("cluster_radius", c.segmentation.cluster_radius);
            c.segmentation.merge_gap = s.value("merge_gap", c.segmentation.merge_gap);
        }
        if (doc.contains("prototype")) {
            const auto& s = doc["prototype"];
            auto& p = c.prototype;
            p.feature_set = s.value("feature_set", p.feature_set);
            p.weights = s.value("weights", p.weights);
            p.pool_size_n = s.value("pool_size_n", p.pool_size_n);
            p.select_q = s.value("select_q", p.select_q);
            if (s.contains("hotspot_mode")) p.hotspot_mode = parse_mode(s["hotspot_mode"].get<std::string>());
            p.difficult_threshold = s.value("difficult_threshold", p.difficult_threshold);
            p.use_global = s.value("use_global", p.use_global);
            p.majority_threshold = s.value("majority_threshold", p.majority_threshold);
        }
        c.feature_count = doc.value("feature_count", c.feature_count);
        if (doc.contains("pooling")) {
            const auto s = doc["pooling"].get<std::string>();
            if (s == "within_user") c.pooling = SkillPooling::WithinUserAverage;
            else if (s == "pooled") c.pooling = SkillPooling::PooledRanks;
            else throw ConfigError("unknown pooling '" + s + "'");
        }
        if (doc.contains("match")) {
            const auto s = doc["match"].get<std::string>();
            if (s == "multiset") c.match = MatchMode::Multiset;
            else if (s == "lcs") c.match = MatchMode::Lcs;
            else throw ConfigError("unknown match mode '" + s + "'");
        }
        c.integrate_rest = doc.value("integrate_rest", c.integrate_rest);
        if (doc.contains("synth")) c.synth = synth_spec_from_json(doc["synth"].dump());
        if (doc.contains("map")) {
            c.map.width_px = doc["map"].value("width_px", c.map.width_px);
            c.map.height_px = doc["map"].value("height_px", c.map.height_px);
        }
        c.data = doc.value("data", c.data);
        c.manual = doc.value("manual", c.manual);
        c.out = doc.value("out", c.out);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.check();
    return c;
}

Analysis analyze(const SessionSet& set, const PipelineConfig& config)
{
    Analysis an;
    an.registry = cluster_touches(set, config.segmentation);
    an.labeled = assign_hotspots(set, an.registry, config.segmentation);
    for (const auto& trial : an.labeled.trials) {
        auto ous = segment_units(trial, an.registry, config.segmentation);
        an.features[trial.key()] = extract_all(trial, ous, an.registry);
        an.units[trial.key()] = std::move(ous);
    }
    an.table = build_feature_table(an.features, feature_names());

    for (const auto& task_id : task_ids(an.labeled)) {
        TaskInputs task;
        task.task_id = task_id;
        std::map<TrialKey, std::vector<FeatureVector>> task_features;
        for (const auto& [key, vecs] : an.features) {
            if (key.task_id != task_id) continue;
            task_features[key] = vecs;
            Experience e;
            e.trial = key;
            for (const auto& v : vecs) e.hotspot_sequence.push_back(v.hotspot_id);
            e.units = vecs;
            task.experiences.push_back(std::move(e));
        }
        task.skill_table = skill_correlation_table(build_feature_table(task_features, feature_names()), config.pooling);
        try {
            task.difficult = difficult_hotspots(trials_of_task(an.labeled, task_id), config.prototype.difficult_threshold);
        } catch (const MissingRatingsError&) {
            task.difficult.clear();
        }
        an.tasks.push_back(std::move(task));
    }
    return an;
}

PrototypeConfig task_prototype_config(const PipelineConfig& config, const TaskInputs& task)
{
    PrototypeConfig c = config.prototype;
    if (c.feature_set.empty()) {
        c.feature_set = top_k_features(task.skill_table, config.feature_count);
        c.weights.clear();
    }
    return c;
}

std::vector<TaskResult> select_and_model(const Analysis& analysis, const PipelineConfig& config)
{
    std::vector<TaskResult> out;
    for (const auto& task : analysis.tasks) {
        TaskResult r;
        r.task_id = task.task_id;
        r.config = task_prototype_config(config, task);
        r.selection = select_prototypes(task.experiences, r.config, task.skill_table, task.difficult);
        std::vector<Experience> protos;
        for (std::size_t j : r.selection.selected) protos.push_back(task.experiences[j]);
        r.model = build_baseline(protos);
        if (config.integrate_rest) {
            for (std::size_t j = 0; j < task.experiences.size(); ++j) {
                if (std::find(r.selection.selected.begin(), r.selection.selected.end(), j) !=
                    r.selection.selected.end())
                    continue;
                if (task.experiences[j].hotspot_sequence.empty()) continue;
                r.model = integrate(std::move(r.model), task.experiences[j]);
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace opskill
