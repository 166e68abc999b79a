#pragma once

// End-to-end analysis: clustering, segmentation, features, skill tables and
// per-task prototype-selection inputs, driven by one configuration document.

#include "opskill/evaluation.hpp"
#include "opskill/features.hpp"
#include "opskill/prototype.hpp"
#include "opskill/records.hpp"
#include "opskill/segmentation.hpp"
#include "opskill/stats.hpp"
#include "opskill/synth.hpp"
#include "opskill/taskmodel.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace opskill {

struct PipelineConfig {
    SegmentationParams segmentation;
    PrototypeConfig prototype;  ///< feature_set empty: top `feature_count` skill features
    int feature_count = 5;
    SkillPooling pooling = SkillPooling::WithinUserAverage;
    MatchMode match = MatchMode::Multiset;
    bool integrate_rest = false;  ///< task model: integrate non-prototype experiences too
    SynthSpec synth;
    MapExtent map;
    std::string data;    ///< dataset directory, manifest or single session file
    std::string manual;  ///< manual JSON; empty uses <data>/truth.json when present
    std::string out;     ///< output directory

    void check() const;  ///< throws ConfigError
};

std::string config_to_json(const PipelineConfig& config);
/// Missing keys keep their defaults. Relative paths are kept as written.
PipelineConfig config_from_json(std::string_view document);

struct Analysis {
    HotspotRegistry registry;
    SessionSet labeled;  ///< filtered touches carrying hotspot ids
    std::map<TrialKey, std::vector<OperationalUnit>> units;
    std::map<TrialKey, std::vector<FeatureVector>> features;
    FeatureTable table;  ///< every catalog feature, every trial
    std::vector<TaskInputs> tasks;  ///< experiences ordered by trial key
};

/// Runs everything up to (not including) prototype selection.
Analysis analyze(const SessionSet& set, const PipelineConfig& config);

/// The configured prototype configuration for one task (features filled in
/// from the task's skill table when the config leaves them empty).
PrototypeConfig task_prototype_config(const PipelineConfig& config, const TaskInputs& task);

struct TaskResult {
    std::string task_id;
    PrototypeConfig config;
    SelectionResult selection;
    TaskModel model;
};

/// Prototype selection and task-model construction for every task.
std::vector<TaskResult> select_and_model(const Analysis& analysis, const PipelineConfig& config);

}  // namespace opskill
