#pragma once

// Synthetic multi-user, multi-trial session generator with planted skill
// dynamics: operation durations and behavioural noise shrink with practice,
// early trials contain unnecessary interactions, and chosen trials are
// planted as clean expert demonstrations.

#include "opskill/evaluation.hpp"
#include "opskill/records.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace opskill {

struct SynthTask {
    std::string task_id;
    std::vector<std::vector<int>> groups;  ///< script; each group's steps may be reordered
    std::map<int, double> difficulty;      ///< base difficulty rating per step (hotspot id)
};

struct SynthSpec {
    int users = 12;
    int trials_per_user = 12;  ///< spread over the tasks alternately
    std::vector<SynthTask> tasks = default_tasks();
    int hotspot_count = 14;  ///< hotspots 1..M placed left to right

    double base_gaze_s = 0.8;  ///< per-unit period durations at trial 1
    double base_approach_s = 1.0;
    double base_operate_s = 1.5;
    double difficulty_slowdown = 0.15;  ///< G duration grows by this fraction per difficulty point

    double duration_decay = 0.85;   ///< per-trial multiplicative factor in (0, 1]
    double duration_jitter = 0.04;  ///< relative sd of a unit's total duration
    double period_jitter = 0.3;     ///< relative sd of each period before renormalising the split
    double user_spread = 0.08;      ///< relative sd of a user's overall pace

    double gaze_noise_px = 15.0;    ///< gaze sd at trial 1
    double gaze_offset_px = 60.0;   ///< mean gaze distance from the hotspot while operating
    double head_noise_deg = 20.0;   ///< head angular-velocity sd at trial 1, deg/s
    double noise_decay = 0.95;      ///< per-trial factor on gaze and head sd
    double gaze_dropout = 0.02;     ///< probability a gaze sample is invalid

    double error_rate = 0.3;       ///< per-gap probability of an unnecessary touch at trial 1
    double error_decay = 0.7;      ///< per-trial factor on error and omission rates
    double omission_rate = 0.05;   ///< per-step probability of skipping a step at trial 1
    double repeat_share = 0.3;     ///< share of unnecessary touches that repeat the previous step
    double order_swap_rate = 0.5;  ///< probability of a non-written ordering of each group
    double spurious_touch_rate = 0.1;  ///< per-unit probability of a sub-threshold touch
    double touch_jitter_px = 4.0;

    int experts_per_task = 0;      ///< last trials of users 1..E are clean experts
    double expert_speedup = 0.7;   ///< duration factor for experts
    double expert_noise = 0.5;     ///< noise factor for experts

    double knowhow_decay = 0.8;    ///< per-trial factor on the learnable part of difficulty
    double rating_noise = 0.3;

    double fps = 30.0;
    MapExtent map{1920.0, 1080.0};
    CameraIntrinsics intrinsics{1280.0, 720.0, 3.6, 2.0, 1.88};
    std::uint64_t seed = 42;

    static std::vector<SynthTask> default_tasks();
    /// Same spec with every stochastic ingredient switched off.
    [[nodiscard]] SynthSpec noiseless() const;
    void check() const;  ///< throws ConfigError
};

struct SynthTruth {
    std::map<std::string, ManualSpec> manuals;
    std::vector<TrialKey> experts;
    std::vector<std::pair<double, double>> hotspot_locations;  ///< index = id - 1
};

SessionSet generate_dataset(const SynthSpec& spec);
SynthTruth planted_truth(const SynthSpec& spec);

std::string truth_to_json(const SynthTruth& truth);
SynthTruth truth_from_json(std::string_view document);

std::string synth_spec_to_json(const SynthSpec& spec);
/// Missing keys keep their defaults.
SynthSpec synth_spec_from_json(std::string_view document);

/// Session file name for a trial, e.g. "u03_t1_n02.session.json".
std::string session_file_name(const TrialKey& key);

/// Writes one session file per trial plus truth.json into `dir`.
void write_dataset(const SessionSet& set, const SynthTruth& truth, const std::filesystem::path& dir);

}  // namespace opskill
