#pragma once

// Canonical data model for recorded operation sessions, plus the JSON
// session-file format and dataset loading.

#include <compare>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace opskill {

/// Identity of one trial: one user's n-th attempt at one task.
struct TrialKey {
    std::string user_id;
    std::string task_id;
    int trial_index = 1;

    auto operator<=>(const TrialKey&) const = default;
    bool operator==(const TrialKey&) const = default;
};

std::string to_string(const TrialKey& key);

struct GazeSample {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    bool valid = true;

    bool operator==(const GazeSample&) const = default;
};

struct HandSample {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    bool visible = true;

    bool operator==(const HandSample&) const = default;
};

/// Egocentric global motion vector, pixels per frame.
struct GlobalMotionSample {
    double t = 0.0;
    double vx = 0.0;
    double vy = 0.0;

    bool operator==(const GlobalMotionSample&) const = default;
};

struct CameraIntrinsics {
    double image_width_px = 0.0;
    double image_height_px = 0.0;
    double sensor_width_mm = 0.0;
    double sensor_height_mm = 0.0;
    double focal_mm = 0.0;

    bool operator==(const CameraIntrinsics&) const = default;
    [[nodiscard]] bool all_positive() const;
};

struct TouchEvent {
    double t_start = 0.0;
    double t_end = 0.0;
    double x = 0.0;
    double y = 0.0;
    std::optional<int> hotspot_id;

    [[nodiscard]] double duration() const { return t_end - t_start; }
    bool operator==(const TouchEvent&) const = default;
};

/// Subjective difficulty of one operation step. `step_index` names the step,
/// which is the hotspot id the step operates on.
struct DifficultyRating {
    int step_index = 0;
    int score = 0;

    bool operator==(const DifficultyRating&) const = default;
};

struct TrialRecord {
    std::string user_id;
    std::string task_id;
    int trial_index = 1;
    std::vector<GazeSample> gaze;
    std::vector<HandSample> hand;
    std::vector<GlobalMotionSample> head_motion;
    std::vector<TouchEvent> touches;
    std::optional<CameraIntrinsics> intrinsics;
    std::vector<DifficultyRating> ratings;

    [[nodiscard]] TrialKey key() const { return {user_id, task_id, trial_index}; }
    /// Earliest timestamp across all tracks (0 when every track is empty).
    [[nodiscard]] double start_time() const;
    /// Latest timestamp across all tracks (0 when every track is empty).
    [[nodiscard]] double end_time() const;

    bool operator==(const TrialRecord&) const = default;
};

struct MapExtent {
    double width_px = 1920.0;
    double height_px = 1080.0;
};

struct SessionSet {
    std::vector<TrialRecord> trials;
    double map_width_px = 1920.0;
    double map_height_px = 1080.0;

    bool operator==(const SessionSet&) const = default;
};

struct Diagnostic {
    TrialKey trial;
    std::string rule;  // "schema", "order", "bounds", "duplicate", "empty"
    std::string message;
};

/// Parses and validates one session document.
/// Throws SchemaError, OrderError or BoundsError.
TrialRecord parse_trial(std::string_view document);

std::string serialize_trial(const TrialRecord& trial);

/// Expands a dataset location into session file paths. A directory yields its
/// `*.session.json` files; any other file is read as a newline-separated
/// manifest unless it is itself a `.json` document.
std::vector<std::filesystem::path> resolve_dataset_paths(const std::filesystem::path& location);

/// Loads trials from files, rejecting duplicate (user, task, trial_index) and
/// ordering the result by (user_id, task_id, trial_index). Parse errors are
/// rethrown with the offending file prepended to the message.
SessionSet load_dataset(std::span<const std::filesystem::path> paths, MapExtent extent = {});

/// Checks every invariant of the set without throwing.
std::vector<Diagnostic> validate(const SessionSet& set);

/// Convenience: trials of a single task, in set order.
std::vector<const TrialRecord*> trials_of_task(const SessionSet& set, std::string_view task_id);
std::vector<std::string> task_ids(const SessionSet& set);

}  // namespace opskill
