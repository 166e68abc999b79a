#pragma once

// Hotspot detection from touch events and segmentation of trials into
// operational units (pure-gazing, hand-approaching, operating).

#include "opskill/records.hpp"

#include <span>
#include <string>
#include <vector>

namespace opskill {

/// Half-open time interval [start, end).
struct Interval {
    double start = 0.0;
    double end = 0.0;

    [[nodiscard]] double duration() const { return end - start; }
    [[nodiscard]] bool empty() const { return !(end > start); }
    [[nodiscard]] bool contains(double t) const { return t >= start && t < end; }
    bool operator==(const Interval&) const = default;
};

struct Hotspot {
    int id = 0;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    double radius = 1.0;
    int occurrence_count = 0;  ///< experiences with at least one touch on it

    bool operator==(const Hotspot&) const = default;
};

struct HotspotRegistry {
    std::vector<Hotspot> hotspots;  ///< ids dense from 1, stored in id order
    int total_experiences = 0;

    [[nodiscard]] const Hotspot* find(int id) const;
    bool operator==(const HotspotRegistry&) const = default;
};

struct OperationalUnit {
    int hotspot_id = 0;
    Interval g;  ///< pure-gazing, may be empty
    Interval a;  ///< hand-approaching, may be empty
    Interval o;  ///< operating

    bool operator==(const OperationalUnit&) const = default;
};

struct SegmentationParams {
    double min_touch_duration = 0.3;  ///< seconds
    double cluster_radius = 40.0;     ///< pixels
    double merge_gap = 0.5;           ///< seconds
};

/// Keeps touches lasting at least `min_dur` seconds, in their original order.
std::vector<TouchEvent> filter_short_touches(std::span<const TouchEvent> touches, double min_dur);

/// Single-linkage clustering of every filtered touch location in the set.
/// Two touches share a hotspot when a chain of touches, each within
/// `cluster_radius` of the next, connects them. Hotspot ids are assigned in
/// ascending (centroid_x, centroid_y) order so the result does not depend on
/// the order of trials or touches. Throws EmptyInputError without touches.
HotspotRegistry cluster_touches(const SessionSet& set, const SegmentationParams& params);

/// Id of the hotspot whose centroid is nearest to (x, y); lower id on ties.
int nearest_hotspot(const HotspotRegistry& registry, double x, double y);

/// Returns a copy of the set whose touches are filtered and labeled with the
/// nearest hotspot id.
SessionSet assign_hotspots(const SessionSet& set, const HotspotRegistry& registry,
                           const SegmentationParams& params);

/// Registry with occurrence counts recomputed over a subset of labeled trials
/// (for example, the trials of one task).
HotspotRegistry recount_occurrences(const HotspotRegistry& registry,
                                    std::span<const TrialRecord* const> trials);

/// Splits a labeled trial into operational units, one per merged touch group.
/// Touches without a hotspot id known to the registry are ignored.
std::vector<OperationalUnit> segment_units(const TrialRecord& trial, const HotspotRegistry& registry,
                                           const SegmentationParams& params);

std::string registry_to_json(const HotspotRegistry& registry);
HotspotRegistry registry_from_json(std::string_view document);

}  // namespace opskill
