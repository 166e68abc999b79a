#pragma once

// Per-period behavioral features of operational units: gaze/hand distance
// statistics, head angular velocity, and trial-level gaze-head correlation.

#include "opskill/records.hpp"
#include "opskill/segmentation.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace opskill {

struct DistanceSeries {
    std::vector<double> t;  ///< seconds, sorted
    std::vector<double> d;  ///< pixels

    [[nodiscard]] std::size_t size() const { return d.size(); }
};

struct PeriodStats {
    double duration_T = 0.0;       ///< seconds
    double mean_distance_D = 0.0;  ///< pixels
    double velocity_V = 0.0;       ///< mean |dd/dt|, pixels/second
    double variance = 0.0;         ///< population variance, pixels^2
    double frequency_f = 0.0;      ///< sign changes of the difference sequence per second

    bool operator==(const PeriodStats&) const = default;
};

/// Angular velocity in degrees per second (or per frame, where noted).
struct AngularVelocity {
    double x = 0.0;
    double y = 0.0;
};

struct HeadStats {
    double mean_speed_x = 0.0;  ///< deg/s
    double mean_speed_y = 0.0;
    double variance_x = 0.0;    ///< (deg/s)^2
    double variance_y = 0.0;

    bool operator==(const HeadStats&) const = default;
};

enum class Period : std::uint8_t { G = 0, A = 1, O = 2 };
inline constexpr std::array<Period, 3> kPeriods{Period::G, Period::A, Period::O};
char period_letter(Period p);

struct PeriodFeatures {
    PeriodStats gaze;
    PeriodStats hand;
    HeadStats head;

    bool operator==(const PeriodFeatures&) const = default;
};

struct FeatureVector {
    TrialKey trial;
    int hotspot_id = 0;
    int step = 0;  ///< position of the unit within its trial, from 0
    std::array<PeriodFeatures, 3> periods{};
    double total_duration = 0.0;

    [[nodiscard]] const PeriodFeatures& at(Period p) const { return periods[static_cast<int>(p)]; }
    bool operator==(const FeatureVector&) const = default;
};

struct AxisCorrelation {
    double r_x = 0.0;
    double r_y = 0.0;
};

/// Distances from valid gaze samples inside `interval` to the hotspot centroid.
DistanceSeries distance_series(std::span<const GazeSample> track, const Hotspot& hotspot,
                               const Interval& interval);
/// Distances from visible hand samples inside `interval` to the hotspot centroid.
DistanceSeries distance_series(std::span<const HandSample> track, const Hotspot& hotspot,
                               const Interval& interval);

/// Duration, mean distance, velocity, variance and sign-change frequency of a
/// distance series observed over a period of `duration` seconds. Zero-length
/// differences are skipped when counting sign changes. Throws
/// NonPositiveDurationError when the series is nonempty and duration <= 0.
PeriodStats series_stats(const DistanceSeries& s, double duration);

/// Rotation implied by one global motion sample, in degrees per frame:
/// atan(v / image_size * sensor_size / focal) per axis.
AngularVelocity head_angle_per_frame(const GlobalMotionSample& m, const CameraIntrinsics& k);

/// Same rotation expressed in degrees per second for a frame spacing of
/// `frame_dt` seconds.
AngularVelocity head_angular_velocity(const GlobalMotionSample& m, const CameraIntrinsics& k,
                                      double frame_dt);

struct TimedAngularVelocity {
    double t = 0.0;
    AngularVelocity w;
};

/// Head angular velocity for every head-motion sample, using the spacing to
/// the previous sample (the next one for the first sample) as frame time.
std::vector<TimedAngularVelocity> head_velocity_track(const TrialRecord& trial);

HeadStats head_stats(std::span<const TimedAngularVelocity> track, const Interval& interval);

/// Features of one operational unit.
FeatureVector extract_features(const OperationalUnit& ou, const TrialRecord& trial,
                               const HotspotRegistry& registry, int step = 0);

/// Features of every unit of a trial, with steps numbered in order.
std::vector<FeatureVector> extract_all(const TrialRecord& trial, std::span<const OperationalUnit> units,
                                       const HotspotRegistry& registry);

struct TimeSeries {
    std::vector<double> t;
    std::vector<double> v;
};

/// Pearson correlation of two series after linearly resampling the finer one
/// onto the grid of the coarser one (larger median spacing) over their
/// common time range. Throws InsufficientDataError with fewer than three
/// common points or a constant series.
double resampled_pearson(const TimeSeries& a, const TimeSeries& b);

/// Per-axis correlation between gaze displacement rate (px/s) and head
/// angular velocity (deg/s), over the whole trial or a window of it.
AxisCorrelation gaze_head_correlation(const TrialRecord& trial,
                                      std::optional<Interval> window = std::nullopt);

struct HeatGrid {
    int rows = 0;
    int cols = 0;
    double cell_px = 1.0;
    std::vector<long long> counts;  ///< row-major

    [[nodiscard]] long long at(int row, int col) const { return counts[row * cols + col]; }
    [[nodiscard]] long long total() const;
    bool operator==(const HeatGrid&) const = default;
};

using SampleFilter = std::function<bool(const TrialRecord&, double t)>;

/// Counts valid gaze samples per map cell. Samples rejected by `filter` or
/// falling outside the map are not counted.
HeatGrid gaze_heat_grid(std::span<const TrialRecord> trials, const SampleFilter& filter, double cell_px,
                        MapExtent map);

// ---------------------------------------------------------------------------
// Named scalar features. Every unit exposes `dur_all` plus, for each period
// P in {G, A, O}: dur_P, gazeD_P, gazeV_P, gazeVar_P, gazeF_P, handD_P,
// handV_P, handVar_P, handF_P, headX_P, headY_P, headVarX_P, headVarY_P.

struct FeatureDef {
    std::string name;
    bool is_duration = false;  ///< trial-level value sums over units; otherwise averages
    std::function<double(const FeatureVector&)> get;
};

const std::vector<FeatureDef>& feature_catalog();
const FeatureDef& feature_def(std::string_view name);  ///< throws ConfigError when unknown
std::vector<std::string> feature_names();

/// Trial-level value of a feature over the units of one trial.
double trial_feature_value(const FeatureDef& def, std::span<const FeatureVector> units);

/// One CSV row per unit, catalog column order.
std::string features_csv(std::span<const FeatureVector> vectors);
std::string heat_grid_csv(const HeatGrid& grid);

}  // namespace opskill
