#include "opskill/features.hpp"

#include "opskill/error.hpp"
#include "opskill/stats.hpp"
#include "opskill/text.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace opskill {

char period_letter(Period p)
{
    switch (p) {
    case Period::G: return 'G';
    case Period::A: return 'A';
    case Period::O: return 'O';
    }
    return '?';
}

namespace {

template <typename Sample, typename Keep>
DistanceSeries distances(std::span<const Sample> track, const Hotspot& h, const Interval& iv, Keep keep)
{
    DistanceSeries s;
    auto first = std::lower_bound(track.begin(), track.end(), iv.start,
                                  [](const Sample& a, double t) { return a.t < t; });
    for (auto it = first; it != track.end() && it->t < iv.end; ++it) {
        if (!keep(*it)) continue;
        s.t.push_back(it->t);
        s.d.push_back(std::hypot(it->x - h.centroid_x, it->y - h.centroid_y));
    }
    return s;
}

}  // namespace

DistanceSeries distance_series(std::span<const GazeSample> track, const Hotspot& hotspot,
                               const Interval& interval)
{
    return distances(track, hotspot, interval, [](const GazeSample& g) { return g.valid; });
}

DistanceSeries distance_series(std::span<const HandSample> track, const Hotspot& hotspot,
                               const Interval& interval)
{
    return distances(track, hotspot, interval, [](const HandSample& h) { return h.visible; });
}

PeriodStats series_stats(const DistanceSeries& s, double duration)
{
    PeriodStats out;
    out.duration_T = duration;
    const std::size_t n = s.d.size();
    if (n == 0) return out;
    if (!(duration > 0)) throw NonPositiveDurationError("period duration must be positive for a nonempty series");

    double sum = 0.0;
    for (double d : s.d) sum += d;
    out.mean_distance_D = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double d : s.d) ss += (d - out.mean_distance_D) * (d - out.mean_distance_D);
    out.variance = ss / static_cast<double>(n);

    double rate_sum = 0.0;
    std::size_t pairs = 0;
    int last_sign = 0;
    int changes = 0;
    for (std::size_t i = 1; i < n; ++i) {
        const double dd = s.d[i] - s.d[i - 1];
        const double dt = s.t[i] - s.t[i - 1];
        if (dt > 0) {
            rate_sum += std::abs(dd) / dt;
            ++pairs;
        }
        const int sign = (dd > 0) - (dd < 0);
        if (sign == 0) continue;
        if (last_sign != 0 && sign != last_sign) ++changes;
        last_sign = sign;
    }
    if (pairs > 0) out.velocity_V = rate_sum / static_cast<double>(pairs);
    out.frequency_f = static_cast<double>(changes) / duration;
    return out;
}

AngularVelocity head_angle_per_frame(const GlobalMotionSample& m, const CameraIntrinsics& k)
{
    constexpr double to_deg = 180.0 / std::numbers::pi;
    return {std::atan(m.vx / k.image_width_px * k.sensor_width_mm / k.focal_mm) * to_deg,
            std::atan(m.vy / k.image_height_px * k.sensor_height_mm / k.focal_mm) * to_deg};
}

AngularVelocity head_angular_velocity(const GlobalMotionSample& m, const CameraIntrinsics& k,
                                      double frame_dt)
{
    if (!(frame_dt > 0)) throw NonPositiveDurationError("frame spacing must be positive");
    const auto per_frame = head_angle_per_frame(m, k);
    return {per_frame.x / frame_dt, per_frame.y / frame_dt};
}

std::vector<TimedAngularVelocity> head_velocity_track(const TrialRecord& trial)
{
    std::vector<TimedAngularVelocity> out;
    const auto& m = trial.head_motion;
    if (m.size() < 2 || !trial.intrinsics) return out;
    out.reserve(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double dt = i == 0 ? m[1].t - m[0].t : m[i].t - m[i - 1].t;
        out.push_back({m[i].t, head_angular_velocity(m[i], *trial.intrinsics, dt)});
    }
    return out;
}

namespace {

void mean_and_variance(const std::vector<double>& v, double& mean, double& var)
{
    mean = 0.0;
    var = 0.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
}

}  // namespace

HeadStats head_stats(std::span<const TimedAngularVelocity> track, const Interval& interval)
{
    std::vector<double> sx;
    std::vector<double> sy;
    for (const auto& s : track) {
        if (!interval.contains(s.t)) continue;
        sx.push_back(std::abs(s.w.x));
        sy.push_back(std::abs(s.w.y));
    }
    HeadStats out;
    mean_and_variance(sx, out.mean_speed_x, out.variance_x);
    mean_and_variance(sy, out.mean_speed_y, out.variance_y);
    return out;
}

namespace {

FeatureVector extract_with_head(const OperationalUnit& ou, const TrialRecord& trial,
                                const HotspotRegistry& registry, int step,
                                std::span<const TimedAngularVelocity> head)
{
    const Hotspot* h = registry.find(ou.hotspot_id);
    if (h == nullptr) throw NoOccurrenceError("unit refers to unknown hotspot " + std::to_string(ou.hotspot_id));

    FeatureVector fv;
    fv.trial = trial.key();
    fv.hotspot_id = ou.hotspot_id;
    fv.step = step;
    const std::array<Interval, 3> intervals{ou.g, ou.a, ou.o};
    for (std::size_t p = 0; p < 3; ++p) {
        const Interval& iv = intervals[p];
        const double T = std::max(iv.duration(), 0.0);
        PeriodFeatures& pf = fv.periods[p];
        pf.gaze = series_stats(distance_series(std::span<const GazeSample>(trial.gaze), *h, iv), T);
        pf.hand = series_stats(distance_series(std::span<const HandSample>(trial.hand), *h, iv), T);
        pf.head = head_stats(head, iv);
        fv.total_duration += T;
    }
    return fv;
}

}  // namespace

FeatureVector extract_features(const OperationalUnit& ou, const TrialRecord& trial,
                               const HotspotRegistry& registry, int step)
{
    const auto head = head_velocity_track(trial);
    return extract_with_head(ou, trial, registry, step, head);
}

std::vector<FeatureVector> extract_all(const TrialRecord& trial, std::span<const OperationalUnit> units,
                                       const HotspotRegistry& registry)
{
    const auto head = head_velocity_track(trial);
    std::vector<FeatureVector> out;
    out.reserve(units.size());
    for (std::size_t i = 0; i < units.size(); ++i)
        out.push_back(extract_with_head(units[i], trial, registry, static_cast<int>(i), head));
    return out;
}

// ---------------------------------------------------------------------------
// Gaze-head correlation

namespace {

double median_spacing(const std::vector<double>& t)
{
    std::vector<double> gaps;
    for (std::size_t i = 1; i < t.size(); ++i) gaps.push_back(t[i] - t[i - 1]);
    if (gaps.empty()) return 0.0;
    auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    return *mid;
}

double interpolate(const TimeSeries& s, double t)
{
    auto it = std::lower_bound(s.t.begin(), s.t.end(), t);
    if (it == s.t.end()) return s.v.back();
    const auto i = static_cast<std::size_t>(it - s.t.begin());
    if (*it == t || i == 0) return s.v[i];
    const double w = (t - s.t[i - 1]) / (s.t[i] - s.t[i - 1]);
    return s.v[i - 1] + w * (s.v[i] - s.v[i - 1]);
}

}  // namespace

double resampled_pearson(const TimeSeries& a, const TimeSeries& b)
{
    if (a.t.size() < 3 || b.t.size() < 3) throw InsufficientDataError("need at least 3 samples per series");
    const bool a_coarse = median_spacing(a.t) >= median_spacing(b.t);
    const TimeSeries& coarse = a_coarse ? a : b;
    const TimeSeries& fine = a_coarse ? b : a;
    const double lo = std::max(a.t.front(), b.t.front());
    const double hi = std::min(a.t.back(), b.t.back());

    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < coarse.t.size(); ++i) {
        const double t = coarse.t[i];
        if (t < lo || t > hi) continue;
        xs.push_back(coarse.v[i]);
        ys.push_back(interpolate(fine, t));
    }
    if (xs.size() < 3) throw InsufficientDataError("fewer than 3 overlapping samples after resampling");
    if (!a_coarse) std::swap(xs, ys);
    try {
        return pearson(xs, ys);
    } catch (const DegenerateError& e) {
        throw InsufficientDataError(std::string("no variation to correlate: ") + e.what());
    }
}

AxisCorrelation gaze_head_correlation(const TrialRecord& trial, std::optional<Interval> window)
{
    auto inside = [&](double t) { return !window || window->contains(t); };

    TimeSeries gx;
    TimeSeries gy;
    const auto& g = trial.gaze;
    for (std::size_t i = 1; i < g.size(); ++i) {
        if (!g[i].valid || !g[i - 1].valid) continue;
        const double t = 0.5 * (g[i].t + g[i - 1].t);
        if (!inside(t)) continue;
        const double dt = g[i].t - g[i - 1].t;
        gx.t.push_back(t);
        gx.v.push_back((g[i].x - g[i - 1].x) / dt);
        gy.t.push_back(t);
        gy.v.push_back((g[i].y - g[i - 1].y) / dt);
    }
    TimeSeries hx;
    TimeSeries hy;
    for (const auto& s : head_velocity_track(trial)) {
        if (!inside(s.t)) continue;
        hx.t.push_back(s.t);
        hx.v.push_back(s.w.x);
        hy.t.push_back(s.t);
        hy.v.push_back(s.w.y);
    }
    return {resampled_pearson(gx, hx), resampled_pearson(gy, hy)};
}

// ---------------------------------------------------------------------------
// Heat grid

long long HeatGrid::total() const
{
    long long s = 0;
    for (auto c : counts) s += c;
    return s;
}

HeatGrid gaze_heat_grid(std::span<const TrialRecord> trials, const SampleFilter& filter, double cell_px,
                        MapExtent map)
{
    if (!(cell_px > 0)) throw ConfigError("cell_px must be positive");
    HeatGrid grid;
    grid.cell_px = cell_px;
    grid.cols = std::max(1, static_cast<int>(std::ceil(map.width_px / cell_px)));
    grid.rows = std::max(1, static_cast<int>(std::ceil(map.height_px / cell_px)));
    grid.counts.assign(static_cast<std::size_t>(grid.rows) * grid.cols, 0);
    for (const auto& trial : trials) {
        for (const auto& s : trial.gaze) {
            if (!s.valid) continue;
            if (!(s.x >= 0 && s.y >= 0 && s.x <= map.width_px && s.y <= map.height_px)) continue;
            if (filter && !filter(trial, s.t)) continue;
            const int c = std::min(grid.cols - 1, static_cast<int>(s.x / cell_px));
            const int r = std::min(grid.rows - 1, static_cast<int>(s.y / cell_px));
            ++grid.counts[static_cast<std::size_t>(r) * grid.cols + c];
        }
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Feature catalog

namespace {

std::vector<FeatureDef> build_catalog()
{
    std::vector<FeatureDef> defs;
    defs.push_back({"dur_all", true, [](const FeatureVector& f) { return f.total_duration; }});
    for (Period p : kPeriods) {
        const auto i = static_cast<std::size_t>(p);
        const std::string s = std::string("_") + period_letter(p);
        auto add = [&](std::string name, bool dur, auto get) {
            defs.push_back({std::move(name) + s, dur,
                            [i, get](const FeatureVector& f) { return get(f.periods[i]); }});
        };
        add("dur", true, [](const PeriodFeatures& pf) { return pf.gaze.duration_T; });
        add("gazeD", false, [](const PeriodFeatures& pf) { return pf.gaze.mean_distance_D; });
        add("gazeV", false, [](const PeriodFeatures& pf) { return pf.gaze.velocity_V; });
        add("gazeVar", false, [](const PeriodFeatures& pf) { return pf.gaze.variance; });
        add("gazeF", false, [](const PeriodFeatures& pf) { return pf.gaze.frequency_f; });
        add("handD", false, [](const PeriodFeatures& pf) { return pf.hand.mean_distance_D; });
        add("handV", false, [](const PeriodFeatures& pf) { return pf.hand.velocity_V; });
        add("handVar", false, [](const PeriodFeatures& pf) { return pf.hand.variance; });
        add("handF", false, [](const PeriodFeatures& pf) { return pf.hand.frequency_f; });
        add("headX", false, [](const PeriodFeatures& pf) { return pf.head.mean_speed_x; });
        add("headY", false, [](const PeriodFeatures& pf) { return pf.head.mean_speed_y; });
        add("headVarX", false, [](const PeriodFeatures& pf) { return pf.head.variance_x; });
        add("headVarY", false, [](const PeriodFeatures& pf) { return pf.head.variance_y; });
    }
    return defs;
}

}  // namespace

const std::vector<FeatureDef>& feature_catalog()
{
    static const std::vector<FeatureDef> catalog = build_catalog();
    return catalog;
}

const FeatureDef& feature_def(std::string_view name)
{
    for (const auto& d : feature_catalog())
        if (d.name == name) return d;
    throw ConfigError("unknown feature '" + std::string(name) + "'");
}

std::vector<std::string> feature_names()
{
    std::vector<std::string> out;
    for (const auto& d : feature_catalog()) out.push_back(d.name);
    return out;
}

double trial_feature_value(const FeatureDef& def, std::span<const FeatureVector> units)
{
    if (units.empty()) return 0.0;
    double s = 0.0;
    for (const auto& u : units) s += def.get(u);
    return def.is_duration ? s : s / static_cast<double>(units.size());
}

std::string features_csv(std::span<const FeatureVector> vectors)
{
    std::ostringstream os;
    os << "user_id,task_id,trial_index,step,hotspot_id";
    for (const auto& d : feature_catalog()) os << ',' << d.name;
    os << '\n';
    for (const auto& v : vectors) {
        os << csv_field(v.trial.user_id) << ',' << csv_field(v.trial.task_id) << ',' << v.trial.trial_index
           << ',' << v.step << ',' << v.hotspot_id;
        for (const auto& d : feature_catalog()) os << ',' << format_number(d.get(v));
        os << '\n';
    }
    return os.str();
}

std::string heat_grid_csv(const HeatGrid& grid)
{
    std::ostringstream os;
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            if (c) os << ',';
            os << grid.at(r, c);
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace opskill
