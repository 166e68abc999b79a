#include "opskill/segmentation.hpp"

#include "opskill/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace opskill {

const Hotspot* HotspotRegistry::find(int id) const
{
    if (id >= 1 && static_cast<std::size_t>(id) <= hotspots.size() && hotspots[id - 1].id == id)
        return &hotspots[id - 1];
    for (const auto& h : hotspots)
        if (h.id == id) return &h;
    return nullptr;
}

std::vector<TouchEvent> filter_short_touches(std::span<const TouchEvent> touches, double min_dur)
{
    std::vector<TouchEvent> out;
    std::copy_if(touches.begin(), touches.end(), std::back_inserter(out),
                 [min_dur](const TouchEvent& e) { return e.duration() >= min_dur; });
    return out;
}

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t i)
    {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

struct TouchPoint {
    double x;
    double y;
    std::size_t trial;
};

}  // namespace

HotspotRegistry cluster_touches(const SessionSet& set, const SegmentationParams& params)
{
    if (!(params.cluster_radius > 0)) throw ConfigError("cluster_radius must be positive");

    std::vector<TouchPoint> points;
    for (std::size_t t = 0; t < set.trials.size(); ++t) {
        for (const auto& e : filter_short_touches(set.trials[t].touches, params.min_touch_duration))
            points.push_back({e.x, e.y, t});
    }
    if (points.empty()) throw EmptyInputError("no touches left after filtering; cannot detect hotspots");

    // Bucket into a grid of cluster_radius cells; neighbours lie in the 3x3 block.
    const double cell = params.cluster_radius;
    const double r2 = cell * cell;
    auto cell_of = [cell](double v) { return static_cast<long long>(std::floor(v / cell)); };
    std::map<std::pair<long long, long long>, std::vector<std::size_t>> grid;
    for (std::size_t i = 0; i < points.size(); ++i)
        grid[{cell_of(points[i].x), cell_of(points[i].y)}].push_back(i);

    DisjointSets sets(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto cx = cell_of(points[i].x);
        const auto cy = cell_of(points[i].y);
        for (long long dx = -1; dx <= 1; ++dx) {
            for (long long dy = -1; dy <= 1; ++dy) {
                auto it = grid.find({cx + dx, cy + dy});
                if (it == grid.end()) continue;
                for (std::size_t j : it->second) {
                    if (j <= i) continue;
                    const double ex = points[i].x - points[j].x;
                    const double ey = points[i].y - points[j].y;
                    if (ex * ex + ey * ey <= r2) sets.unite(i, j);
                }
            }
        }
    }

    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < points.size(); ++i) members[sets.find(i)].push_back(i);

    std::vector<Hotspot> hotspots;
    for (auto& [root, idx] : members) {
        // Sum in coordinate order so centroids are bit-identical for any input order.
        std::vector<std::pair<double, double>> xy;
        std::set<std::size_t> trials;
        for (std::size_t i : idx) {
            xy.emplace_back(points[i].x, points[i].y);
            trials.insert(points[i].trial);
        }
        std::sort(xy.begin(), xy.end());
        double sx = 0.0;
        double sy = 0.0;
        for (const auto& [x, y] : xy) {
            sx += x;
            sy += y;
        }
        Hotspot h;
        h.centroid_x = sx / static_cast<double>(xy.size());
        h.centroid_y = sy / static_cast<double>(xy.size());
        double far = 0.0;
        for (const auto& [x, y] : xy) far = std::max(far, std::hypot(x - h.centroid_x, y - h.centroid_y));
        h.radius = std::max(far, 1.0);
        h.occurrence_count = static_cast<int>(trials.size());
        hotspots.push_back(h);
    }
    std::sort(hotspots.begin(), hotspots.end(), [](const Hotspot& a, const Hotspot& b) {
        return std::tie(a.centroid_x, a.centroid_y) < std::tie(b.centroid_x, b.centroid_y);
    });
    for (std::size_t i = 0; i < hotspots.size(); ++i) hotspots[i].id = static_cast<int>(i + 1);

    return {std::move(hotspots), static_cast<int>(set.trials.size())};
}

int nearest_hotspot(const HotspotRegistry& registry, double x, double y)
{
    if (registry.hotspots.empty()) throw EmptyInputError("hotspot registry is empty");
    int best = registry.hotspots.front().id;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& h : registry.hotspots) {
        const double d = std::hypot(x - h.centroid_x, y - h.centroid_y);
        if (d < best_d || (d == best_d && h.id < best)) {
            best = h.id;
            best_d = d;
        }
    }
    return best;
}

SessionSet assign_hotspots(const SessionSet& set, const HotspotRegistry& registry,
                           const SegmentationParams& params)
{
    SessionSet out = set;
    for (auto& trial : out.trials) {
        trial.touches = filter_short_touches(trial.touches, params.min_touch_duration);
        for (auto& e : trial.touches) e.hotspot_id = nearest_hotspot(registry, e.x, e.y);
    }
    return out;
}

HotspotRegistry recount_occurrences(const HotspotRegistry& registry,
                                    std::span<const TrialRecord* const> trials)
{
    HotspotRegistry out = registry;
    std::map<int, int> counts;
    for (const TrialRecord* t : trials) {
        std::set<int> seen;
        for (const auto& e : t->touches)
            if (e.hotspot_id) seen.insert(*e.hotspot_id);
        for (int id : seen) ++counts[id];
    }
    for (auto& h : out.hotspots) h.occurrence_count = counts[h.id];
    out.total_experiences = static_cast<int>(trials.size());
    return out;
}

std::vector<OperationalUnit> segment_units(const TrialRecord& trial, const HotspotRegistry& registry,
                                           const SegmentationParams& params)
{
    struct Group {
        int hotspot;
        double start;
        double end;
    };
    std::vector<Group> groups;
    for (const auto& e : trial.touches) {
        if (!e.hotspot_id || registry.find(*e.hotspot_id) == nullptr) continue;
        if (!groups.empty()) {
            Group& last = groups.back();
            if (last.hotspot == *e.hotspot_id && e.t_start - last.end < params.merge_gap) {
                last.end = std::max(last.end, e.t_end);
                continue;
            }
            // A single touch stream is assumed; overlap with the previous
            // group is clipped, and fully covered touches are dropped.
            if (e.t_end <= last.end) continue;
            groups.push_back({*e.hotspot_id, std::max(e.t_start, last.end), e.t_end});
            continue;
        }
        groups.push_back({*e.hotspot_id, e.t_start, e.t_end});
    }

    std::vector<OperationalUnit> units;
    units.reserve(groups.size());
    double prev_end = trial.start_time();
    for (const auto& g : groups) {
        OperationalUnit ou;
        ou.hotspot_id = g.hotspot;
        ou.o = {g.start, g.end};

        double approach = g.start;
        for (const auto& h : trial.hand) {
            if (h.t >= g.start) break;
            if (h.visible && h.t >= prev_end) {
                approach = h.t;
                break;
            }
        }
        ou.a = {approach, g.start};
        ou.g = {prev_end, approach};
        units.push_back(ou);
        prev_end = g.end;
    }
    return units;
}

std::string registry_to_json(const HotspotRegistry& registry)
{
    using nlohmann::json;
    json doc;
    doc["total_experiences"] = registry.total_experiences;
    json list = json::array();
    for (const auto& h : registry.hotspots) {
        list.push_back({{"id", h.id},
                        {"centroid", {h.centroid_x, h.centroid_y}},
                        {"radius", h.radius},
                        {"occurrence_count", h.occurrence_count}});
    }
    doc["hotspots"] = std::move(list);
    return doc.dump(2);
}

HotspotRegistry registry_from_json(std::string_view document)
{
    using nlohmann::json;
    HotspotRegistry reg;
    try {
        const json doc = json::parse(document);
        reg.total_experiences = doc.at("total_experiences").get<int>();
        for (const auto& h : doc.at("hotspots")) {
            reg.hotspots.push_back({h.at("id").get<int>(), h.at("centroid").at(0).get<double>(),
                                    h.at("centroid").at(1).get<double>(), h.at("radius").get<double>(),
                                    h.at("occurrence_count").get<int>()});
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("hotspot registry: ") + e.what());
    }
    return reg;
}

}  // namespace opskill
