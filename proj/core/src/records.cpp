#include "opskill/records.hpp"

#include "opskill/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace opskill {

using nlohmann::json;

std::string to_string(const TrialKey& key)
{
    return key.user_id + "/" + key.task_id + "/" + std::to_string(key.trial_index);
}

bool CameraIntrinsics::all_positive() const
{
    return image_width_px > 0 && image_height_px > 0 && sensor_width_mm > 0 &&
           sensor_height_mm > 0 && focal_mm > 0;
}

namespace {

template <typename Track, typename TimeOf>
void widen(const Track& track, TimeOf time_of, double& lo, double& hi, bool& any)
{
    for (const auto& s : track) {
        const auto [a, b] = time_of(s);
        lo = any ? std::min(lo, a) : a;
        hi = any ? std::max(hi, b) : b;
        any = true;
    }
}

std::pair<double, double> time_range(const TrialRecord& r)
{
    double lo = 0.0;
    double hi = 0.0;
    bool any = false;
    auto point = [](const auto& s) { return std::pair{s.t, s.t}; };
    widen(r.gaze, point, lo, hi, any);
    widen(r.hand, point, lo, hi, any);
    widen(r.head_motion, point, lo, hi, any);
    widen(r.touches, [](const TouchEvent& e) { return std::pair{e.t_start, e.t_end}; }, lo, hi,
          any);
    return {lo, hi};
}

}  // namespace

double TrialRecord::start_time() const { return time_range(*this).first; }
double TrialRecord::end_time() const { return time_range(*this).second; }

// ---------------------------------------------------------------------------
// Parsing

namespace {

const json& require(const json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(std::string("missing field '") + key + "'");
    return *it;
}

double number(const json& v, const std::string& what)
{
    if (!v.is_number()) throw SchemaError(what + ": expected a number");
    return v.get<double>();
}

// Positions of invalid samples may be null in documents.
double coordinate(const json& v, bool present, const std::string& what)
{
    if (v.is_null() && !present) return 0.0;
    return number(v, what);
}

bool flag(const json& v, const std::string& what)
{
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number_integer() || v.is_number_unsigned()) {
        const auto i = v.get<long long>();
        if (i == 0 || i == 1) return i == 1;
    }
    throw SchemaError(what + ": expected a boolean flag");
}

int integer(const json& v, const std::string& what)
{
    if (!(v.is_number_integer() || v.is_number_unsigned()))
        throw SchemaError(what + ": expected an integer");
    return v.get<int>();
}

std::string identifier(const json& v, const std::string& what)
{
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer() || v.is_number_unsigned()) return std::to_string(v.get<long long>());
    throw SchemaError(what + ": expected a string or integer id");
}

const json& row(const json& track, std::size_t i, std::size_t min_len, std::size_t max_len,
                const std::string& name)
{
    const json& r = track[i];
    if (!r.is_array() || r.size() < min_len || r.size() > max_len) {
        std::ostringstream os;
        os << name << "[" << i << "]: expected an array of " << min_len;
        if (max_len != min_len) os << ".." << max_len;
        os << " values";
        throw SchemaError(os.str());
    }
    return r;
}

const json& array_field(const json& doc, const char* key)
{
    const json& v = require(doc, key);
    if (!v.is_array()) throw SchemaError(std::string(key) + ": expected an array");
    return v;
}

template <typename Track>
void check_strictly_increasing(const Track& track, const char* name)
{
    for (std::size_t i = 0; i < track.size(); ++i) {
        if (track[i].t < 0) throw BoundsError(std::string(name) + ": negative timestamp");
        if (i > 0 && !(track[i].t > track[i - 1].t)) {
            std::ostringstream os;
            os << name << ": timestamps not increasing at index " << i << " (" << track[i - 1].t
               << " then " << track[i].t << ")";
            throw OrderError(os.str());
        }
    }
}

}  // namespace

TrialRecord parse_trial(std::string_view document)
{
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("session document must be a JSON object");

    TrialRecord r;
    r.user_id = identifier(require(doc, "user_id"), "user_id");
    r.task_id = identifier(require(doc, "task_id"), "task_id");
    r.trial_index = integer(require(doc, "trial_index"), "trial_index");
    if (r.trial_index < 1) throw BoundsError("trial_index must be >= 1");

    const json& k = require(doc, "intrinsics");
    if (!k.is_object()) throw SchemaError("intrinsics: expected an object");
    CameraIntrinsics cam;
    cam.image_width_px = number(require(k, "image_width_px"), "intrinsics.image_width_px");
    cam.image_height_px = number(require(k, "image_height_px"), "intrinsics.image_height_px");
    cam.sensor_width_mm = number(require(k, "sensor_width_mm"), "intrinsics.sensor_width_mm");
    cam.sensor_height_mm = number(require(k, "sensor_height_mm"), "intrinsics.sensor_height_mm");
    cam.focal_mm = number(require(k, "focal_mm"), "intrinsics.focal_mm");
    if (!cam.all_positive()) throw BoundsError("intrinsics must be strictly positive");
    r.intrinsics = cam;

    const json& gaze = array_field(doc, "gaze");
    for (std::size_t i = 0; i < gaze.size(); ++i) {
        const json& g = row(gaze, i, 4, 4, "gaze");
        GazeSample s;
        s.t = number(g[0], "gaze.t");
        s.valid = flag(g[3], "gaze.valid");
        s.x = coordinate(g[1], s.valid, "gaze.x");
        s.y = coordinate(g[2], s.valid, "gaze.y");
        r.gaze.push_back(s);
    }

    const json& hand = array_field(doc, "hand");
    for (std::size_t i = 0; i < hand.size(); ++i) {
        const json& h = row(hand, i, 4, 4, "hand");
        HandSample s;
        s.t = number(h[0], "hand.t");
        s.visible = flag(h[3], "hand.visible");
        s.x = coordinate(h[1], s.visible, "hand.x");
        s.y = coordinate(h[2], s.visible, "hand.y");
        r.hand.push_back(s);
    }

    const json& head = array_field(doc, "head_motion");
    for (std::size_t i = 0; i < head.size(); ++i) {
        const json& m = row(head, i, 3, 3, "head_motion");
        r.head_motion.push_back(
            {number(m[0], "head_motion.t"), number(m[1], "head_motion.vx"),
             number(m[2], "head_motion.vy")});
    }

    const json& touches = array_field(doc, "touches");
    for (std::size_t i = 0; i < touches.size(); ++i) {
        const json& e = row(touches, i, 4, 5, "touches");
        TouchEvent ev;
        ev.t_start = number(e[0], "touches.t_start");
        ev.t_end = number(e[1], "touches.t_end");
        ev.x = number(e[2], "touches.x");
        ev.y = number(e[3], "touches.y");
        if (e.size() == 5 && !e[4].is_null()) ev.hotspot_id = integer(e[4], "touches.hotspot_id");
        r.touches.push_back(ev);
    }

    const json& ratings = array_field(doc, "ratings");
    for (std::size_t i = 0; i < ratings.size(); ++i) {
        const json& q = row(ratings, i, 2, 2, "ratings");
        DifficultyRating d{integer(q[0], "ratings.step_index"), integer(q[1], "ratings.score")};
        if (d.score < 0 || d.score > 5) {
            throw BoundsError("ratings: score " + std::to_string(d.score) + " outside 0..5");
        }
        r.ratings.push_back(d);
    }

    check_strictly_increasing(r.gaze, "gaze");
    check_strictly_increasing(r.hand, "hand");
    check_strictly_increasing(r.head_motion, "head_motion");
    for (std::size_t i = 0; i < r.touches.size(); ++i) {
        const auto& e = r.touches[i];
        if (e.t_start < 0) throw BoundsError("touches: negative timestamp");
        if (!(e.t_end > e.t_start)) throw OrderError("touches: t_end must exceed t_start");
        if (i > 0 && e.t_start < r.touches[i - 1].t_start) {
            throw OrderError("touches: not sorted by start time at index " + std::to_string(i));
        }
    }
    return r;
}

std::string serialize_trial(const TrialRecord& r)
{
    json doc = json::object();
    doc["user_id"] = r.user_id;
    doc["task_id"] = r.task_id;
    doc["trial_index"] = r.trial_index;
    if (r.intrinsics) {
        const auto& k = *r.intrinsics;
        doc["intrinsics"] = {{"image_width_px", k.image_width_px},
                             {"image_height_px", k.image_height_px},
                             {"sensor_width_mm", k.sensor_width_mm},
                             {"sensor_height_mm", k.sensor_height_mm},
                             {"focal_mm", k.focal_mm}};
    }
    json gaze = json::array();
    for (const auto& s : r.gaze) gaze.push_back({s.t, s.x, s.y, s.valid});
    json hand = json::array();
    for (const auto& s : r.hand) hand.push_back({s.t, s.x, s.y, s.visible});
    json head = json::array();
    for (const auto& s : r.head_motion) head.push_back({s.t, s.vx, s.vy});
    json touches = json::array();
    for (const auto& e : r.touches) {
        json row = {e.t_start, e.t_end, e.x, e.y};
        if (e.hotspot_id) row.push_back(*e.hotspot_id);
        touches.push_back(std::move(row));
    }
    json ratings = json::array();
    for (const auto& q : r.ratings) ratings.push_back({q.step_index, q.score});
    doc["gaze"] = std::move(gaze);
    doc["hand"] = std::move(hand);
    doc["head_motion"] = std::move(head);
    doc["touches"] = std::move(touches);
    doc["ratings"] = std::move(ratings);
    return doc.dump();
}

// ---------------------------------------------------------------------------
// Dataset loading

namespace {

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw SchemaError("cannot open '" + p.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool is_session_file(const std::filesystem::path& p)
{
    const auto name = p.filename().string();
    constexpr std::string_view suffix = ".session.json";
    return name.size() > suffix.size() &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<std::filesystem::path> resolve_dataset_paths(const std::filesystem::path& location)
{
    namespace fs = std::filesystem;
    std::vector<fs::path> out;
    if (fs::is_directory(location)) {
        for (const auto& entry : fs::directory_iterator(location)) {
            if (entry.is_regular_file() && is_session_file(entry.path())) out.push_back(entry.path());
        }
        std::sort(out.begin(), out.end());
        return out;
    }
    if (!fs::exists(location)) throw SchemaError("dataset location '" + location.string() + "' does not exist");
    if (location.extension() == ".json") return {location};

    std::istringstream manifest(read_file(location));
    std::string line;
    while (std::getline(manifest, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        fs::path p(line);
        if (p.is_relative()) p = location.parent_path() / p;
        out.push_back(p);
    }
    return out;
}

namespace {

template <typename E>
[[noreturn]] void rethrow_with_path(const E& e, const std::filesystem::path& p)
{
    throw E(p.string() + ": " + e.what());
}

}  // namespace

SessionSet load_dataset(std::span<const std::filesystem::path> paths, MapExtent extent)
{
    SessionSet set;
    set.map_width_px = extent.width_px;
    set.map_height_px = extent.height_px;
    std::map<TrialKey, std::filesystem::path> seen;

    for (const auto& p : paths) {
        TrialRecord r;
        try {
            r = parse_trial(read_file(p));
        } catch (const SchemaError& e) {
            rethrow_with_path(e, p);
        } catch (const OrderError& e) {
            rethrow_with_path(e, p);
        } catch (const BoundsError& e) {
            rethrow_with_path(e, p);
        }
        auto [it, inserted] = seen.emplace(r.key(), p);
        if (!inserted) {
            throw DuplicateTrialError(p.string() + ": trial " + to_string(r.key()) +
                                      " already loaded from " + it->second.string());
        }
        set.trials.push_back(std::move(r));
    }
    std::sort(set.trials.begin(), set.trials.end(),
              [](const TrialRecord& a, const TrialRecord& b) { return a.key() < b.key(); });
    return set;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

struct Validator {
    const SessionSet& set;
    std::vector<Diagnostic> out;

    void add(const TrialRecord& r, const char* rule, std::string msg)
    {
        out.push_back({r.key(), rule, std::move(msg)});
    }

    bool inside(double x, double y) const
    {
        return std::isfinite(x) && std::isfinite(y) && x >= 0 && y >= 0 && x <= set.map_width_px &&
               y <= set.map_height_px;
    }

    template <typename Track>
    void order(const TrialRecord& r, const Track& track, const char* name)
    {
        for (std::size_t i = 0; i < track.size(); ++i) {
            if (track[i].t < 0) add(r, "bounds", std::string(name) + ": negative timestamp");
            if (i > 0 && !(track[i].t > track[i - 1].t)) {
                add(r, "order", std::string(name) + ": timestamps not increasing at index " +
                                    std::to_string(i));
                return;
            }
        }
    }

    void trial(const TrialRecord& r)
    {
        if (r.trial_index < 1) add(r, "bounds", "trial_index must be >= 1");
        if (!r.intrinsics) {
            add(r, "schema", "missing intrinsics");
        } else if (!r.intrinsics->all_positive()) {
            add(r, "bounds", "intrinsics must be strictly positive");
        }
        order(r, r.gaze, "gaze");
        order(r, r.hand, "hand");
        order(r, r.head_motion, "head_motion");

        for (std::size_t i = 0; i < r.gaze.size(); ++i) {
            const auto& s = r.gaze[i];
            if (s.valid && !inside(s.x, s.y)) {
                add(r, "bounds", "gaze[" + std::to_string(i) + "] outside the map");
                break;
            }
        }
        for (std::size_t i = 0; i < r.hand.size(); ++i) {
            const auto& s = r.hand[i];
            if (s.visible && !inside(s.x, s.y)) {
                add(r, "bounds", "hand[" + std::to_string(i) + "] outside the map");
                break;
            }
        }
        for (std::size_t i = 0; i < r.touches.size(); ++i) {
            const auto& e = r.touches[i];
            if (!(e.t_end > e.t_start)) add(r, "order", "touches[" + std::to_string(i) + "]: t_end <= t_start");
            if (i > 0 && e.t_start < r.touches[i - 1].t_start)
                add(r, "order", "touches: not sorted at index " + std::to_string(i));
            if (!inside(e.x, e.y)) add(r, "bounds", "touches[" + std::to_string(i) + "] outside the map");
        }
        for (const auto& q : r.ratings) {
            if (q.score < 0 || q.score > 5) {
                add(r, "bounds", "rating for step " + std::to_string(q.step_index) + " outside 0..5");
            }
        }
    }
};

}  // namespace

std::vector<Diagnostic> validate(const SessionSet& set)
{
    Validator v{set, {}};
    if (set.trials.empty()) v.out.push_back({{}, "empty", "session set has no trials"});
    if (!(set.map_width_px > 0 && set.map_height_px > 0))
        v.out.push_back({{}, "bounds", "map extent must be positive"});

    std::set<TrialKey> seen;
    for (const auto& r : set.trials) {
        if (!seen.insert(r.key()).second) v.add(r, "duplicate", "duplicate trial identity");
        v.trial(r);
    }
    return std::move(v.out);
}

std::vector<const TrialRecord*> trials_of_task(const SessionSet& set, std::string_view task_id)
{
    std::vector<const TrialRecord*> out;
    for (const auto& r : set.trials)
        if (r.task_id == task_id) out.push_back(&r);
    return out;
}

std::vector<std::string> task_ids(const SessionSet& set)
{
    std::set<std::string> ids;
    for (const auto& r : set.trials) ids.insert(r.task_id);
    return {ids.begin(), ids.end()};
}

}  // namespace opskill
