#include "opskill/synth.hpp"

#include "opskill/error.hpp"
#include "opskill/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include <json.hpp>

namespace opskill {

std::vector<SynthTask> SynthSpec::default_tasks()
{
    return {
        {"1",
         {{1, 2}, {6}, {3}, {6}, {7}, {3}, {7}, {6}, {3}, {6}},
         {{1, 0.5}, {2, 0.5}, {3, 1.5}, {6, 2.5}, {7, 3.5}}},
        {"2", {{2, 1}, {5}, {7}, {12}}, {{1, 0.5}, {2, 1.0}, {5, 2.0}, {7, 3.5}, {12, 1.5}}},
    };
}

SynthSpec SynthSpec::noiseless() const
{
    SynthSpec s = *this;
    s.duration_jitter = 0.0;
    s.period_jitter = 0.0;
    s.user_spread = 0.0;
    s.gaze_noise_px = 0.0;
    s.head_noise_deg = 0.0;
    s.gaze_dropout = 0.0;
    s.error_rate = 0.0;
    s.omission_rate = 0.0;
    s.order_swap_rate = 0.0;
    s.spurious_touch_rate = 0.0;
    s.touch_jitter_px = 0.0;
    s.rating_noise = 0.0;
    return s;
}

void SynthSpec::check() const
{
    auto fail = [](const std::string& what) { throw ConfigError("synth spec: " + what); };
    if (users < 1) fail("users must be >= 1");
    if (trials_per_user < 1) fail("trials_per_user must be >= 1");
    if (tasks.empty()) fail("at least one task is required");
    if (hotspot_count < 1) fail("hotspot_count must be >= 1");
    if (!(duration_decay > 0.0 && duration_decay <= 1.0)) fail("duration_decay must be in (0, 1]");
    if (!(noise_decay > 0.0 && noise_decay <= 1.0)) fail("noise_decay must be in (0, 1]");
    if (!(knowhow_decay > 0.0 && knowhow_decay <= 1.0)) fail("knowhow_decay must be in (0, 1]");
    if (!(error_decay > 0.0 && error_decay <= 1.0)) fail("error_decay must be in (0, 1]");
    for (double p : {error_rate, omission_rate, repeat_share, order_swap_rate, spurious_touch_rate, gaze_dropout})
        if (!(p >= 0.0 && p <= 1.0)) fail("probabilities must lie in [0, 1]");
    for (double v : {duration_jitter, touch_jitter_px, period_jitter, user_spread, gaze_noise_px, gaze_offset_px, head_noise_deg,
                     rating_noise})
        if (!(v >= 0.0)) fail("noise levels must be non-negative");
    if (!(base_gaze_s > 0 && base_approach_s > 0 && base_operate_s > 0)) fail("base durations must be positive");
    if (!(expert_speedup > 0.0)) fail("expert_speedup must be positive");
    if (experts_per_task < 0 || experts_per_task > users) fail("experts_per_task must be in [0, users]");
    if (!(fps > 0.0)) fail("fps must be positive");
    if (!intrinsics.all_positive()) fail("camera intrinsics must be positive");
    std::set<std::string> ids;
    for (const auto& t : tasks) {
        if (!ids.insert(t.task_id).second) fail("duplicate task id '" + t.task_id + "'");
        if (t.groups.empty()) fail("task '" + t.task_id + "' has an empty script");
        for (const auto& g : t.groups) {
            if (g.empty()) fail("task '" + t.task_id + "' has an empty group");
            for (int h : g)
                if (h < 1 || h > hotspot_count) fail("task '" + t.task_id + "' uses a hotspot outside 1..M");
        }
    }
}

namespace {

// Portable random source: raw mt19937_64 output turned into uniforms and
// normals by hand, so datasets do not depend on the standard library's
// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return p > 0.0 && uniform() < p; }
    double normal()
    {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    int index(std::size_t n) { return static_cast<int>(uniform() * static_cast<double>(n)); }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t sub_seed(std::uint64_t seed, int user, std::size_t task, int trial, std::uint64_t stream)
{
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t v : {static_cast<std::uint64_t>(user), static_cast<std::uint64_t>(task),
                            static_cast<std::uint64_t>(trial), stream})
        h = splitmix64(h ^ v);
    return h;
}

std::string user_name(int u)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "u%02d", u);
    return buf;
}

std::pair<double, double> hotspot_location(int id)
{
    return {120.0 + 120.0 * (id - 1), id % 2 == 1 ? 360.0 : 640.0};
}

struct PlannedTrial {
    TrialKey key;
    int user = 0;  // 1-based
    std::size_t task = 0;
    bool expert = false;
    std::vector<int> steps;       // hotspot per operational unit
    std::vector<bool> unplanned;  // inserted unnecessary interaction
    double pace = 1.0;            // user pace factor
};

int trials_for_task(const SynthSpec& spec, std::size_t task)
{
    // Trials alternate over tasks: overall trial r (0-based) practises task r % T.
    const int T = static_cast<int>(spec.tasks.size());
    const int t = static_cast<int>(task);
    return spec.trials_per_user / T + (t < spec.trials_per_user % T ? 1 : 0);
}

std::vector<int> extra_hotspots(const SynthSpec& spec)
{
    std::set<int> used;
    for (const auto& t : spec.tasks)
        for (const auto& g : t.groups) used.insert(g.begin(), g.end());
    std::vector<int> extra;
    for (int h = 1; h <= spec.hotspot_count; ++h)
        if (!used.count(h)) extra.push_back(h);
    return extra;
}

std::vector<int> script_variant(const SynthTask& task, Rng& rng, double swap_rate)
{
    std::vector<int> seq;
    for (const auto& g : task.groups) {
        std::vector<int> order = g;
        if (g.size() > 1 && rng.chance(swap_rate)) {
            std::vector<std::vector<int>> others;
            std::vector<int> sorted = g;
            std::sort(sorted.begin(), sorted.end());
            do {
                if (sorted != g) others.push_back(sorted);
            } while (std::next_permutation(sorted.begin(), sorted.end()));
            if (!others.empty()) order = others[rng.index(others.size())];
        }
        seq.insert(seq.end(), order.begin(), order.end());
    }
    return seq;
}

std::vector<PlannedTrial> plan_trials(const SynthSpec& spec)
{
    const auto extras = extra_hotspots(spec);
    std::vector<PlannedTrial> plans;
    for (int u = 1; u <= spec.users; ++u) {
        Rng user_rng(sub_seed(spec.seed, u, 0, 0, 1));
        const double pace = std::max(0.5, 1.0 + spec.user_spread * user_rng.normal());
        for (std::size_t t = 0; t < spec.tasks.size(); ++t) {
            const auto& task = spec.tasks[t];
            const int n_trials = trials_for_task(spec, t);
            for (int n = 1; n <= n_trials; ++n) {
                PlannedTrial p;
                p.key = {user_name(u), task.task_id, n};
                p.user = u;
                p.task = t;
                p.pace = pace;
                p.expert = u <= spec.experts_per_task && n == n_trials;
                Rng rng(sub_seed(spec.seed, u, t, n, 2));
                const auto script = script_variant(task, rng, spec.order_swap_rate);
                const double decay = std::pow(spec.error_decay, n - 1);
                const double p_err = p.expert ? 0.0 : spec.error_rate * decay;
                const double p_omit = p.expert ? 0.0 : spec.omission_rate * decay;
                for (std::size_t i = 0; i < script.size(); ++i) {
                    if (rng.chance(p_omit) && script.size() > 1) continue;
                    p.steps.push_back(script[i]);
                    p.unplanned.push_back(false);
                    if (i + 1 < script.size() && rng.chance(p_err)) {
                        const bool repeat = extras.empty() || rng.chance(spec.repeat_share);
                        p.steps.push_back(repeat ? script[i] : extras[rng.index(extras.size())]);
                        p.unplanned.push_back(true);
                    }
                }
                plans.push_back(std::move(p));
            }
        }
    }

    // Every hotspot must be touched somewhere, otherwise clustering would
    // number the hotspots differently from the layout. Missing ones are
    // added as unnecessary touches to the first non-expert trial.
    std::set<int> seen;
    for (const auto& p : plans) seen.insert(p.steps.begin(), p.steps.end());
    auto host = std::find_if(plans.begin(), plans.end(), [](const PlannedTrial& p) { return !p.expert; });
    if (host == plans.end()) host = plans.begin();
    for (int h = 1; h <= spec.hotspot_count; ++h) {
        if (seen.count(h)) continue;
        host->steps.insert(host->steps.begin() + 1, h);
        host->unplanned.insert(host->unplanned.begin() + 1, true);
    }
    return plans;
}

struct UnitTiming {
    double g = 0.0;
    double a = 0.0;
    double o = 0.0;
};

double vector_from_angle(double omega_deg_s, double dt, double img_px, double sensor_mm, double focal_mm)
{
    const double angle = omega_deg_s * dt * std::numbers::pi / 180.0;
    return std::tan(angle) * img_px * focal_mm / sensor_mm;
}

TrialRecord render_trial(const SynthSpec& spec, const PlannedTrial& plan)
{
    const auto& task = spec.tasks[plan.task];
    const int n = plan.key.trial_index;
    Rng rng(sub_seed(spec.seed, plan.user, plan.task, n, 3));

    const double duration_scale =
        std::pow(spec.duration_decay, n - 1) * plan.pace * (plan.expert ? spec.expert_speedup : 1.0);
    const double noise_scale = std::pow(spec.noise_decay, n - 1) * (plan.expert ? spec.expert_noise : 1.0);
    const double sigma_gaze = spec.gaze_noise_px * noise_scale;
    const double sigma_head = spec.head_noise_deg * noise_scale;

    auto difficulty_of = [&](int h) {
        auto it = task.difficulty.find(h);
        return it == task.difficulty.end() ? 0.0 : it->second;
    };

    // Timeline of every operational unit.
    std::vector<UnitTiming> timing;
    for (int h : plan.steps) {
        const double g0 = spec.base_gaze_s * (1.0 + spec.difficulty_slowdown * difficulty_of(h));
        const double a0 = spec.base_approach_s;
        const double o0 = spec.base_operate_s;
        const double total = (g0 + a0 + o0) * duration_scale * std::max(0.5, 1.0 + spec.duration_jitter * rng.normal());
        double g = g0 * std::max(0.2, 1.0 + spec.period_jitter * rng.normal());
        double a = a0 * std::max(0.2, 1.0 + spec.period_jitter * rng.normal());
        double o = o0 * std::max(0.2, 1.0 + spec.period_jitter * rng.normal());
        const double k = total / (g + a + o);
        timing.push_back({std::max(0.2, g * k), std::max(0.2, a * k), std::max(0.45, o * k)});
    }

    TrialRecord trial;
    trial.user_id = plan.key.user_id;
    trial.task_id = plan.key.task_id;
    trial.trial_index = n;
    trial.intrinsics = spec.intrinsics;

    struct Span {
        double g_start, a_start, o_start, o_end;
    };
    std::vector<Span> spans;
    double t = 0.0;
    for (const auto& u : timing) {
        Span s{t, t + u.g, t + u.g + u.a, t + u.g + u.a + u.o};
        spans.push_back(s);
        t = s.o_end;
    }
    const double t_end = t + 0.5;

    // Touches, with an occasional sub-threshold touch during the approach.
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const auto [hx, hy] = hotspot_location(plan.steps[i]);
        const double jitter = spec.touch_jitter_px;
        const Span& s = spans[i];
        const double a_len = s.o_start - s.a_start;
        if (rng.chance(spec.spurious_touch_rate) && a_len >= 0.4) {
            const double ts = s.a_start + 0.1 * a_len;
            trial.touches.push_back({ts, ts + 0.15, hx + jitter * rng.normal(), hy + jitter * rng.normal(), {}});
        }
        trial.touches.push_back({s.o_start, s.o_end, hx + jitter * rng.normal(), hy + jitter * rng.normal(), {}});
    }

    // Per-unit fixed direction of the operating-period gaze offset.
    std::vector<double> gaze_dir;
    for (std::size_t i = 0; i < plan.steps.size(); ++i)
        gaze_dir.push_back(spec.gaze_noise_px > 0.0 ? 2.0 * std::numbers::pi * rng.uniform() : 0.0);

    const double dt = 1.0 / spec.fps;
    const auto frames = static_cast<long>(std::floor(t_end * spec.fps + 1e-9));
    std::size_t unit = 0;
    for (long f = 0; f <= frames; ++f) {
        const double ts = static_cast<double>(f) / spec.fps;
        while (unit + 1 < spans.size() && ts >= spans[unit].o_end) ++unit;
        const Span& s = spans[unit];
        const int h = plan.steps[unit];
        const auto [hx, hy] = hotspot_location(h);
        const bool after = ts >= s.o_end;

        enum class Phase { G, A, O, Tail } phase = Phase::Tail;
        if (!after) phase = ts < s.a_start ? Phase::G : (ts < s.o_start ? Phase::A : Phase::O);

        // Gaze.
        GazeSample gz{ts, hx, hy, !rng.chance(spec.gaze_dropout)};
        switch (phase) {
        case Phase::G: {
            const double sg = sigma_gaze * (1.0 + difficulty_of(h));
            gz.x += sg * rng.normal();
            gz.y += sg * rng.normal();
            break;
        }
        case Phase::A:
            gz.x += sigma_gaze * rng.normal();
            gz.y += sigma_gaze * rng.normal();
            break;
        case Phase::O: {
            const double r = spec.gaze_offset_px + sigma_gaze * rng.normal();
            gz.x += r * std::cos(gaze_dir[unit]);
            gz.y += r * std::sin(gaze_dir[unit]);
            break;
        }
        case Phase::Tail: break;
        }
        trial.gaze.push_back(gz);

        // Hand: hidden while searching, moving in from below while approaching.
        HandSample hs{ts, 0.0, 0.0, false};
        if (phase == Phase::A) {
            const double progress = (ts - s.a_start) / (s.o_start - s.a_start);
            const double entry_y = std::min(spec.map.height_px, hy + 300.0);
            hs = {ts, hx, entry_y + (hy - entry_y) * progress, true};
        } else if (phase == Phase::O) {
            hs = {ts, hx, hy, true};
        }
        trial.hand.push_back(hs);

        // Head: angular velocity noise, strongest while searching.
        const double k = phase == Phase::G ? 1.0 : (phase == Phase::A ? 0.6 : 0.3);
        const double wx = sigma_head * k * rng.normal();
        const double wy = sigma_head * k * rng.normal();
        const auto& cam = spec.intrinsics;
        trial.head_motion.push_back({ts, vector_from_angle(wx, dt, cam.image_width_px, cam.sensor_width_mm, cam.focal_mm),
                                     vector_from_angle(wy, dt, cam.image_height_px, cam.sensor_height_mm, cam.focal_mm)});
    }

    // Ratings: a fixed part plus a learnable part that fades with practice.
    std::set<int> rated;
    for (const auto& g : task.groups) rated.insert(g.begin(), g.end());
    const double knowhow = std::pow(spec.knowhow_decay, n - 1);
    for (int h : rated) {
        const double base = difficulty_of(h);
        const double v = base * (0.5 + 0.5 * knowhow) + spec.rating_noise * rng.normal();
        trial.ratings.push_back({h, static_cast<int>(std::clamp(std::lround(v), 0L, 5L))});
    }
    return trial;
}

}  // namespace

SessionSet generate_dataset(const SynthSpec& spec)
{
    spec.check();
    SessionSet set;
    set.map_width_px = spec.map.width_px;
    set.map_height_px = spec.map.height_px;
    for (const auto& plan : plan_trials(spec)) set.trials.push_back(render_trial(spec, plan));
    std::sort(set.trials.begin(), set.trials.end(),
              [](const TrialRecord& a, const TrialRecord& b) { return a.key() < b.key(); });
    return set;
}

SynthTruth planted_truth(const SynthSpec& spec)
{
    spec.check();
    SynthTruth truth;
    for (const auto& t : spec.tasks) truth.manuals[t.task_id] = expand_manual(t.task_id, t.groups);
    for (const auto& p : plan_trials(spec))
        if (p.expert) truth.experts.push_back(p.key);
    std::sort(truth.experts.begin(), truth.experts.end());
    for (int h = 1; h <= spec.hotspot_count; ++h) truth.hotspot_locations.push_back(hotspot_location(h));
    return truth;
}

std::string truth_to_json(const SynthTruth& truth)
{
    using nlohmann::json;
    json doc;
    json manuals = json::array();
    for (const auto& [id, m] : truth.manuals)
        manuals.push_back({{"task_id", m.task_id}, {"variants", m.variants}, {"dof", m.dof}});
    doc["manuals"] = std::move(manuals);
    json experts = json::array();
    for (const auto& k : truth.experts)
        experts.push_back({{"user_id", k.user_id}, {"task_id", k.task_id}, {"trial_index", k.trial_index}});
    doc["experts"] = std::move(experts);
    json hotspots = json::array();
    for (std::size_t i = 0; i < truth.hotspot_locations.size(); ++i)
        hotspots.push_back(
            {{"id", i + 1}, {"x", truth.hotspot_locations[i].first}, {"y", truth.hotspot_locations[i].second}});
    doc["hotspots"] = std::move(hotspots);
    return doc.dump(2);
}

SynthTruth truth_from_json(std::string_view document)
{
    using nlohmann::json;
    SynthTruth truth;
    try {
        const json doc = json::parse(document);
        truth.manuals = manuals_from_json(doc.at("manuals").dump());
        for (const auto& e : doc.at("experts"))
            truth.experts.push_back(
                {e.at("user_id").get<std::string>(), e.at("task_id").get<std::string>(), e.at("trial_index").get<int>()});
        for (const auto& h : doc.value("hotspots", json::array()))
            truth.hotspot_locations.emplace_back(h.at("x").get<double>(), h.at("y").get<double>());
    } catch (const json::exception& e) {
        throw SchemaError(std::string("truth file: ") + e.what());
    }
    return truth;
}

namespace {

#define OPSKILL_SYNTH_FIELDS(X)                                                                                   \
    X(users) X(trials_per_user) X(hotspot_count) X(base_gaze_s) X(base_approach_s) X(base_operate_s)                \
    X(difficulty_slowdown) X(duration_decay) X(duration_jitter) X(period_jitter) X(user_spread) X(gaze_noise_px)     \
    X(gaze_offset_px) X(head_noise_deg) X(noise_decay) X(gaze_dropout) X(error_rate) X(error_decay)                  \
    X(omission_rate) X(repeat_share) X(order_swap_rate) X(spurious_touch_rate) X(touch_jitter_px) X(experts_per_task)                   \
    X(expert_speedup) X(expert_noise) X(knowhow_decay) X(rating_noise) X(fps) X(seed)

}  // namespace

std::string synth_spec_to_json(const SynthSpec& spec)
{
    using nlohmann::json;
    json doc;
#define X(name) doc[#name] = spec.name;
    OPSKILL_SYNTH_FIELDS(X)
#undef X
    json tasks = json::array();
    for (const auto& t : spec.tasks) {
        json diff = json::object();
        for (const auto& [h, d] : t.difficulty) diff[std::to_string(h)] = d;
        tasks.push_back({{"task_id", t.task_id}, {"groups", t.groups}, {"difficulty", diff}});
    }
    doc["tasks"] = std::move(tasks);
    doc["map"] = {{"width_px", spec.map.width_px}, {"height_px", spec.map.height_px}};
    const auto& k = spec.intrinsics;
    doc["intrinsics"] = {{"image_width_px", k.image_width_px},
                         {"image_height_px", k.image_height_px},
                         {"sensor_width_mm", k.sensor_width_mm},
                         {"sensor_height_mm", k.sensor_height_mm},
                         {"focal_mm", k.focal_mm}};
    return doc.dump(2);
}

SynthSpec synth_spec_from_json(std::string_view document)
{
    using nlohmann::json;
    SynthSpec spec;
    try {
        const json doc = json::parse(document);
        if (!doc.is_object()) throw SchemaError("synth spec: expected a JSON object");
#define X(name)                                                                                                   \
    if (doc.contains(#name)) doc.at(#name).get_to(spec.name);
        OPSKILL_SYNTH_FIELDS(X)
#undef X
        if (doc.contains("tasks")) {
            spec.tasks.clear();
            for (const auto& t : doc.at("tasks")) {
                SynthTask task;
                task.task_id = t.at("task_id").is_string() ? t.at("task_id").get<std::string>()
                                                           : std::to_string(t.at("task_id").get<long long>());
                task.groups = t.at("groups").get<std::vector<std::vector<int>>>();
                const json diff = t.value("difficulty", json::object());
                for (const auto& [h, d] : diff.items()) task.difficulty[std::stoi(h)] = d.get<double>();
                spec.tasks.push_back(std::move(task));
            }
        }
        if (doc.contains("map")) {
            spec.map.width_px = doc["map"].value("width_px", spec.map.width_px);
            spec.map.height_px = doc["map"].value("height_px", spec.map.height_px);
        }
        if (doc.contains("intrinsics")) {
            const auto& k = doc["intrinsics"];
            spec.intrinsics = {k.at("image_width_px").get<double>(), k.at("image_height_px").get<double>(),
                               k.at("sensor_width_mm").get<double>(), k.at("sensor_height_mm").get<double>(),
                               k.at("focal_mm").get<double>()};
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("synth spec: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw SchemaError("synth spec: difficulty keys must be hotspot ids");
    }
    spec.check();
    return spec;
}

std::string session_file_name(const TrialKey& key)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "_n%02d.session.json", key.trial_index);
    return key.user_id + "_t" + key.task_id + buf;
}

void write_dataset(const SessionSet& set, const SynthTruth& truth, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    for (const auto& trial : set.trials) write_file_atomic(dir / session_file_name(trial.key()), serialize_trial(trial));
    write_file_atomic(dir / "truth.json", truth_to_json(truth));
}

}  // namespace opskill
