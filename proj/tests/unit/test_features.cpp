#include "builders.hpp"
#include "oracles.hpp"

#include "opskill/error.hpp"
#include "opskill/features.hpp"
#include "opskill/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace opskill;

namespace {

DistanceSeries series(std::vector<double> t, std::vector<double> d) { return {std::move(t), std::move(d)}; }

// Pixels per frame that produce `deg` degrees of rotation per frame on the x axis.
double vx_for_degrees(double deg, const CameraIntrinsics& k)
{
    return std::tan(deg * std::numbers::pi / 180.0) * k.image_width_px * k.focal_mm / k.sensor_width_mm;
}

}  // namespace

TEST_SUITE("features")
{
    TEST_CASE("distance series")
    {
        const auto h = build::hotspot(1, 100, 200);
        const std::vector<GazeSample> gaze{{0.0, 100, 200, true}, {0.1, 103, 204, true}, {0.2, 0, 0, false},
                                           {0.3, 100, 200, true}};
        const auto s = distance_series(std::span<const GazeSample>(gaze), h, {0.0, 1.0});
        REQUIRE(s.size() == 3);
        CHECK(s.d[0] == 0.0);
        CHECK(s.d[1] == 5.0);
        CHECK(s.t[2] == 0.3);
        CHECK(distance_series(std::span<const GazeSample>(gaze), h, {0.05, 0.25}).size() == 1);
        CHECK(distance_series(std::span<const GazeSample>(gaze), h, {0.5, 0.5}).size() == 0);

        const std::vector<HandSample> hand{{0.0, 103, 204, false}, {0.1, 103, 204, true}};
        CHECK(distance_series(std::span<const HandSample>(hand), h, {0.0, 1.0}).size() == 1);
    }

    TEST_CASE("series_stats worked values")
    {
        SUBCASE("constant series")
        {
            const auto s = series_stats(series({0, 1, 2}, {2, 2, 2}), 2.0);
            CHECK(s.variance == 0.0);
            CHECK(s.frequency_f == 0.0);
            CHECK(s.velocity_V == 0.0);
            CHECK(s.mean_distance_D == 2.0);
        }
        SUBCASE("two samples")
        {
            const auto s = series_stats(series({0, 1}, {1, 3}), 1.0);
            CHECK(s.velocity_V == 2.0);
            CHECK(s.variance == 1.0);
            CHECK(s.frequency_f == 0.0);
        }
        SUBCASE("sign changes")
        {
            const auto s = series_stats(series({0, 1, 2, 3}, {1, 2, 1, 2}), 3.0);
            CHECK(s.frequency_f == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        }
        SUBCASE("plateaus are skipped when counting sign changes")
        {
            const auto s = series_stats(series({0, 1, 2, 3, 4}, {1, 2, 2, 2, 3}), 1.0);
            CHECK(s.frequency_f == 0.0);
            const auto u = series_stats(series({0, 1, 2, 3}, {1, 2, 2, 1}), 1.0);
            CHECK(u.frequency_f == 1.0);
        }
        SUBCASE("empty and single-sample series")
        {
            const auto e = series_stats({}, 2.0);
            CHECK(e.duration_T == 2.0);
            CHECK(e.mean_distance_D == 0.0);
            CHECK(e.velocity_V == 0.0);
            CHECK(e.variance == 0.0);
            CHECK(e.frequency_f == 0.0);
            const auto one = series_stats(series({0.5}, {4}), 2.0);
            CHECK(one.velocity_V == 0.0);
            CHECK(one.variance == 0.0);
            CHECK(one.frequency_f == 0.0);
            CHECK(series_stats({}, 0.0).duration_T == 0.0);
        }
        SUBCASE("non-positive duration with samples")
        {
            CHECK_THROWS_AS(series_stats(series({0}, {1}), 0.0), NonPositiveDurationError);
            CHECK_THROWS_AS(series_stats(series({0}, {1}), -1.0), NonPositiveDurationError);
        }
    }

    TEST_CASE("series_stats properties")
    {
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> val(0, 500);
        std::uniform_real_distribution<double> step(0.01, 0.2);
        for (int round = 0; round < 300; ++round) {
            const int n = 2 + round % 60;
            DistanceSeries s;
            double t = 0;
            for (int i = 0; i < n; ++i) {
                t += step(rng);
                s.t.push_back(t);
                s.d.push_back(val(rng));
            }
            const double T = t + 0.1;
            const auto base = series_stats(s, T);

            const double c = 3.7;
            auto scaled = s;
            for (double& d : scaled.d) d *= c;
            const auto sc = series_stats(scaled, T);
            CHECK(sc.velocity_V == doctest::Approx(c * base.velocity_V).epsilon(1e-12));
            CHECK(sc.variance == doctest::Approx(c * c * base.variance).epsilon(1e-12));
            CHECK(sc.frequency_f == base.frequency_f);

            auto shifted = s;
            for (double& x : shifted.t) x += 1000.0;
            const auto sh = series_stats(shifted, T);
            CHECK(sh.velocity_V == doctest::Approx(base.velocity_V).epsilon(1e-9));
            CHECK(sh.variance == base.variance);
            CHECK(sh.frequency_f == base.frequency_f);

            const double count = base.frequency_f * T;
            CHECK(std::abs(count - std::round(count)) < 1e-9);
        }
    }

    TEST_CASE("head angular velocity")
    {
        const auto k = build::camera();
        CHECK(head_angle_per_frame({0, 0, 0}, k).x == 0.0);
        const double v45 = k.image_width_px * k.focal_mm / k.sensor_width_mm;
        CHECK(std::abs(head_angle_per_frame({0, v45, 0}, k).x - 45.0) < 1e-12);
        CHECK(head_angle_per_frame({0, v45 / 2, 0}, k).x == doctest::Approx(26.565051177).epsilon(1e-9));
        const double vy45 = k.image_height_px * k.focal_mm / k.sensor_height_mm;
        CHECK(std::abs(head_angle_per_frame({0, 0, vy45}, k).y - 45.0) < 1e-12);

        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> v(-2000, 2000);
        for (int i = 0; i < 100; ++i) {
            const GlobalMotionSample m{0, v(rng), v(rng)};
            const auto a = head_angle_per_frame(m, k);
            const auto b = head_angle_per_frame({0, -m.vx, -m.vy}, k);
            CHECK(a.x == -b.x);
            CHECK(a.y == -b.y);
        }
        CHECK(head_angular_velocity({0, v45, 0}, k, 1.0 / 30).x == doctest::Approx(45.0 * 30));
        CHECK_THROWS_AS(head_angular_velocity({0, 1, 0}, k, 0.0), NonPositiveDurationError);
    }

    TEST_CASE("deg/s agrees across sample rates")
    {
        // The same physical rotation rate recorded at 30 and 60 fps.
        const auto k = build::camera();
        const double rate = 40.0;  // deg/s
        for (double fps : {30.0, 60.0}) {
            TrialRecord t = build::trial();
            for (int i = 0; i < 10; ++i) t.head_motion.push_back({i / fps, vx_for_degrees(rate / fps, k), 0});
            for (const auto& s : head_velocity_track(t)) CHECK(std::abs(s.w.x - rate) < 1e-9);
        }
    }

    TEST_CASE("head statistics use magnitudes inside the interval")
    {
        std::vector<TimedAngularVelocity> track{{0.0, {1, -2}}, {0.5, {-3, 2}}, {1.0, {5, 5}}};
        const auto s = head_stats(track, {0.0, 1.0});
        CHECK(s.mean_speed_x == 2.0);
        CHECK(s.variance_x == 1.0);
        CHECK(s.mean_speed_y == 2.0);
        CHECK(s.variance_y == 0.0);
    }

    TEST_CASE("extract_features")
    {
        auto t = build::trial();
        const auto reg = build::registry({build::hotspot(1, 100, 100)});
        for (int i = 0; i <= 100; ++i) {
            const double ts = i * 0.1;
            t.gaze.push_back({ts, 100, 100, true});
            t.hand.push_back({ts, 100 + ts, 100, ts >= 2.0});
            t.head_motion.push_back({ts, 1.0, 0.0});
        }

        SUBCASE("empty G")
        {
            OperationalUnit ou{1, {2, 2}, {2, 5}, {5, 8}};
            const auto f = extract_features(ou, t, reg, 3);
            CHECK(f.step == 3);
            CHECK(f.at(Period::G) == PeriodFeatures{});
            CHECK(f.total_duration == doctest::Approx(6.0));
            CHECK(f.at(Period::O).gaze.mean_distance_D == 0.0);
            CHECK(f.at(Period::A).hand.duration_T == doctest::Approx(3.0));
        }
        SUBCASE("full unit")
        {
            OperationalUnit ou{1, {0, 2}, {2, 5}, {5, 8}};
            const auto f = extract_features(ou, t, reg);
            CHECK(f.total_duration == doctest::Approx(8.0));
            CHECK(f.at(Period::G).hand.mean_distance_D == 0.0);  // hand hidden
            CHECK(f.at(Period::O).head.mean_speed_x > 0.0);
            CHECK(f.at(Period::O).head.variance_x == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(extract_features(ou, t, reg) == f);
        }
        SUBCASE("unknown hotspot")
        {
            OperationalUnit ou{9, {0, 2}, {2, 5}, {5, 8}};
            CHECK_THROWS_AS(extract_features(ou, t, reg), NoOccurrenceError);
        }
    }

    TEST_CASE("planted gaze noise shows up as operating-period variance")
    {
        SynthSpec spec;
        spec.users = 1;
        spec.trials_per_user = 1;
        spec.tasks = {{"1", {{1}}, {}}};
        spec.hotspot_count = 1;
        spec = spec.noiseless();
        spec.gaze_noise_px = 10.0;
        spec.base_operate_s = 50.0;  // 1500 samples at 30 fps
        spec.seed = 99;
        const auto set = generate_dataset(spec);
        const auto reg = cluster_touches(set, {});
        const auto labeled = assign_hotspots(set, reg, {});
        const auto ous = segment_units(labeled.trials[0], reg, {});
        REQUIRE(ous.size() == 1);
        const auto f = extract_features(ous[0], labeled.trials[0], reg);
        const auto n = distance_series(std::span<const GazeSample>(labeled.trials[0].gaze), reg.hotspots[0], ous[0].o).size();
        CHECK(n >= 1000);
        const double sigma2 = 100.0;
        CHECK(std::abs(f.at(Period::O).gaze.variance - sigma2) <= 0.1 * sigma2);
        CHECK(f.at(Period::O).gaze.mean_distance_D == doctest::Approx(spec.gaze_offset_px).epsilon(0.05));
    }

    TEST_CASE("gaze-head correlation")
    {
        const auto k = build::camera();
        std::mt19937_64 rng(8);
        std::normal_distribution<double> noise(0, 1);

        auto make = [&](int n, auto head_of_rate) {
            TrialRecord t = build::trial();
            double x = 500;
            double y = 500;
            std::vector<double> rx;
            std::vector<double> ry;
            t.gaze.push_back({0.0, x, y, true});
            for (int i = 1; i <= n; ++i) {
                rx.push_back(noise(rng));
                ry.push_back(noise(rng));
                x += rx.back();
                y += ry.back();
                t.gaze.push_back({static_cast<double>(i), x, y, true});
            }
            // Head samples at the gaze-rate midpoints, unit spacing.
            for (int i = 0; i < n; ++i) {
                const auto [wx, wy] = head_of_rate(rx[i], ry[i]);
                t.head_motion.push_back({i + 0.5, vx_for_degrees(wx, k),
                                         std::tan(wy * std::numbers::pi / 180.0) * k.image_height_px * k.focal_mm /
                                             k.sensor_height_mm});
            }
            return t;
        };

        const auto same = make(200, [](double a, double b) { return std::pair{a, b}; });
        const auto r1 = gaze_head_correlation(same);
        CHECK(r1.r_x == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(r1.r_y == doctest::Approx(1.0).epsilon(1e-9));

        const auto neg = make(200, [](double a, double b) { return std::pair{-a, -b}; });
        const auto r2 = gaze_head_correlation(neg);
        CHECK(r2.r_x == doctest::Approx(-1.0).epsilon(1e-9));
        CHECK(r2.r_y == doctest::Approx(-1.0).epsilon(1e-9));

        const auto indep = make(10000, [&](double, double) { return std::pair{noise(rng), noise(rng)}; });
        const auto r3 = gaze_head_correlation(indep);
        CHECK(std::abs(r3.r_x) < 0.05);
        CHECK(std::abs(r3.r_y) < 0.05);

        TrialRecord tiny = build::trial();
        tiny.gaze = {{0, 1, 1, true}, {1, 2, 2, true}};
        CHECK_THROWS_AS(gaze_head_correlation(tiny), InsufficientDataError);
    }

    TEST_CASE("resampling uses the coarser grid")
    {
        TimeSeries coarse{{0, 1, 2, 3, 4}, {0, 1, 0, 1, 0}};
        TimeSeries fine;
        for (int i = 0; i <= 40; ++i) {
            const double t = i * 0.1;
            fine.t.push_back(t);
            const double phase = t - std::floor(t);
            const bool up = static_cast<int>(std::floor(t)) % 2 == 0;
            fine.v.push_back(up ? phase : 1 - phase);
        }
        CHECK(resampled_pearson(coarse, fine) == doctest::Approx(1.0));
        CHECK(resampled_pearson(fine, coarse) == doctest::Approx(1.0));
    }

    TEST_CASE("heat grid")
    {
        auto a = build::trial("u1");
        auto b = build::trial("u2");
        a.gaze = {{0, 5, 5, true}};
        b.gaze = {{0, 15, 5, true}, {1, 16, 6, true}, {2, 16, 6, false}};
        const MapExtent map{40, 20};
        const std::vector<TrialRecord> only_a{a};
        const auto ga = gaze_heat_grid(only_a, {}, 10, map);
        CHECK(ga.total() == 1);
        CHECK(ga.rows == 2);
        CHECK(ga.cols == 4);

        const std::vector<TrialRecord> only_b{b};
        const auto gb = gaze_heat_grid(only_b, {}, 10, map);
        CHECK(gb.total() == 2);
        CHECK(gb.at(0, 1) == 2);
        int nonzero = 0;
        for (auto c : gb.counts) nonzero += c != 0;
        CHECK(nonzero == 1);

        const std::vector<TrialRecord> both{a, b};
        const auto gab = gaze_heat_grid(both, {}, 10, map);
        for (std::size_t i = 0; i < gab.counts.size(); ++i) CHECK(gab.counts[i] == ga.counts[i] + gb.counts[i]);

        const auto early = gaze_heat_grid(both, [](const TrialRecord&, double t) { return t < 0.5; }, 10, map);
        CHECK(early.total() == 2);
        CHECK_THROWS_AS(gaze_heat_grid(both, {}, 0, map), ConfigError);
    }

    TEST_CASE("feature catalog")
    {
        const auto names = feature_names();
        CHECK(names.size() == 40);
        CHECK(names.front() == "dur_all");
        CHECK(feature_def("gazeVar_G").name == "gazeVar_G");
        CHECK(feature_def("dur_O").is_duration);
        CHECK_FALSE(feature_def("headVarY_A").is_duration);
        CHECK_THROWS_AS(feature_def("nope"), ConfigError);

        FeatureVector u1;
        FeatureVector u2;
        u1.total_duration = 2;
        u2.total_duration = 4;
        u1.periods[0].gaze.variance = 1;
        u2.periods[0].gaze.variance = 3;
        const std::vector<FeatureVector> units{u1, u2};
        CHECK(trial_feature_value(feature_def("dur_all"), units) == 6.0);
        CHECK(trial_feature_value(feature_def("gazeVar_G"), units) == 2.0);

        const auto csv = features_csv(units);
        CHECK(csv.substr(0, csv.find('\n')).find(",dur_all,dur_G,gazeD_G") != std::string::npos);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    }
}
