#include "builders.hpp"

#include "opskill/error.hpp"
#include "opskill/synth.hpp"
#include "opskill/text.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace opskill;

namespace {

const char* kMinimal = R"({
  "user_id": "u1", "task_id": "1", "trial_index": 1,
  "intrinsics": {"image_width_px": 1280, "image_height_px": 720,
                 "sensor_width_mm": 3.6, "sensor_height_mm": 2.0, "focal_mm": 1.88},
  "gaze": [[0.0, 10, 20, true]],
  "hand": [[0.0, 30, 40, false]],
  "head_motion": [[0.0, 1.5, -2.0]],
  "touches": [[0.5, 1.0, 100, 200]],
  "ratings": [[1, 3]]
})";

std::string with(std::string doc, const std::string& from, const std::string& to)
{
    const auto pos = doc.find(from);
    REQUIRE(pos != std::string::npos);
    return doc.replace(pos, from.size(), to);
}

}  // namespace

TEST_SUITE("records")
{
    TEST_CASE("minimal document parses into one-element tracks")
    {
        const auto r = parse_trial(kMinimal);
        CHECK(r.user_id == "u1");
        CHECK(r.task_id == "1");
        CHECK(r.trial_index == 1);
        CHECK(r.gaze.size() == 1);
        CHECK(r.hand.size() == 1);
        CHECK(r.head_motion.size() == 1);
        CHECK(r.touches.size() == 1);
        CHECK(r.ratings.size() == 1);
        CHECK(r.gaze[0].x == 10);
        CHECK_FALSE(r.hand[0].visible);
        CHECK(r.touches[0].duration() == doctest::Approx(0.5));
        REQUIRE(r.intrinsics.has_value());
        CHECK(r.intrinsics->focal_mm == 1.88);
    }

    TEST_CASE("decreasing gaze timestamps are an order error")
    {
        const auto doc = with(kMinimal, R"("gaze": [[0.0, 10, 20, true]])",
                              R"("gaze": [[1.0, 10, 20, true], [0.5, 10, 20, true]])");
        CHECK_THROWS_AS(parse_trial(doc), OrderError);
    }

    TEST_CASE("rating outside 0..5 is a bounds error")
    {
        CHECK_THROWS_AS(parse_trial(with(kMinimal, "[[1, 3]]", "[[1, 7]]")), BoundsError);
        CHECK_THROWS_AS(parse_trial(with(kMinimal, "[[1, 3]]", "[[1, -1]]")), BoundsError);
    }

    TEST_CASE("schema violations")
    {
        CHECK_THROWS_AS(parse_trial("{"), SchemaError);
        CHECK_THROWS_AS(parse_trial("[]"), SchemaError);
        CHECK_THROWS_AS(parse_trial(with(kMinimal, R"("user_id": "u1", )", "")), SchemaError);
        CHECK_THROWS_AS(parse_trial(with(kMinimal, "[0.0, 1.5, -2.0]", R"([0.0, "x", -2.0])")), SchemaError);
        CHECK_THROWS_AS(parse_trial(with(kMinimal, "[0.0, 1.5, -2.0]", "[0.0, 1.5]")), SchemaError);
        CHECK_THROWS_AS(parse_trial(with(kMinimal, R"("focal_mm": 1.88)", R"("focal_mm": 0)")), BoundsError);
    }

    TEST_CASE("touch must end after it starts")
    {
        CHECK_THROWS_AS(parse_trial(with(kMinimal, "[0.5, 1.0, 100, 200]", "[0.5, 0.5, 100, 200]")), OrderError);
    }

    TEST_CASE("invalid samples may carry null positions")
    {
        const auto r = parse_trial(with(kMinimal, "[0.0, 10, 20, true]", "[0.0, null, null, false]"));
        CHECK_FALSE(r.gaze[0].valid);
        CHECK_THROWS_AS(parse_trial(with(kMinimal, "[0.0, 10, 20, true]", "[0.0, null, null, true]")), SchemaError);
    }

    TEST_CASE("serialize then parse is the identity")
    {
        SynthSpec spec;
        spec.users = 2;
        spec.trials_per_user = 2;
        for (const auto& r : generate_dataset(spec).trials) CHECK(parse_trial(serialize_trial(r)) == r);

        auto labeled = build::trial("a b", "task,2", 3);
        labeled.touches.push_back(build::touch(0.1, 0.7, 1.0 / 3.0, 2.5e-7, 4));
        labeled.gaze.push_back({0.1, -0.0, 1e300, false});
        CHECK(parse_trial(serialize_trial(labeled)) == labeled);
    }

    TEST_CASE("load_dataset")
    {
        const auto dir = build::temp_dir("records_load");
        auto a = build::trial("u1", "1", 1);
        auto b = build::trial("u1", "1", 2);
        write_file_atomic(dir / "b.session.json", serialize_trial(b));
        write_file_atomic(dir / "a.session.json", serialize_trial(a));

        SUBCASE("two distinct trials")
        {
            const auto paths = resolve_dataset_paths(dir);
            const auto set = load_dataset(paths);
            REQUIRE(set.trials.size() == 2);
            CHECK(set.trials[0].trial_index == 1);
            CHECK(set.trials[1].trial_index == 2);
        }
        SUBCASE("duplicate identity is rejected")
        {
            write_file_atomic(dir / "c.session.json", serialize_trial(b));
            CHECK_THROWS_AS(load_dataset(resolve_dataset_paths(dir)), DuplicateTrialError);
        }
        SUBCASE("parse errors name the file")
        {
            write_file_atomic(dir / "bad.session.json", "{}");
            try {
                load_dataset(resolve_dataset_paths(dir));
                FAIL("expected SchemaError");
            } catch (const SchemaError& e) {
                CHECK(std::string(e.what()).find("bad.session.json") != std::string::npos);
            }
        }
        SUBCASE("manifest with comments and relative paths")
        {
            write_file_atomic(dir / "list.txt", "# trials\nb.session.json\n\na.session.json\n");
            const auto paths = resolve_dataset_paths(dir / "list.txt");
            REQUIRE(paths.size() == 2);
            CHECK(load_dataset(paths).trials.size() == 2);
        }
    }

    TEST_CASE("144 generated trials load as 144")
    {
        SynthSpec spec;  // 12 users x 12 trials
        const auto set = generate_dataset(spec);
        const auto dir = build::temp_dir("records_144");
        write_dataset(set, planted_truth(spec), dir);
        const auto paths = resolve_dataset_paths(dir);
        CHECK(paths.size() == 144);
        const auto loaded = load_dataset(paths);
        CHECK(loaded.trials.size() == 144);
        CHECK(loaded == set);
    }

    TEST_CASE("loading is independent of path order")
    {
        const auto dir = build::temp_dir("records_perm");
        for (int i = 1; i <= 5; ++i) {
            auto t = build::trial(i % 2 ? "u2" : "u1", "1", i);
            t.gaze.push_back({0.0, static_cast<double>(i), 1.0, true});
            write_file_atomic(dir / ("t" + std::to_string(i) + ".session.json"), serialize_trial(t));
        }
        auto paths = resolve_dataset_paths(dir);
        const auto reference = load_dataset(paths);
        std::mt19937_64 rng(7);
        for (int k = 0; k < 10; ++k) {
            std::shuffle(paths.begin(), paths.end(), rng);
            CHECK(load_dataset(paths) == reference);
        }
    }

    TEST_CASE("validate")
    {
        SessionSet set;
        set.trials.push_back(build::trial());
        set.trials[0].gaze.push_back({0.0, 10, 10, true});
        CHECK(validate(set).empty());

        SUBCASE("gaze beyond the map width")
        {
            set.trials[0].gaze.push_back({1.0, set.map_width_px + 1, 10, true});
            const auto d = validate(set);
            REQUIRE(d.size() == 1);
            CHECK(d[0].rule == "bounds");
            CHECK(d[0].trial == set.trials[0].key());
        }
        SUBCASE("invalid samples are not position-checked")
        {
            set.trials[0].gaze.push_back({1.0, -500, 10, false});
            CHECK(validate(set).empty());
        }
        SUBCASE("missing intrinsics")
        {
            set.trials[0].intrinsics.reset();
            const auto d = validate(set);
            REQUIRE(d.size() == 1);
            CHECK(d[0].rule == "schema");
        }
        SUBCASE("duplicates, disorder and empty sets")
        {
            set.trials.push_back(set.trials[0]);
            set.trials[1].hand = {{2.0, 1, 1, true}, {1.0, 1, 1, true}};
            const auto d = validate(set);
            CHECK(std::count_if(d.begin(), d.end(), [](const Diagnostic& x) { return x.rule == "duplicate"; }) == 1);
            CHECK(std::count_if(d.begin(), d.end(), [](const Diagnostic& x) { return x.rule == "order"; }) == 1);
            CHECK(validate(SessionSet{})[0].rule == "empty");
        }
    }
}
