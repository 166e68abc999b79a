#include "oracles.hpp"

#include "opskill/error.hpp"
#include "opskill/pipeline.hpp"
#include "opskill/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace opskill;

namespace {

using Vec = std::vector<double>;

FeatureTable noise_table(std::uint64_t seed, int users, int trials)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, 1);
    FeatureTable t;
    t.names = {"noise"};
    for (int u = 0; u < users; ++u)
        for (int i = 1; i <= trials; ++i) {
            t.trials.push_back({"u" + std::to_string(u), "1", i});
            t.values.push_back({n(rng)});
        }
    return t;
}

struct DifficultyFixture {
    Analysis analysis;
    std::vector<FeatureVector> units;
    SessionSet set;

    DifficultyFixture()
    {
        SynthSpec spec;
        spec.users = 6;
        spec.trials_per_user = 6;
        spec.tasks = {SynthSpec::default_tasks()[0]};
        set = generate_dataset(spec);
        PipelineConfig cfg;
        analysis = analyze(set, cfg);
        for (const auto& [k, v] : analysis.features) units.insert(units.end(), v.begin(), v.end());
    }

    std::vector<const TrialRecord*> trials() const
    {
        std::vector<const TrialRecord*> out;
        for (const auto& t : set.trials) out.push_back(&t);
        return out;
    }
};

double r_of(const std::vector<CorrelationResult>& rows, const std::string& name)
{
    for (const auto& r : rows)
        if (r.feature == name) return r.R;
    FAIL("missing feature " << name);
    return 0;
}

}  // namespace

TEST_SUITE("stats")
{
    TEST_CASE("trend")
    {
        CHECK(trend(Vec{2, 1}) == doctest::Approx(-66.6666666667));
        CHECK(trend(Vec{3, 3, 3}) == 0.0);
        // numerator telescopes to (last - first)
        const Vec v{4, 9, 1, 7};
        CHECK(trend(v) == doctest::Approx(100.0 * (7 - 4) / 5.25));
        Vec rev(v.rbegin(), v.rend());
        CHECK(trend(rev) == doctest::Approx(-trend(v)));
        CHECK_THROWS_AS(trend(Vec{1}), DegenerateError);
        CHECK_THROWS_AS(trend(Vec{1, -1}), DegenerateError);
    }

    TEST_CASE("deviations")
    {
        const auto flat = deviations({{"a", {2, 2}}, {"b", {2, 2, 2}}});
        CHECK(flat.intra_by_user.at("a") == 0.0);
        CHECK(flat.inter == 0.0);

        const auto one = deviations({{"a", {1, 3}}});
        CHECK(one.intra_by_user.at("a") == doctest::Approx(0.5));

        const auto two = deviations({{"a", {1}}, {"b", {3}}});
        CHECK(two.inter == doctest::Approx(0.5));

        const auto scaled = deviations({{"a", {1 * 7.5, 3 * 7.5}}, {"b", {3}}});
        CHECK(scaled.intra_by_user.at("a") == doctest::Approx(one.intra_by_user.at("a")));

        CHECK_THROWS_AS(deviations({{"a", {1, -1}}}), DegenerateError);
        CHECK_THROWS_AS(deviations({{"a", {}}}), DegenerateError);
    }

    TEST_CASE("rank correlation examples")
    {
        CHECK(spearman(Vec{3, 2, 1}, Vec{1, 2, 3}) == doctest::Approx(-1.0));
        CHECK(spearman(Vec{1, 2, 3}, Vec{1, 2, 3}) == doctest::Approx(1.0));
        const Vec f{1, 2, 2, 4};
        const Vec l{1, 2, 3, 4};
        CHECK(spearman(f, l) == doctest::Approx(oracle::spearman(f, l)).epsilon(1e-12));
        CHECK(spearman(f, l) == doctest::Approx(0.9487).epsilon(1e-4));
        CHECK_THROWS_AS(spearman(Vec{1, 1, 1}, Vec{1, 2, 3}), DegenerateError);
    }

    TEST_CASE("linear correlation examples")
    {
        const Vec f{1, 4, 2, 8, 5};
        Vec aff;
        Vec neg;
        for (double x : f) {
            aff.push_back(2 * x + 1);
            neg.push_back(-x);
        }
        CHECK(pearson(f, aff) == doctest::Approx(1.0));
        CHECK(pearson(f, neg) == doctest::Approx(-1.0));
        CHECK(pearson(Vec{1, 2, 3}, Vec{1, 3, 2}) == doctest::Approx(0.5));
        CHECK_THROWS_AS(pearson(Vec{1, 2}, Vec{1, 2}), DegenerateError);
        CHECK_THROWS_AS(pearson(Vec{1, 2, 3}, Vec{5, 5, 5}), DegenerateError);
    }

    TEST_CASE("correlations agree with the reference and obey their invariances")
    {
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> small(0, 5);  // many ties
        std::uniform_real_distribution<double> real(-10, 10);
        int checked = 0;
        for (int round = 0; round < 500; ++round) {
            const int n = 3 + round % 15;
            Vec x;
            Vec y;
            for (int i = 0; i < n; ++i) {
                x.push_back(round % 2 ? small(rng) : real(rng));
                y.push_back(real(rng));
            }
            CHECK(average_ranks(x) == oracle::counting_ranks(x));
            double rs = 0;
            try {
                rs = spearman(x, y);
            } catch (const DegenerateError&) {
                continue;
            }
            ++checked;
            CHECK(rs == doctest::Approx(oracle::spearman(x, y)).epsilon(1e-12));
            if (round % 2 == 0) CHECK(rs == doctest::Approx(oracle::spearman_no_ties(x, y)).epsilon(1e-9));
            CHECK(pearson(x, y) == doctest::Approx(oracle::pearson(x, y)).epsilon(1e-12));

            Vec mono;
            Vec aff;
            Vec neg;
            for (double v : x) {
                mono.push_back(std::exp(v / 4) + v * v * v);
                aff.push_back(3.5 * v - 2);
                neg.push_back(-v);
            }
            CHECK(spearman(mono, y) == doctest::Approx(rs).epsilon(1e-12));
            CHECK(pearson(aff, y) == doctest::Approx(pearson(x, y)).epsilon(1e-9));
            CHECK(pearson(neg, y) == doctest::Approx(-pearson(x, y)).epsilon(1e-12));
            CHECK(std::abs(rs) <= 1.0);
        }
        CHECK(checked > 400);
    }

    TEST_CASE("skill correlation table")
    {
        SUBCASE("pure noise stays weak")
        {
            for (auto pooling : {SkillPooling::WithinUserAverage, SkillPooling::PooledRanks}) {
                const auto rows = skill_correlation_table(noise_table(2024, 12, 12), pooling);
                REQUIRE(rows.size() == 1);
                CHECK(std::abs(rows[0].R) < 0.3);
                CHECK_FALSE(rows[0].degenerate);
            }
        }
        SUBCASE("planted decreasing feature ranks first")
        {
            auto t = noise_table(9, 4, 5);
            t.names.push_back("planted");
            for (std::size_t r = 0; r < t.trials.size(); ++r) t.values[r].push_back(10.0 / t.trials[r].trial_index);
            const auto rows = skill_correlation_table(t);
            CHECK(rows[0].feature == "planted");
            CHECK(rows[0].R == doctest::Approx(-1.0));
            CHECK(rows[0].groups == 4);
            CHECK(t.column("planted") == 1);
        }
        SUBCASE("short or flat groups are degenerate")
        {
            auto t = noise_table(1, 2, 2);
            const auto rows = skill_correlation_table(t);
            CHECK(rows[0].degenerate);
            CHECK(std::isnan(rows[0].R));
            for (auto& v : t.values) v[0] = 1.0;
            CHECK(skill_correlation_table(t, SkillPooling::PooledRanks)[0].degenerate);
        }
    }

    TEST_CASE("trend and deviation tables have one row per scope")
    {
        auto t = noise_table(3, 3, 4);
        for (auto& v : t.values) v[0] = std::abs(v[0]) + 1;
        t.trials[0].task_id = "2";
        const auto trends = trend_table(t);
        CHECK(trends.size() == 3);
        CHECK(trends.back().scope == "all");
        const auto devs = deviation_table(t);
        CHECK(devs.size() == 3);
        CHECK(devs[0].mean_intra >= 0);
        CHECK(trend_csv(trends).rfind("feature,scope,mean_trend_percent,users\n", 0) == 0);
    }

    TEST_CASE("difficulty correlation")
    {
        DifficultyFixture fx;
        const std::vector<std::string> names{"gazeVar_G", "dur_G"};
        const auto trials = fx.trials();

        SUBCASE("harder steps with larger planted gaze spread")
        {
            const auto rows = difficulty_correlation_table(fx.units, trials, names);
            CHECK(r_of(rows, "gazeVar_G") >= 0.9);
            CHECK(rows[0].groups == 5);
        }
        SUBCASE("inverted ratings")
        {
            for (auto& t : fx.set.trials)
                for (auto& q : t.ratings) q.score = 5 - q.score;
            const auto rows = difficulty_correlation_table(fx.units, fx.trials(), names);
            CHECK(r_of(rows, "gazeVar_G") <= -0.9);
        }
        SUBCASE("identical difficulty is degenerate for every feature")
        {
            for (auto& t : fx.set.trials)
                for (auto& q : t.ratings) q.score = 3;
            const auto rows = difficulty_correlation_table(fx.units, fx.trials(), names);
            for (const auto& r : rows) CHECK(r.degenerate);
        }
        SUBCASE("no ratings")
        {
            for (auto& t : fx.set.trials) t.ratings.clear();
            CHECK_THROWS_AS(difficulty_correlation_table(fx.units, fx.trials(), names), MissingRatingsError);
        }
    }
}
