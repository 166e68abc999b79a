#include "opskill/error.hpp"
#include "opskill/taskmodel.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <tuple>

using namespace opskill;

namespace {

using Seq = std::vector<int>;

TaskModel chain(std::initializer_list<Seq> protos)
{
    const std::vector<Seq> v(protos);
    return build_baseline(std::span<const Seq>(v));
}

// Exhaustive search over every per-position choice, with path lengths from
// repeated edge relaxation rather than breadth-first search.
class BruteAligner {
public:
    explicit BruteAligner(const TaskModel& m) : m_(m), S_(static_cast<int>(m.size()))
    {
        constexpr int inf = std::numeric_limits<int>::max() / 4;
        // node 0 = start, node s+1 = state s
        std::vector<std::vector<bool>> edge(S_ + 1, std::vector<bool>(S_ + 1, false));
        for (int s = 0; s < S_; ++s) edge[0][s + 1] = m.initial_counts[s] > 0;
        for (int a = 0; a < S_; ++a)
            for (int b = 0; b < S_; ++b) edge[a + 1][b + 1] = m.transitions[a][b] > 0;
        len_.assign(S_ + 1, std::vector<int>(S_ + 1, inf));
        for (int a = 0; a <= S_; ++a)
            for (int b = 0; b <= S_; ++b)
                if (edge[a][b]) len_[a][b] = 1;
        for (int round = 0; round < S_ + 1; ++round)
            for (int a = 0; a <= S_; ++a)
                for (int y = 0; y <= S_; ++y)
                    for (int b = 0; b <= S_; ++b)
                        if (len_[a][y] < inf && edge[y][b]) len_[a][b] = std::min(len_[a][b], len_[a][y] + 1);
        inf_ = inf;
    }

    int cost(const Seq& seq) const { return search(seq, 0, 0, false); }

private:
    int search(const Seq& seq, std::size_t i, int anchor, bool pending) const
    {
        if (i == seq.size()) return 0;
        int best = 2 + search(seq, i + 1, anchor, true);
        if (i > 0 && seq[i] == seq[i - 1] && (pending || anchor > 0))
            best = std::min(best, search(seq, i + 1, anchor, pending));
        for (int x = 0; x < S_; ++x) {
            if (m_.states[x].observation != seq[i]) continue;
            if (!pending && anchor == x + 1) continue;
            const int d = len_[anchor][x + 1];
            const int step = d < inf_ ? d - 1 : 1;
            best = std::min(best, step + search(seq, i + 1, x + 1, false));
        }
        return best;
    }

    const TaskModel& m_;
    int S_;
    int inf_ = 0;
    std::vector<std::vector<int>> len_;
};

Seq random_seq(std::mt19937_64& rng, int max_len, int alphabet)
{
    std::uniform_int_distribution<int> len(1, max_len);
    std::uniform_int_distribution<int> sym(1, alphabet);
    Seq s(static_cast<std::size_t>(len(rng)));
    for (int& x : s) x = sym(rng);
    return s;
}

void check_stochastic(const TaskModel& m)
{
    double init = 0;
    for (std::size_t s = 0; s < m.size(); ++s) {
        init += m.initial_probability(static_cast<int>(s));
        if (m.out_total(static_cast<int>(s)) == 0) continue;
        double row = m.end_probability(static_cast<int>(s));
        for (std::size_t t = 0; t < m.size(); ++t) row += m.probability(static_cast<int>(s), static_cast<int>(t));
        CHECK(std::abs(row - 1.0) <= 1e-9);
    }
    CHECK(std::abs(init - 1.0) <= 1e-9);
}

// (from observation, to observation, probability) multiset
std::multiset<std::tuple<int, int, double>> structure(const TaskModel& m)
{
    std::multiset<std::tuple<int, int, double>> out;
    for (std::size_t a = 0; a < m.size(); ++a)
        for (std::size_t b = 0; b < m.size(); ++b)
            if (m.transitions[a][b] > 0)
                out.insert({m.states[a].observation, m.states[b].observation,
                            std::round(m.probability(static_cast<int>(a), static_cast<int>(b)) * 1e9) / 1e9});
    return out;
}

}  // namespace

TEST_SUITE("taskmodel")
{
    TEST_CASE("baseline from one prototype is a chain")
    {
        const auto m = chain({{1, 2, 6}});
        REQUIRE(m.size() == 3);
        CHECK(m.states[0].observation == 1);
        CHECK(m.states[2].observation == 6);
        CHECK(m.transitions[0][1] == 1);
        CHECK(m.transitions[1][2] == 1);
        CHECK(m.initial_counts[0] == 1);
        CHECK(m.end_counts[2] == 1);
        CHECK(m.integrated_count == 1);
    }

    TEST_CASE("consecutive duplicates collapse to a self-transition")
    {
        const auto m = chain({{6, 6, 3}});
        REQUIRE(m.size() == 2);
        CHECK(m.states[0].observation == 6);
        CHECK(m.states[1].observation == 3);
        CHECK(m.transitions[0][0] == 1);
        CHECK(m.transitions[0][1] == 1);
    }

    TEST_CASE("two identical prototypes double every count")
    {
        const auto one = chain({{1, 2, 6}});
        const auto two = chain({{1, 2, 6}, {1, 2, 6}});
        REQUIRE(two.size() == one.size());
        for (std::size_t a = 0; a < one.size(); ++a) {
            CHECK(two.initial_counts[a] == 2 * one.initial_counts[a]);
            CHECK(two.end_counts[a] == 2 * one.end_counts[a]);
            for (std::size_t b = 0; b < one.size(); ++b) CHECK(two.transitions[a][b] == 2 * one.transitions[a][b]);
        }
        CHECK(two.integrated_count == 2);
    }

    TEST_CASE("alignment examples")
    {
        const auto m = chain({{1, 2, 6}});
        const Seq same{1, 2, 6};
        const auto a = align(m, same);
        CHECK(a.cost == 0);
        CHECK(a.count(AlignOp::Match) == 3);

        const Seq gap{1, 6};
        const auto b = align(m, gap);
        CHECK(b.cost == 1);
        CHECK(b.count(AlignOp::Skip) == 1);
        CHECK(b.steps[1].skipped == 1);

        const Seq unseen{1, 2, 9, 6};
        const auto c = align(m, unseen);
        CHECK(c.cost == 2);
        CHECK(c.count(AlignOp::New) == 1);
        CHECK(c.steps[2].op == AlignOp::New);

        const Seq back{1, 2, 6, 2};
        const auto d = align(m, back);
        CHECK(d.cost == 1);
        CHECK(d.steps[3].op == AlignOp::Jump);
        CHECK(d.steps[3].state == 1);

        CHECK(align(m, Seq{}).steps.empty());
        CHECK(to_string(AlignOp::Skip) == "skip");
    }

    TEST_CASE("integration arithmetic")
    {
        auto m = chain({{1, 2, 6}});
        m = integrate(m, Seq{1, 2, 6});
        CHECK(m.size() == 3);
        CHECK(m.probability(0, 1) == 1.0);
        CHECK(m.probability(1, 2) == 1.0);
        m = integrate(m, Seq{1, 6});
        CHECK(m.probability(0, 1) == doctest::Approx(2.0 / 3.0));
        CHECK(m.probability(0, 2) == doctest::Approx(1.0 / 3.0));
        CHECK(m.integrated_count == 3);

        const auto fresh = integrate(chain({{1, 2}}), Seq{7, 8, 8, 9});
        CHECK(fresh.size() == 2 + 3);
        CHECK_THROWS_AS(integrate(m, Seq{}), EmptyInputError);
        CHECK_THROWS_AS(build_baseline(std::span<const Seq>{}), EmptyInputError);
    }

    TEST_CASE("alignment cost equals the exhaustive minimum")
    {
        std::mt19937_64 rng(31);
        for (int round = 0; round < 400; ++round) {
            TaskModel m = chain({random_seq(rng, 6, 4)});
            const int extra = static_cast<int>(rng() % 3);
            for (int k = 0; k < extra; ++k) m = integrate(m, random_seq(rng, 5, 5));
            const Seq probe = random_seq(rng, 6, 5);
            const auto al = align(m, probe);
            CHECK(al.cost == BruteAligner(m).cost(probe));
            int sum = 0;
            for (std::size_t i = 0; i < al.steps.size(); ++i) {
                CHECK(al.steps[i].position == i);
                sum += al.steps[i].cost;
            }
            CHECK(sum == al.cost);
            CHECK(al.cost <= 2 * static_cast<int>(probe.size()));
        }
    }

    TEST_CASE("model invariants under random integration")
    {
        std::mt19937_64 rng(2);
        for (int round = 0; round < 200; ++round) {
            const Seq first = random_seq(rng, 8, 5);
            TaskModel m = chain({first});
            CHECK(align(m, first).cost == 0);
            for (int k = 0; k < 6; ++k) {
                const TaskModel before = m;
                m = integrate(m, random_seq(rng, 8, 6));
                CHECK(m.integrated_count == before.integrated_count + 1);
                for (std::size_t a = 0; a < before.size(); ++a) {
                    CHECK(m.initial_counts[a] >= before.initial_counts[a]);
                    for (std::size_t b = 0; b < before.size(); ++b)
                        CHECK(m.transitions[a][b] >= before.transitions[a][b]);
                }
                check_stochastic(m);
            }
            for (std::size_t s = 0; s < m.size(); ++s) {
                long long in = m.initial_counts[s];
                for (std::size_t a = 0; a < m.size(); ++a) in += m.transitions[a][s];
                CHECK(in > 0);
            }
        }
    }

    TEST_CASE("integration order does not matter without new states")
    {
        const Seq base{1, 2, 6, 3, 7};
        std::vector<Seq> extra{{1, 6, 3, 7}, {1, 2, 3}, {2, 6, 7}, {1, 2, 6, 3, 7}};
        std::sort(extra.begin(), extra.end());
        std::multiset<std::tuple<int, int, double>> reference;
        bool first = true;
        do {
            TaskModel m = chain({base});
            for (const auto& e : extra) m = integrate(m, e);
            CHECK(m.size() == base.size());
            if (first) {
                reference = structure(m);
                first = false;
            } else {
                CHECK(structure(m) == reference);
            }
        } while (std::next_permutation(extra.begin(), extra.end()));
    }

    TEST_CASE("export")
    {
        const auto m = chain({{1, 2, 6}});
        const auto dot = model_to_dot(m);
        CHECK(std::count(dot.begin(), dot.end(), '\n') == 4 + 3 + 2);
        CHECK(dot.find("s0 -> s1 [label=\"1\"") != std::string::npos);
        CHECK(dot.find("s1 -> s2 [label=\"1\"") != std::string::npos);

        const auto loop = model_to_dot(chain({{6, 6, 3}}));
        CHECK(loop.find("s0 -> s0") != std::string::npos);

        auto big = chain({{1, 2, 6, 3}, {1, 6, 6, 3, 2}});
        big = integrate(big, Seq{4, 1, 2});
        CHECK(model_from_json(model_to_json(big)) == big);
        CHECK_THROWS_AS(model_from_json("{\"states\": 3}"), SchemaError);

        const auto mass = node_mass(m);
        CHECK(mass[0].in == 1.0);
        CHECK(mass[0].out == 1.0);
        CHECK(mass[2].out == 0.0);
    }
}
