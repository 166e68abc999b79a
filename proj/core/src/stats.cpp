#include "opskill/stats.hpp"

#include "opskill/error.hpp"
#include "opskill/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace opskill {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double population_std(std::span<const double> v, double mean)
{
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

double trend(std::span<const double> values)
{
    if (values.size() < 2) throw DegenerateError("trend needs at least two trials");
    const double m = mean_of(values);
    if (m == 0.0) throw DegenerateError("trend undefined for a zero mean");
    double s = 0.0;
    for (std::size_t n = 1; n < values.size(); ++n) s += (values[n] - values[n - 1]) / m;
    return 100.0 * s;
}

DeviationReport deviations(const std::map<std::string, std::vector<double>>& values)
{
    if (values.empty()) throw DegenerateError("deviations need at least one user");
    DeviationReport out;
    std::vector<double> means;
    for (const auto& [user, v] : values) {
        if (v.empty()) throw DegenerateError("user '" + user + "' has no values");
        const double m = mean_of(v);
        if (m == 0.0) throw DegenerateError("user '" + user + "' has a zero mean");
        out.intra_by_user[user] = population_std(v, m) / std::abs(m);
        means.push_back(m);
    }
    const double grand = mean_of(means);
    if (grand == 0.0) throw DegenerateError("grand mean is zero");
    out.inter = population_std(means, grand) / std::abs(grand);
    return out;
}

std::vector<double> average_ranks(std::span<const double> v)
{
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
        // positions i..j-1 hold ranks i+1..j
        const double avg = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
        i = j;
    }
    return ranks;
}

double pearson(std::span<const double> f, std::span<const double> l)
{
    if (f.size() != l.size()) throw DegenerateError("correlation needs equal-length vectors");
    if (f.size() < 3) throw DegenerateError("correlation needs at least three values");
    const double mf = mean_of(f);
    const double ml = mean_of(l);
    double cov = 0.0;
    double vf = 0.0;
    double vl = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double a = f[i] - mf;
        const double b = l[i] - ml;
        cov += a * b;
        vf += a * a;
        vl += b * b;
    }
    if (vf == 0.0 || vl == 0.0) throw DegenerateError("correlation undefined for a constant vector");
    return std::clamp(cov / std::sqrt(vf * vl), -1.0, 1.0);
}

double spearman(std::span<const double> f, std::span<const double> l)
{
    if (f.size() != l.size()) throw DegenerateError("correlation needs equal-length vectors");
    const auto rf = average_ranks(f);
    const auto rl = average_ranks(l);
    return pearson(rf, rl);
}

// ---------------------------------------------------------------------------

std::size_t FeatureTable::column(std::string_view name) const
{
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw ConfigError("feature '" + std::string(name) + "' not in table");
}

FeatureTable build_feature_table(const std::map<TrialKey, std::vector<FeatureVector>>& units,
                                 const std::vector<std::string>& names)
{
    FeatureTable table;
    table.names = names;
    std::vector<const FeatureDef*> defs;
    for (const auto& n : names) defs.push_back(&feature_def(n));
    for (const auto& [key, vecs] : units) {
        table.trials.push_back(key);
        std::vector<double> row;
        row.reserve(defs.size());
        for (const FeatureDef* d : defs) row.push_back(trial_feature_value(*d, vecs));
        table.values.push_back(std::move(row));
    }
    return table;
}

namespace {

using GroupKey = std::pair<std::string, std::string>;  // (user, task)

// Row indices of each (user, task), ordered by trial index.
std::map<GroupKey, std::vector<std::size_t>> groups_of(const FeatureTable& table)
{
    std::map<GroupKey, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < table.trials.size(); ++i)
        groups[{table.trials[i].user_id, table.trials[i].task_id}].push_back(i);
    for (auto& [key, rows] : groups) {
        std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
            return table.trials[a].trial_index < table.trials[b].trial_index;
        });
    }
    return groups;
}

void sort_by_strength(std::vector<CorrelationResult>& rows)
{
    std::stable_sort(rows.begin(), rows.end(), [](const CorrelationResult& a, const CorrelationResult& b) {
        if (a.degenerate != b.degenerate) return !a.degenerate;
        if (a.degenerate) return false;
        return std::abs(a.R) > std::abs(b.R);
    });
}

}  // namespace

std::vector<CorrelationResult> skill_correlation_table(const FeatureTable& table, SkillPooling pooling)
{
    const auto groups = groups_of(table);
    std::vector<CorrelationResult> out;
    for (std::size_t c = 0; c < table.names.size(); ++c) {
        CorrelationResult res{table.names[c], kNaN, CorrelationKind::SpearmanToSkill, 0, true};
        if (pooling == SkillPooling::WithinUserAverage) {
            double sum = 0.0;
            for (const auto& [key, rows] : groups) {
                if (rows.size() < 3) continue;
                std::vector<double> f;
                std::vector<double> l;
                for (std::size_t r : rows) {
                    f.push_back(table.values[r][c]);
                    l.push_back(static_cast<double>(table.trials[r].trial_index));
                }
                try {
                    sum += spearman(f, l);
                    ++res.groups;
                } catch (const DegenerateError&) {
                }
            }
            if (res.groups > 0) {
                res.R = sum / res.groups;
                res.degenerate = false;
            }
        } else {
            std::vector<double> f;
            std::vector<double> l;
            for (std::size_t r = 0; r < table.trials.size(); ++r) {
                f.push_back(table.values[r][c]);
                l.push_back(static_cast<double>(table.trials[r].trial_index));
            }
            try {
                res.R = spearman(f, l);
                res.groups = static_cast<int>(groups.size());
                res.degenerate = false;
            } catch (const DegenerateError&) {
            }
        }
        out.push_back(std::move(res));
    }
    sort_by_strength(out);
    return out;
}

std::vector<CorrelationResult> difficulty_correlation_table(std::span<const FeatureVector> units,
                                                            std::span<const TrialRecord* const> trials,
                                                            const std::vector<std::string>& names)
{
    std::map<int, std::pair<double, int>> difficulty;  // step -> (sum, count)
    for (const TrialRecord* t : trials) {
        for (const auto& q : t->ratings) {
            auto& [s, n] = difficulty[q.step_index];
            s += q.score;
            ++n;
        }
    }
    if (difficulty.empty()) throw MissingRatingsError("no difficulty ratings in the selected trials");

    std::map<int, std::vector<const FeatureVector*>> at_step;
    for (const auto& u : units)
        if (difficulty.count(u.hotspot_id)) at_step[u.hotspot_id].push_back(&u);

    std::vector<double> level;
    for (const auto& [step, vecs] : at_step) {
        const auto& [s, n] = difficulty.at(step);
        level.push_back(s / n);
    }

    std::vector<CorrelationResult> out;
    for (const auto& name : names) {
        const FeatureDef& def = feature_def(name);
        std::vector<double> f;
        for (const auto& [step, vecs] : at_step) {
            double s = 0.0;
            for (const FeatureVector* v : vecs) s += def.get(*v);
            f.push_back(s / static_cast<double>(vecs.size()));
        }
        CorrelationResult res{name, kNaN, CorrelationKind::PearsonToDifficulty,
                              static_cast<int>(f.size()), true};
        try {
            res.R = pearson(f, level);
            res.degenerate = false;
        } catch (const DegenerateError&) {
        }
        out.push_back(std::move(res));
    }
    sort_by_strength(out);
    return out;
}

std::vector<TrendRow> trend_table(const FeatureTable& table)
{
    const auto groups = groups_of(table);
    std::set<std::string> tasks;
    for (const auto& t : table.trials) tasks.insert(t.task_id);

    std::vector<TrendRow> out;
    for (std::size_t c = 0; c < table.names.size(); ++c) {
        std::map<std::string, std::pair<double, int>> acc;
        for (const auto& [key, rows] : groups) {
            std::vector<double> v;
            for (std::size_t r : rows) v.push_back(table.values[r][c]);
            try {
                const double d = trend(v);
                acc[key.second].first += d;
                ++acc[key.second].second;
                acc["all"].first += d;
                ++acc["all"].second;
            } catch (const DegenerateError&) {
            }
        }
        auto emit = [&](const std::string& scope) {
            const auto it = acc.find(scope);
            const int n = it == acc.end() ? 0 : it->second.second;
            out.push_back({table.names[c], scope, n ? it->second.first / n : kNaN, n});
        };
        for (const auto& task : tasks) emit(task);
        emit("all");
    }
    return out;
}

std::vector<DeviationRow> deviation_table(const FeatureTable& table)
{
    std::set<std::string> tasks;
    for (const auto& t : table.trials) tasks.insert(t.task_id);
    std::vector<std::string> scopes(tasks.begin(), tasks.end());
    scopes.push_back("all");

    std::vector<DeviationRow> out;
    for (std::size_t c = 0; c < table.names.size(); ++c) {
        for (const auto& scope : scopes) {
            std::map<std::string, std::vector<double>> by_user;
            for (std::size_t r = 0; r < table.trials.size(); ++r) {
                if (scope != "all" && table.trials[r].task_id != scope) continue;
                by_user[table.trials[r].user_id].push_back(table.values[r][c]);
            }
            DeviationRow row{table.names[c], scope, kNaN, kNaN};
            try {
                const auto rep = deviations(by_user);
                double s = 0.0;
                for (const auto& [u, v] : rep.intra_by_user) s += v;
                row.mean_intra = s / static_cast<double>(rep.intra_by_user.size());
                row.inter = rep.inter;
            } catch (const DegenerateError&) {
            }
            out.push_back(std::move(row));
        }
    }
    return out;
}

std::string correlation_csv(std::span<const CorrelationResult> rows)
{
    std::ostringstream os;
    os << "feature,kind,R,groups,status\n";
    for (const auto& r : rows) {
        os << csv_field(r.feature) << ','
           << (r.kind == CorrelationKind::SpearmanToSkill ? "spearman-to-skill" : "pearson-to-difficulty") << ','
           << format_number(r.R) << ',' << r.groups << ',' << (r.degenerate ? "degenerate" : "ok") << '\n';
    }
    return os.str();
}

std::string trend_csv(std::span<const TrendRow> rows)
{
    std::ostringstream os;
    os << "feature,scope,mean_trend_percent,users\n";
    for (const auto& r : rows)
        os << csv_field(r.feature) << ',' << csv_field(r.scope) << ',' << format_number(r.mean_trend_percent) << ','
           << r.users << '\n';
    return os.str();
}

std::string deviation_csv(std::span<const DeviationRow> rows)
{
    std::ostringstream os;
    os << "feature,scope,mean_intra,inter\n";
    for (const auto& r : rows)
        os << csv_field(r.feature) << ',' << csv_field(r.scope) << ',' << format_number(r.mean_intra) << ','
           << format_number(r.inter) << '\n';
    return os.str();
}

}  // namespace opskill
