#include "opskill/prototype.hpp"

#include "opskill/error.hpp"
#include "opskill/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace opskill {

void PrototypeConfig::check() const
{
    if (feature_set.empty()) throw ConfigError("prototype feature_set must name at least one feature");
    if (!weights.empty()) {
        if (weights.size() != feature_set.size()) throw ConfigError("one weight per feature required");
        for (double w : weights)
            if (!(w > 0)) throw ConfigError("feature weights must be positive");
    }
    if (pool_size_n < 1) throw ConfigError("pool_size_n must be >= 1");
    if (select_q < 1) throw ConfigError("select_q must be >= 1");
    if (!(majority_threshold > 0 && majority_threshold < 1))
        throw ConfigError("majority_threshold must lie in (0, 1)");
}

namespace {

double mean_at(const Experience& e, int hotspot, const FeatureDef& def, bool& found)
{
    double s = 0.0;
    int n = 0;
    for (const auto& u : e.units) {
        if (u.hotspot_id != hotspot) continue;
        s += def.get(u);
        ++n;
    }
    found = n > 0;
    return n ? s / n : 0.0;
}

bool visits(const Experience& e, int hotspot)
{
    return std::any_of(e.units.begin(), e.units.end(),
                       [hotspot](const FeatureVector& u) { return u.hotspot_id == hotspot; });
}

// Best-first average ranks of `values` (smaller is better).
std::vector<double> ranks_smaller_better(const std::vector<double>& values) { return average_ranks(values); }

// Members best-first: by key ascending, then by experience index.
std::vector<std::size_t> best_first(const std::vector<double>& key, const std::vector<std::size_t>& ids)
{
    std::vector<std::size_t> pos(key.size());
    std::iota(pos.begin(), pos.end(), 0);
    std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
        if (key[a] != key[b]) return key[a] < key[b];
        return ids[a] < ids[b];
    });
    std::vector<std::size_t> out;
    out.reserve(pos.size());
    for (std::size_t p : pos) out.push_back(ids[p]);
    return out;
}

RankDirection direction_of(const CorrelationResult& r)
{
    return r.R < 0 ? RankDirection::Ascending : RankDirection::Descending;
}

const CorrelationResult& lookup(std::span<const CorrelationResult> table, const std::string& feature)
{
    for (const auto& r : table)
        if (r.feature == feature) {
            if (r.degenerate) throw ConfigError("feature '" + feature + "' has no usable skill correlation");
            return r;
        }
    throw ConfigError("feature '" + feature + "' missing from the correlation table");
}

}  // namespace

std::vector<ExperienceRank> rank_by_feature(std::span<const Experience> experiences, int hotspot,
                                            const std::string& feature, RankDirection direction)
{
    const FeatureDef& def = feature_def(feature);
    std::vector<std::size_t> members;
    std::vector<double> key;
    for (std::size_t j = 0; j < experiences.size(); ++j) {
        bool found = false;
        const double v = mean_at(experiences[j], hotspot, def, found);
        if (!found) continue;
        members.push_back(j);
        key.push_back(direction == RankDirection::Ascending ? v : -v);
    }
    if (members.empty()) throw NoOccurrenceError("no experience visits hotspot " + std::to_string(hotspot));
    const auto r = ranks_smaller_better(key);
    std::vector<ExperienceRank> out;
    for (std::size_t i = 0; i < members.size(); ++i) out.push_back({members[i], r[i]});
    return out;
}

std::vector<double> feature_weights(const PrototypeConfig& config,
                                    std::span<const CorrelationResult> correlation_table)
{
    std::vector<double> w;
    if (!config.weights.empty()) {
        w = config.weights;
    } else {
        for (const auto& f : config.feature_set) w.push_back(std::abs(lookup(correlation_table, f).R));
    }
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (sum > 0) {
        for (double& x : w) x /= sum;
    } else {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    }
    return w;
}

HotspotRegistry occurrence_registry(std::span<const Experience> experiences)
{
    std::map<int, int> counts;
    for (const auto& e : experiences) {
        std::set<int> seen(e.hotspot_sequence.begin(), e.hotspot_sequence.end());
        for (int h : seen) ++counts[h];
    }
    HotspotRegistry reg;
    reg.total_experiences = static_cast<int>(experiences.size());
    for (const auto& [id, n] : counts) {
        Hotspot h;
        h.id = id;
        h.occurrence_count = n;
        reg.hotspots.push_back(h);
    }
    return reg;
}

double unnecessary_ratio(const Experience& e, const HotspotRegistry& registry, double threshold)
{
    if (e.hotspot_sequence.empty()) return 0.0;
    const double cutoff = threshold * registry.total_experiences;
    std::size_t minority = 0;
    for (int id : e.hotspot_sequence) {
        const Hotspot* h = registry.find(id);
        const int count = h ? h->occurrence_count : 0;
        if (count < cutoff) ++minority;
    }
    return static_cast<double>(minority) / static_cast<double>(e.hotspot_sequence.size());
}

std::vector<double> representativeness(std::span<const Experience> experiences)
{
    if (experiences.size() < 2) throw InsufficientExperiencesError("representativeness needs at least two experiences");
    std::set<int> ids;
    for (const auto& e : experiences) ids.insert(e.hotspot_sequence.begin(), e.hotspot_sequence.end());
    const std::vector<int> dims(ids.begin(), ids.end());
    auto dim_of = [&](int id) {
        return static_cast<std::size_t>(std::lower_bound(dims.begin(), dims.end(), id) - dims.begin());
    };

    std::vector<std::vector<double>> bags(experiences.size(), std::vector<double>(dims.size(), 0.0));
    for (std::size_t j = 0; j < experiences.size(); ++j)
        for (int id : experiences[j].hotspot_sequence) bags[j][dim_of(id)] += 1.0;

    std::vector<double> center(dims.size(), 0.0);
    for (const auto& b : bags)
        for (std::size_t d = 0; d < dims.size(); ++d) center[d] += b[d];
    for (double& c : center) c /= static_cast<double>(bags.size());

    std::vector<double> out;
    for (const auto& b : bags) {
        double ss = 0.0;
        for (std::size_t d = 0; d < dims.size(); ++d) ss += (b[d] - center[d]) * (b[d] - center[d]);
        out.push_back(std::sqrt(ss));
    }
    return out;
}

std::vector<int> difficult_hotspots(std::span<const TrialRecord* const> trials, double threshold)
{
    std::map<int, std::pair<double, int>> acc;
    for (const TrialRecord* t : trials) {
        for (const auto& q : t->ratings) {
            acc[q.step_index].first += q.score;
            ++acc[q.step_index].second;
        }
    }
    if (acc.empty()) throw MissingRatingsError("no difficulty ratings available");
    std::vector<int> out;
    for (const auto& [step, sn] : acc)
        if (sn.first / sn.second >= threshold) out.push_back(step);
    return out;
}

SelectionResult select_prototypes(std::span<const Experience> experiences, const PrototypeConfig& config,
                                  std::span<const CorrelationResult> correlation_table,
                                  std::span<const int> difficult)
{
    config.check();
    const std::size_t n_exp = experiences.size();
    if (n_exp < static_cast<std::size_t>(config.select_q))
        throw InsufficientExperiencesError("need at least " + std::to_string(config.select_q) + " experiences, got " +
                                           std::to_string(n_exp));

    SelectionResult out;
    out.weights = feature_weights(config, correlation_table);
    std::vector<RankDirection> dirs;
    std::vector<const FeatureDef*> defs;
    for (const auto& f : config.feature_set) {
        defs.push_back(&feature_def(f));
        dirs.push_back(direction_of(lookup(correlation_table, f)));
    }

    std::set<int> present;
    for (const auto& e : experiences)
        for (const auto& u : e.units) present.insert(u.hotspot_id);
    if (config.hotspot_mode == HotspotMode::All) {
        out.voting_hotspots.assign(present.begin(), present.end());
    } else {
        std::set<int> wanted(difficult.begin(), difficult.end());
        for (int h : present)
            if (wanted.count(h)) out.voting_hotspots.push_back(h);
        if (out.voting_hotspots.empty())
            throw ConfigError("difficult-hotspot mode: none of the difficult hotspots occurs in these experiences");
    }

    const auto n = static_cast<std::size_t>(config.pool_size_n);
    out.occurrences.assign(n_exp, 0);
    auto vote = [&](const std::vector<std::size_t>& best) {
        for (std::size_t i = 0; i < std::min(n, best.size()); ++i) {
            out.pool.push_back(best[i]);
            ++out.occurrences[best[i]];
        }
    };

    std::vector<double> rank_sum(n_exp, 0.0);
    std::vector<int> rank_count(n_exp, 0);
    for (int h : out.voting_hotspots) {
        HotspotRanking hr;
        hr.hotspot = h;
        for (std::size_t j = 0; j < n_exp; ++j)
            if (visits(experiences[j], h)) hr.experiences.push_back(j);
        const std::size_t m = hr.experiences.size();
        hr.weighted_rank.assign(m, 0.0);
        for (std::size_t k = 0; k < defs.size(); ++k) {
            std::vector<double> key;
            for (std::size_t j : hr.experiences) {
                bool found = false;
                const double v = mean_at(experiences[j], h, *defs[k], found);
                key.push_back(dirs[k] == RankDirection::Ascending ? v : -v);
            }
            auto r = ranks_smaller_better(key);
            for (std::size_t i = 0; i < m; ++i) hr.weighted_rank[i] += out.weights[k] * r[i];
            hr.feature_ranks.push_back(std::move(r));
        }
        hr.rank = average_ranks(hr.weighted_rank);
        hr.order = best_first(hr.weighted_rank, hr.experiences);
        for (std::size_t i = 0; i < m; ++i) {
            rank_sum[hr.experiences[i]] += hr.rank[i];
            ++rank_count[hr.experiences[i]];
        }
        vote(hr.order);
        out.rank_table.push_back(std::move(hr));
    }

    if (config.use_global) {
        std::vector<std::size_t> all(n_exp);
        std::iota(all.begin(), all.end(), 0);
        const auto registry = occurrence_registry(experiences);
        std::vector<double> ratio;
        for (const auto& e : experiences) ratio.push_back(unnecessary_ratio(e, registry, config.majority_threshold));
        vote(best_first(ratio, all));
        if (n_exp >= 2) vote(best_first(representativeness(experiences), all));
    }

    std::vector<std::size_t> support;
    for (std::size_t j = 0; j < n_exp; ++j)
        if (out.occurrences[j] > 0) support.push_back(j);
    const double inf = std::numeric_limits<double>::infinity();
    auto mean_rank = [&](std::size_t j) { return rank_count[j] ? rank_sum[j] / rank_count[j] : inf; };
    std::sort(support.begin(), support.end(), [&](std::size_t a, std::size_t b) {
        if (out.occurrences[a] != out.occurrences[b]) return out.occurrences[a] > out.occurrences[b];
        const double ma = mean_rank(a);
        const double mb = mean_rank(b);
        if (ma != mb) return ma < mb;
        return a < b;
    });
    support.resize(std::min(support.size(), static_cast<std::size_t>(config.select_q)));
    out.selected = std::move(support);
    return out;
}

std::string method_label(const PrototypeConfig& config)
{
    std::string s = config.hotspot_mode == HotspotMode::All ? "AL" : "DF";
    if (config.use_global) s += "+GB";
    return s + "(" + std::to_string(config.feature_set.size()) + ")";
}

std::string rank_table_csv(std::span<const Experience> experiences, const SelectionResult& result,
                           const PrototypeConfig& config)
{
    std::ostringstream os;
    os << "hotspot,user_id,task_id,trial_index";
    for (const auto& f : config.feature_set) os << ",rank_" << f;
    os << ",weighted_rank,hotspot_rank\n";
    for (const auto& hr : result.rank_table) {
        for (std::size_t i = 0; i < hr.experiences.size(); ++i) {
            const auto& key = experiences[hr.experiences[i]].trial;
            os << hr.hotspot << ',' << csv_field(key.user_id) << ',' << csv_field(key.task_id) << ','
               << key.trial_index;
            for (const auto& fr : hr.feature_ranks) os << ',' << format_number(fr[i]);
            os << ',' << format_number(hr.weighted_rank[i]) << ',' << format_number(hr.rank[i]) << '\n';
        }
    }
    return os.str();
}

}  // namespace opskill
