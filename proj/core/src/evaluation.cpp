#include "opskill/evaluation.hpp"

#include "opskill/error.hpp"
#include "opskill/text.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace opskill {

void ManualSpec::check() const
{
    if (variants.empty()) throw ConfigError("manual for task '" + task_id + "' has no variants");
    if (dof != static_cast<int>(variants.size()))
        throw ConfigError("manual for task '" + task_id + "': dof must equal the number of variants");
    for (const auto& v : variants)
        if (v.empty()) throw ConfigError("manual for task '" + task_id + "' has an empty variant");
}

ManualSpec expand_manual(std::string task_id, const std::vector<std::vector<int>>& groups)
{
    std::vector<std::vector<int>> variants{{}};
    for (const auto& group : groups) {
        std::vector<std::vector<int>> perms;
        std::vector<int> g = group;
        perms.push_back(g);
        // Remaining orderings in lexicographic order after the written one.
        std::vector<int> sorted = g;
        std::sort(sorted.begin(), sorted.end());
        do {
            if (sorted != g) perms.push_back(sorted);
        } while (std::next_permutation(sorted.begin(), sorted.end()));

        std::vector<std::vector<int>> next;
        for (const auto& prefix : variants) {
            for (const auto& p : perms) {
                auto v = prefix;
                v.insert(v.end(), p.begin(), p.end());
                next.push_back(std::move(v));
            }
        }
        variants = std::move(next);
    }
    ManualSpec m{std::move(task_id), std::move(variants), 0};
    m.dof = static_cast<int>(m.variants.size());
    return m;
}

std::size_t multiset_intersection(std::span<const int> a, std::span<const int> b)
{
    std::vector<int> x(a.begin(), a.end());
    std::vector<int> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::vector<int> common;
    std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(common));
    return common.size();
}

std::size_t lcs_length(std::span<const int> a, std::span<const int> b)
{
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

ScoreTriple fscore(std::span<const int> selected, const ManualSpec& manual, MatchMode mode)
{
    if (selected.empty()) throw EmptySelectionError("cannot score an empty selection");
    manual.check();
    ScoreTriple best;
    bool first = true;
    for (const auto& variant : manual.variants) {
        const std::size_t hit =
            mode == MatchMode::Multiset ? multiset_intersection(selected, variant) : lcs_length(selected, variant);
        ScoreTriple s;
        s.recall = static_cast<double>(hit) / static_cast<double>(variant.size());
        s.precision = static_cast<double>(hit) / static_cast<double>(selected.size());
        s.fscore = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        if (first || s.fscore > best.fscore) best = s;
        first = false;
    }
    return best;
}

std::vector<MethodSpec> method_grid()
{
    std::vector<MethodSpec> grid;
    for (int k : {3, 5, 7})
        for (HotspotMode mode : {HotspotMode::All, HotspotMode::Difficult})
            for (bool global : {false, true}) grid.push_back({mode, k, global});
    return grid;
}

std::string method_label(const MethodSpec& m)
{
    std::string s = m.mode == HotspotMode::All ? "AL" : "DF";
    if (m.global) s += "+GB";
    return s + "(" + std::to_string(m.k) + ")";
}

std::vector<std::string> top_k_features(std::span<const CorrelationResult> table, int k)
{
    std::vector<std::string> out;
    for (const auto& r : table) {
        if (static_cast<int>(out.size()) >= k) break;
        if (!r.degenerate) out.push_back(r.feature);
    }
    return out;
}

PrototypeConfig method_config(const PrototypeConfig& base, const MethodSpec& method, const TaskInputs& task)
{
    PrototypeConfig c = base;
    c.hotspot_mode = method.mode;
    c.use_global = method.global;
    c.feature_set = top_k_features(task.skill_table, method.k);
    c.weights.clear();
    return c;
}

std::vector<MethodRow> evaluate_methods(std::span<const TaskInputs> tasks,
                                        const std::map<std::string, ManualSpec>& manuals,
                                        std::span<const MethodSpec> grid, const PrototypeConfig& base,
                                        MatchMode mode)
{
    if (grid.empty()) throw ConfigError("method grid is empty");
    std::vector<MethodRow> rows;
    for (const auto& method : grid) {
        MethodRow row;
        row.label = method_label(method);
        for (const auto& task : tasks) {
            auto manual = manuals.find(task.task_id);
            if (manual == manuals.end()) throw ConfigError("no manual for task '" + task.task_id + "'");
            const auto config = method_config(base, method, task);
            const auto result = select_prototypes(task.experiences, config, task.skill_table, task.difficult);
            for (std::size_t j : result.selected) {
                const auto& e = task.experiences[j];
                row.selections.push_back(
                    {task.task_id, e.trial, e.hotspot_sequence, fscore(e.hotspot_sequence, manual->second, mode)});
            }
        }
        for (const auto& s : row.selections) {
            row.mean.recall += s.score.recall;
            row.mean.precision += s.score.precision;
            row.mean.fscore += s.score.fscore;
        }
        if (!row.selections.empty()) {
            const auto n = static_cast<double>(row.selections.size());
            row.mean.recall /= n;
            row.mean.precision /= n;
            row.mean.fscore /= n;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string join(std::span<const int> v, const char* sep)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += std::to_string(v[i]);
    }
    return s;
}

}  // namespace

std::string evaluation_csv(std::span<const MethodRow> rows)
{
    std::ostringstream os;
    os << "method,R,P,F\n";
    for (const auto& r : rows)
        os << r.label << ',' << format_number(r.mean.recall) << ',' << format_number(r.mean.precision) << ','
           << format_number(r.mean.fscore) << '\n';
    return os.str();
}

std::string evaluation_detail_csv(std::span<const MethodRow> rows)
{
    std::ostringstream os;
    os << "method,task_id,user_id,trial_index,sequence,R,P,F\n";
    for (const auto& r : rows) {
        for (const auto& s : r.selections) {
            os << r.label << ',' << csv_field(s.task_id) << ',' << csv_field(s.trial.user_id) << ','
               << s.trial.trial_index << ',' << join(s.sequence, " ") << ',' << format_number(s.score.recall)
               << ',' << format_number(s.score.precision) << ',' << format_number(s.score.fscore) << '\n';
        }
    }
    return os.str();
}

std::string evaluation_markdown(std::span<const MethodRow> rows)
{
    std::ostringstream os;
    os << "| Method | Selected steps | R | P | F |\n";
    os << "|---|---|---|---|---|\n";
    char buf[32];
    for (const auto& r : rows) {
        std::string steps;
        for (const auto& s : r.selections) {
            if (!steps.empty()) steps += "<br>";
            steps += "T" + s.task_id + ": " + join(s.sequence, " ");
        }
        os << "| " << r.label << " | " << steps << " | ";
        std::snprintf(buf, sizeof buf, "%.3f", r.mean.recall);
        os << buf << " | ";
        std::snprintf(buf, sizeof buf, "%.3f", r.mean.precision);
        os << buf << " | ";
        std::snprintf(buf, sizeof buf, "%.3f", r.mean.fscore);
        os << buf << " |\n";
    }
    return os.str();
}

namespace {

ManualSpec manual_from(const nlohmann::json& j)
{
    std::string task = j.at("task_id").is_string() ? j.at("task_id").get<std::string>()
                                                   : std::to_string(j.at("task_id").get<long long>());
    ManualSpec m;
    if (j.contains("variants")) {
        m.task_id = task;
        m.variants = j.at("variants").get<std::vector<std::vector<int>>>();
        m.dof = j.value("dof", static_cast<int>(m.variants.size()));
    } else {
        m = expand_manual(task, j.at("groups").get<std::vector<std::vector<int>>>());
    }
    m.check();
    return m;
}

}  // namespace

std::map<std::string, ManualSpec> manuals_from_json(std::string_view document)
{
    using nlohmann::json;
    std::map<std::string, ManualSpec> out;
    try {
        const json doc = json::parse(document);
        const json list = doc.is_array() ? doc : (doc.contains("manuals") ? doc.at("manuals") : json::array({doc}));
        for (const auto& j : list) {
            auto m = manual_from(j);
            out[m.task_id] = std::move(m);
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("manual: ") + e.what());
    }
    return out;
}

std::string manuals_to_json(const std::map<std::string, ManualSpec>& manuals)
{
    using nlohmann::json;
    json list = json::array();
    for (const auto& [id, m] : manuals) list.push_back({{"task_id", m.task_id}, {"variants", m.variants}, {"dof", m.dof}});
    return list.dump(2);
}

}  // namespace opskill
