#include "commands.hpp"

#include "opskill/error.hpp"
#include "opskill/pipeline.hpp"
#include "opskill/text.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace opskill::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kHeatCellPx = 40.0;

struct Context {
    PipelineConfig config;
    fs::path out;
    std::string format;
};

Context make_context(const Options& o, std::initializer_list<const char*> formats)
{
    Context ctx;
    if (!o.config.empty()) ctx.config = config_from_json(read_text_file(o.config));
    if (!o.data.empty()) ctx.config.data = o.data;
    if (!o.out.empty()) ctx.config.out = o.out;
    if (o.seed) ctx.config.synth.seed = *o.seed;
    if (ctx.config.out.empty()) ctx.config.out = "out";
    ctx.config.check();
    ctx.out = ctx.config.out;

    ctx.format = o.format.empty() ? *formats.begin() : o.format;
    bool known = false;
    for (const char* f : formats) known = known || ctx.format == f;
    if (!known) throw UsageError("--format " + ctx.format + " is not available for this command");
    return ctx;
}

SessionSet load(const Context& ctx)
{
    if (ctx.config.data.empty()) throw UsageError("--data (or \"data\" in the config) is required");
    const auto paths = resolve_dataset_paths(ctx.config.data);
    return load_dataset(paths, ctx.config.map);
}

void emit(const Context& ctx, const std::string& name, const std::string& contents)
{
    fs::create_directories(ctx.out);
    const fs::path path = ctx.out / name;
    write_file_atomic(path, contents);
    std::cout << path.string() << '\n';
}

std::string join(const std::vector<int>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(v[i]);
    }
    return s;
}

std::string key_fields(const TrialKey& k)
{
    return csv_field(k.user_id) + ',' + csv_field(k.task_id) + ',' + std::to_string(k.trial_index);
}

json key_json(const TrialKey& k)
{
    return {{"user_id", k.user_id}, {"task_id", k.task_id}, {"trial_index", k.trial_index}};
}

// --- individual stages, shared by the single commands and `report` ---------

void write_hotspots(const Context& ctx, const Analysis& an)
{
    if (ctx.format == "json") {
        emit(ctx, "hotspots.json", registry_to_json(an.registry));
        return;
    }
    std::ostringstream os;
    os << "id,x,y,radius,occurrences\n";
    for (const auto& h : an.registry.hotspots)
        os << h.id << ',' << format_number(h.centroid_x) << ',' << format_number(h.centroid_y) << ','
           << format_number(h.radius) << ',' << h.occurrence_count << '\n';
    emit(ctx, "hotspots.csv", os.str());
}

void write_units(const Context& ctx, const Analysis& an)
{
    if (ctx.format == "json") {
        json list = json::array();
        for (const auto& [key, units] : an.units) {
            for (std::size_t i = 0; i < units.size(); ++i) {
                const auto& u = units[i];
                json j = key_json(key);
                j["step"] = i;
                j["hotspot"] = u.hotspot_id;
                j["g"] = {u.g.start, u.g.end};
                j["a"] = {u.a.start, u.a.end};
                j["o"] = {u.o.start, u.o.end};
                list.push_back(std::move(j));
            }
        }
        emit(ctx, "units.json", list.dump(2));
        return;
    }
    std::ostringstream os;
    os << "user_id,task_id,trial_index,step,hotspot,g_start,g_end,a_start,a_end,o_start,o_end\n";
    for (const auto& [key, units] : an.units) {
        for (std::size_t i = 0; i < units.size(); ++i) {
            const auto& u = units[i];
            os << key_fields(key) << ',' << i << ',' << u.hotspot_id;
            for (const Interval* iv : {&u.g, &u.a, &u.o})
                os << ',' << format_number(iv->start) << ',' << format_number(iv->end);
            os << '\n';
        }
    }
    emit(ctx, "units.csv", os.str());
}

void write_features(const Context& ctx, const Analysis& an)
{
    std::vector<FeatureVector> all;
    for (const auto& [key, vecs] : an.features) all.insert(all.end(), vecs.begin(), vecs.end());
    emit(ctx, "features.csv", features_csv(all));

    std::ostringstream gh;
    gh << "user_id,task_id,trial_index,r_x,r_y\n";
    for (const auto& t : an.labeled.trials) {
        AxisCorrelation r{std::nan(""), std::nan("")};
        try {
            r = gaze_head_correlation(t);
        } catch (const InsufficientDataError&) {
        }
        gh << key_fields(t.key()) << ',' << format_number(r.r_x) << ',' << format_number(r.r_y) << '\n';
    }
    emit(ctx, "gaze_head.csv", gh.str());

    const auto grid = gaze_heat_grid(an.labeled.trials, {}, kHeatCellPx, ctx.config.map);
    emit(ctx, "heat_grid.csv", heat_grid_csv(grid));
}

void write_stats(const Context& ctx, const Analysis& an)
{
    emit(ctx, "skill_correlation.csv", correlation_csv(skill_correlation_table(an.table, ctx.config.pooling)));
    emit(ctx, "trends.csv", trend_csv(trend_table(an.table)));
    emit(ctx, "deviations.csv", deviation_csv(deviation_table(an.table)));
    for (const auto& task : an.tasks) {
        std::vector<FeatureVector> units;
        for (const auto& [key, vecs] : an.features)
            if (key.task_id == task.task_id) units.insert(units.end(), vecs.begin(), vecs.end());
        try {
            const auto rows =
                difficulty_correlation_table(units, trials_of_task(an.labeled, task.task_id), feature_names());
            emit(ctx, "difficulty_correlation_t" + task.task_id + ".csv", correlation_csv(rows));
        } catch (const MissingRatingsError&) {
            std::cerr << "task " << task.task_id << ": no difficulty ratings, skipping difficulty correlation\n";
        }
    }
}

void write_ranks(const Context& ctx, const std::vector<TaskResult>& results, const Analysis& an)
{
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        emit(ctx, "rank_t" + r.task_id + ".csv", rank_table_csv(an.tasks[i].experiences, r.selection, r.config));
    }
}

void write_prototypes(const Context& ctx, const std::vector<TaskResult>& results, const Analysis& an)
{
    if (ctx.format == "json") {
        json list = json::array();
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            json sel = json::array();
            for (std::size_t rank = 0; rank < r.selection.selected.size(); ++rank) {
                const auto& e = an.tasks[i].experiences[r.selection.selected[rank]];
                json j = key_json(e.trial);
                j["rank"] = rank + 1;
                j["occurrences"] = r.selection.occurrences[r.selection.selected[rank]];
                j["sequence"] = e.hotspot_sequence;
                sel.push_back(std::move(j));
            }
            list.push_back({{"task_id", r.task_id},
                            {"method", method_label(r.config)},
                            {"features", r.config.feature_set},
                            {"weights", r.selection.weights},
                            {"selected", std::move(sel)}});
        }
        emit(ctx, "prototypes.json", list.dump(2));
        return;
    }
    std::ostringstream os;
    os << "task_id,method,rank,user_id,trial_index,occurrences,sequence\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        for (std::size_t rank = 0; rank < r.selection.selected.size(); ++rank) {
            const std::size_t j = r.selection.selected[rank];
            const auto& e = an.tasks[i].experiences[j];
            os << csv_field(r.task_id) << ',' << method_label(r.config) << ',' << rank + 1 << ','
               << csv_field(e.trial.user_id) << ',' << e.trial.trial_index << ',' << r.selection.occurrences[j]
               << ',' << join(e.hotspot_sequence) << '\n';
        }
    }
    emit(ctx, "prototypes.csv", os.str());
}

void write_models(const Context& ctx, const std::vector<TaskResult>& results)
{
    for (const auto& r : results) {
        if (ctx.format == "json") emit(ctx, "model_t" + r.task_id + ".json", model_to_json(r.model));
        else emit(ctx, "model_t" + r.task_id + ".dot", model_to_dot(r.model));
    }
}

// Manual lookup: the configured file, else the truth sidecar next to the data.
std::optional<std::map<std::string, ManualSpec>> find_manuals(const Context& ctx)
{
    fs::path path = ctx.config.manual;
    if (path.empty()) {
        const fs::path data = ctx.config.data;
        const fs::path dir = fs::is_directory(data) ? data : data.parent_path();
        path = dir / "truth.json";
        if (!fs::exists(path)) return std::nullopt;
    }
    return manuals_from_json(read_text_file(path));
}

void write_eval(const Context& ctx, const Analysis& an, const std::map<std::string, ManualSpec>& manuals)
{
    const auto grid = method_grid();
    const auto rows = evaluate_methods(an.tasks, manuals, grid, ctx.config.prototype, ctx.config.match);
    emit(ctx, "evaluation.csv", evaluation_csv(rows));
    emit(ctx, "evaluation_detail.csv", evaluation_detail_csv(rows));
    emit(ctx, "evaluation.md", evaluation_markdown(rows));
}

}  // namespace

int run_ingest(const Options& o)
{
    const auto ctx = make_context(o, {"csv"});
    const auto set = load(ctx);
    std::ostringstream trials;
    trials << "user_id,task_id,trial_index,gaze,hand,head_motion,touches,ratings\n";
    for (const auto& t : set.trials)
        trials << key_fields(t.key()) << ',' << t.gaze.size() << ',' << t.hand.size() << ',' << t.head_motion.size()
               << ',' << t.touches.size() << ',' << t.ratings.size() << '\n';
    emit(ctx, "trials.csv", trials.str());

    const auto diags = validate(set);
    std::ostringstream d;
    d << "user_id,task_id,trial_index,rule,message\n";
    for (const auto& x : diags) d << key_fields(x.trial) << ',' << x.rule << ',' << csv_field(x.message) << '\n';
    emit(ctx, "diagnostics.csv", d.str());
    for (const auto& x : diags) std::cerr << to_string(x.trial) << ": " << x.rule << ": " << x.message << '\n';
    return diags.empty() ? 0 : 1;
}

int run_hotspots(const Options& o)
{
    const auto ctx = make_context(o, {"csv", "json"});
    const auto set = load(ctx);
    Analysis an;
    an.registry = cluster_touches(set, ctx.config.segmentation);
    write_hotspots(ctx, an);
    return 0;
}

int run_segment(const Options& o)
{
    const auto ctx = make_context(o, {"csv", "json"});
    write_units(ctx, analyze(load(ctx), ctx.config));
    return 0;
}

int run_features(const Options& o)
{
    const auto ctx = make_context(o, {"csv"});
    write_features(ctx, analyze(load(ctx), ctx.config));
    return 0;
}

int run_stats(const Options& o)
{
    const auto ctx = make_context(o, {"csv"});
    write_stats(ctx, analyze(load(ctx), ctx.config));
    return 0;
}

int run_rank(const Options& o)
{
    const auto ctx = make_context(o, {"csv"});
    const auto an = analyze(load(ctx), ctx.config);
    write_ranks(ctx, select_and_model(an, ctx.config), an);
    return 0;
}

int run_prototype(const Options& o)
{
    const auto ctx = make_context(o, {"csv", "json"});
    const auto an = analyze(load(ctx), ctx.config);
    write_prototypes(ctx, select_and_model(an, ctx.config), an);
    return 0;
}

int run_model(const Options& o)
{
    const auto ctx = make_context(o, {"dot", "json"});
    const auto an = analyze(load(ctx), ctx.config);
    write_models(ctx, select_and_model(an, ctx.config));
    return 0;
}

int run_eval(const Options& o)
{
    const auto ctx = make_context(o, {"csv"});
    const auto set = load(ctx);
    const auto manuals = find_manuals(ctx);
    if (!manuals) throw ConfigError("no manual: set \"manual\" in the config or place truth.json beside the data");
    write_eval(ctx, analyze(set, ctx.config), *manuals);
    return 0;
}

int run_synth(const Options& o)
{
    auto ctx = make_context(o, {"json"});
    if (!o.spec.empty()) ctx.config.synth = synth_spec_from_json(read_text_file(o.spec));
    if (o.seed) ctx.config.synth.seed = *o.seed;
    ctx.config.synth.check();
    const auto set = generate_dataset(ctx.config.synth);
    write_dataset(set, planted_truth(ctx.config.synth), ctx.out);
    std::cout << set.trials.size() << " trials written to " << ctx.out.string() << '\n';
    return 0;
}

int run_report(const Options& o)
{
    auto ctx = make_context(o, {"csv"});
    const auto set = load(ctx);
    const auto an = analyze(set, ctx.config);
    const auto results = select_and_model(an, ctx.config);

    ctx.format = "json";
    write_hotspots(ctx, an);
    ctx.format = "csv";
    write_hotspots(ctx, an);
    write_units(ctx, an);
    write_features(ctx, an);
    write_stats(ctx, an);
    write_ranks(ctx, results, an);
    write_prototypes(ctx, results, an);
    ctx.format = "dot";
    write_models(ctx, results);
    ctx.format = "json";
    write_models(ctx, results);

    if (const auto manuals = find_manuals(ctx)) write_eval(ctx, an, *manuals);
    else std::cerr << "no manual found, skipping evaluation\n";
    return 0;
}

}  // namespace opskill::cli
