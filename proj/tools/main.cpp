#include "commands.hpp"

#include "opskill/error.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <utility>
#include <vector>

using namespace opskill::cli;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct Command {
    const char* name;
    const char* help;
    std::function<int(const Options&)> run;
};

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<Command> commands{
        {"ingest", "Load and validate session files", run_ingest},
        {"hotspots", "Cluster touches into hotspots", run_hotspots},
        {"segment", "Split trials into operational units", run_segment},
        {"features", "Extract per-unit features", run_features},
        {"stats", "Trend, deviation and correlation tables", run_stats},
        {"rank", "Per-hotspot rank tables", run_rank},
        {"prototype", "Select prototype experiences", run_prototype},
        {"model", "Build task models from the prototypes", run_model},
        {"eval", "Score the method grid against a manual", run_eval},
        {"synth", "Generate a synthetic dataset", run_synth},
        {"report", "Run every stage and write all outputs", run_report},
    };

    CLI::App app{"Operational skill analysis from egocentric operation recordings"};
    app.require_subcommand(1);
    app.allow_extras(false);

    Options opts;
    std::uint64_t seed = 0;
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--data", opts.data, "Dataset directory, manifest or session file");
        sub->add_option("--config", opts.config, "Pipeline config JSON");
        sub->add_option("--out", opts.out, "Output directory");
        sub->add_option("--seed", seed, "Synthetic-data seed");
        sub->add_option("--format", opts.format, "Output format")->check(CLI::IsMember({"csv", "json", "dot"}));
        if (std::string(c.name) == "synth") sub->add_option("--spec", opts.spec, "Synthetic dataset spec JSON");
        subs.emplace_back(sub, &c);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    for (const auto& [sub, cmd] : subs) {
        if (!sub->parsed()) continue;
        if (sub->count("--seed") > 0) opts.seed = seed;
        try {
            return cmd->run(opts);
        } catch (const UsageError& e) {
            std::cerr << "error: " << e.what() << "\n\n" << sub->help();
            return kExitUsage;
        } catch (const opskill::Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitData;
        } catch (const std::filesystem::filesystem_error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitData;
        }
    }
    return kExitUsage;
}
