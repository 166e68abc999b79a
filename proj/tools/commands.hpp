#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace opskill::cli {

struct Options {
    std::string data;
    std::string config;
    std::string out;
    std::string format;  ///< empty: the command's default
    std::string spec;    ///< synth only
    std::optional<std::uint64_t> seed;
};

/// Bad flag combinations detected after parsing; reported with exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

int run_ingest(const Options& o);
int run_hotspots(const Options& o);
int run_segment(const Options& o);
int run_features(const Options& o);
int run_stats(const Options& o);
int run_rank(const Options& o);
int run_prototype(const Options& o);
int run_model(const Options& o);
int run_eval(const Options& o);
int run_synth(const Options& o);
int run_report(const Options& o);

}  // namespace opskill::cli
