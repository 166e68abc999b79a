#pragma once

// Learning trends, intra/inter-person deviations and feature correlations.
// Population moments are used throughout.

#include "opskill/features.hpp"
#include "opskill/records.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace opskill {

/// Sum of successive differences of a user's per-trial values divided by
/// their mean, in percent. Values must be ordered by trial index.
/// Throws DegenerateError with fewer than two values or a zero mean.
double trend(std::span<const double> values);

struct DeviationReport {
    std::map<std::string, double> intra_by_user;  ///< std / mean of each user's values
    double inter = 0.0;                           ///< std / mean of per-user means
};

DeviationReport deviations(const std::map<std::string, std::vector<double>>& values);

/// 1-based ascending ranks; tied values share the average of their ranks.
std::vector<double> average_ranks(std::span<const double> v);

/// Pearson correlation with population moments. Throws DegenerateError for
/// unequal lengths, fewer than three values, or a constant argument.
double pearson(std::span<const double> f, std::span<const double> l);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> f, std::span<const double> l);

enum class CorrelationKind : std::uint8_t { SpearmanToSkill, PearsonToDifficulty };

struct CorrelationResult {
    std::string feature;
    double R = 0.0;  ///< NaN when degenerate
    CorrelationKind kind = CorrelationKind::SpearmanToSkill;
    int groups = 0;  ///< groups or steps that contributed
    bool degenerate = false;
};

/// Trial-level feature values, one row per trial.
struct FeatureTable {
    std::vector<std::string> names;
    std::vector<TrialKey> trials;
    std::vector<std::vector<double>> values;  ///< [trial][feature]

    [[nodiscard]] std::size_t column(std::string_view name) const;
};

/// Builds the table from every trial's unit features (keyed by trial).
FeatureTable build_feature_table(const std::map<TrialKey, std::vector<FeatureVector>>& units,
                                 const std::vector<std::string>& names);

enum class SkillPooling : std::uint8_t {
    WithinUserAverage,  ///< correlate inside each (user, task), then average
    PooledRanks,        ///< one Spearman over every (value, trial index) pair
};

/// Spearman correlation of each feature against the trial index, sorted by
/// descending |R| (catalog order breaks ties; degenerate features last).
/// Groups with fewer than three trials or a constant feature are skipped.
std::vector<CorrelationResult> skill_correlation_table(const FeatureTable& table,
                                                       SkillPooling pooling = SkillPooling::WithinUserAverage);

/// Pearson correlation, across steps, between the mean feature value of the
/// units at a step's hotspot and the step's mean difficulty rating. Throws
/// MissingRatingsError when no trial carries ratings.
std::vector<CorrelationResult> difficulty_correlation_table(std::span<const FeatureVector> units,
                                                            std::span<const TrialRecord* const> trials,
                                                            const std::vector<std::string>& names);

struct TrendRow {
    std::string feature;
    std::string scope;  ///< task id, or "all"
    double mean_trend_percent = 0.0;
    int users = 0;
};

/// Mean per-user trend of each feature, per task and over all tasks.
std::vector<TrendRow> trend_table(const FeatureTable& table);

struct DeviationRow {
    std::string feature;
    std::string scope;
    double mean_intra = 0.0;
    double inter = 0.0;
};

std::vector<DeviationRow> deviation_table(const FeatureTable& table);

std::string correlation_csv(std::span<const CorrelationResult> rows);
std::string trend_csv(std::span<const TrendRow> rows);
std::string deviation_csv(std::span<const DeviationRow> rows);

}  // namespace opskill
