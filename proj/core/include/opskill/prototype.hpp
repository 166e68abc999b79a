#pragma once

// Skill ranking of experiences per hotspot and majority-vote selection of
// high-skilled prototype experiences, optionally with two global features
// (unnecessary-interaction ratio and bag-of-hotspots representativeness).

#include "opskill/features.hpp"
#include "opskill/segmentation.hpp"
#include "opskill/stats.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace opskill {

/// One trial seen as an ordered sequence of hotspot interactions.
struct Experience {
    TrialKey trial;
    std::vector<int> hotspot_sequence;
    std::vector<FeatureVector> units;  ///< per interaction, same order as the sequence
};

enum class HotspotMode : std::uint8_t { All, Difficult };

/// Ascending: smaller feature values rank better (negative skill correlation).
enum class RankDirection : std::uint8_t { Ascending, Descending };

struct PrototypeConfig {
    std::vector<std::string> feature_set;  ///< top skill-correlated features
    std::vector<double> weights;           ///< per feature; empty = |R| from the correlation table
    int pool_size_n = 5;
    int select_q = 3;
    HotspotMode hotspot_mode = HotspotMode::All;
    double difficult_threshold = 1.0;
    bool use_global = false;
    double majority_threshold = 0.30;

    void check() const;  ///< throws ConfigError
};

struct ExperienceRank {
    std::size_t experience = 0;  ///< index into the experience list
    double rank = 0.0;           ///< 1 = most skilled; ties share the average rank
};

/// Ranks the experiences that visit `hotspot` by their mean value of
/// `feature` over those visits. Throws NoOccurrenceError when none do.
std::vector<ExperienceRank> rank_by_feature(std::span<const Experience> experiences, int hotspot,
                                            const std::string& feature, RankDirection direction);

struct HotspotRanking {
    int hotspot = 0;
    std::vector<std::size_t> experiences;         ///< those containing the hotspot
    std::vector<std::vector<double>> feature_ranks;  ///< [feature][member]
    std::vector<double> weighted_rank;            ///< weighted mean of feature ranks, per member
    std::vector<double> rank;                     ///< average rank of weighted_rank, per member
    std::vector<std::size_t> order;               ///< members best first (weighted rank, then index)
};

struct SelectionResult {
    std::vector<std::size_t> pool;     ///< multiset, in voting order
    std::vector<int> occurrences;      ///< per experience, count in the pool
    std::vector<std::size_t> selected; ///< best first
    std::vector<HotspotRanking> rank_table;
    std::vector<double> weights;       ///< normalized, per feature
    std::vector<int> voting_hotspots;

    bool operator==(const SelectionResult& o) const
    {
        return pool == o.pool && occurrences == o.occurrences && selected == o.selected;
    }
};

/// Normalized feature weights: |R| of each feature in the correlation table,
/// scaled to sum to one (uniform when all are zero).
std::vector<double> feature_weights(const PrototypeConfig& config,
                                    std::span<const CorrelationResult> correlation_table);

/// Per-hotspot ranking, weighted merge, pooled voting and final choice.
/// `difficult` lists the hotspots used in Difficult mode. Experience ids in
/// the tie-break chain are positions in `experiences`.
SelectionResult select_prototypes(std::span<const Experience> experiences, const PrototypeConfig& config,
                                  std::span<const CorrelationResult> correlation_table,
                                  std::span<const int> difficult = {});

/// Occurrence counts of every hotspot over the experiences' sequences.
HotspotRegistry occurrence_registry(std::span<const Experience> experiences);

/// Fraction of an experience's interactions that fall on minority hotspots,
/// i.e. hotspots seen in fewer than threshold x total experiences.
double unnecessary_ratio(const Experience& e, const HotspotRegistry& registry, double threshold);

/// Euclidean distance of each bag-of-hotspots vector to the mean bag.
/// Throws InsufficientExperiencesError with fewer than two experiences.
std::vector<double> representativeness(std::span<const Experience> experiences);

/// Hotspots whose mean difficulty rating, over all given trials, is at
/// least `threshold`. Throws MissingRatingsError without ratings.
std::vector<int> difficult_hotspots(std::span<const TrialRecord* const> trials, double threshold);

std::string method_label(const PrototypeConfig& config);

std::string rank_table_csv(std::span<const Experience> experiences, const SelectionResult& result,
                           const PrototypeConfig& config);

}  // namespace opskill
