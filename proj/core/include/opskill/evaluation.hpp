#pragma once

// Scoring selected prototype experiences against a ground-truth manual and
// running the AL/DF x K x (+GB) method matrix.

#include "opskill/prototype.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace opskill {

struct ManualSpec {
    std::string task_id;
    std::vector<std::vector<int>> variants;  ///< every legal step ordering
    int dof = 0;                              ///< number of variants

    void check() const;  ///< throws ConfigError
};

/// Expands ordered groups of order-changeable steps into every variant.
/// {{1, 2}, {6}, {3}} gives [1 2 6 3] and [2 1 6 3].
ManualSpec expand_manual(std::string task_id, const std::vector<std::vector<int>>& groups);

struct ScoreTriple {
    double recall = 0.0;
    double precision = 0.0;
    double fscore = 0.0;
};

enum class MatchMode : std::uint8_t {
    Multiset,  ///< order-free multiset intersection
    Lcs,       ///< longest common subsequence
};

/// Recall/precision/F of a selected step sequence against the best-matching
/// manual variant. Throws EmptySelectionError when `selected` is empty.
ScoreTriple fscore(std::span<const int> selected, const ManualSpec& manual, MatchMode mode = MatchMode::Multiset);

std::size_t multiset_intersection(std::span<const int> a, std::span<const int> b);
std::size_t lcs_length(std::span<const int> a, std::span<const int> b);

/// One method of the matrix: which hotspots vote, how many top skill
/// features rank them, whether the global features vote too.
struct MethodSpec {
    HotspotMode mode = HotspotMode::All;
    int k = 5;
    bool global = false;
};

/// AL(3), AL+GB(3), DF(3), DF+GB(3), AL(5), ... DF+GB(7).
std::vector<MethodSpec> method_grid();
std::string method_label(const MethodSpec& m);

/// Everything prototype selection needs for one task.
struct TaskInputs {
    std::string task_id;
    std::vector<Experience> experiences;
    std::vector<CorrelationResult> skill_table;  ///< sorted by |R|
    std::vector<int> difficult;
};

/// First `k` non-degenerate features of a sorted correlation table.
std::vector<std::string> top_k_features(std::span<const CorrelationResult> table, int k);

/// Copy of `base` configured for one method and one task.
PrototypeConfig method_config(const PrototypeConfig& base, const MethodSpec& method, const TaskInputs& task);

struct SelectedExperience {
    std::string task_id;
    TrialKey trial;
    std::vector<int> sequence;
    ScoreTriple score;
};

struct MethodRow {
    std::string label;
    ScoreTriple mean;  ///< unweighted mean over every (task, selected experience)
    std::vector<SelectedExperience> selections;
};

std::vector<MethodRow> evaluate_methods(std::span<const TaskInputs> tasks,
                                        const std::map<std::string, ManualSpec>& manuals,
                                        std::span<const MethodSpec> grid, const PrototypeConfig& base,
                                        MatchMode mode = MatchMode::Multiset);

std::string evaluation_csv(std::span<const MethodRow> rows);
std::string evaluation_detail_csv(std::span<const MethodRow> rows);
std::string evaluation_markdown(std::span<const MethodRow> rows);

/// Manual file: one object {"task_id", "variants", "dof"} (or "groups" in
/// place of "variants"), or an array of them.
std::map<std::string, ManualSpec> manuals_from_json(std::string_view document);
std::string manuals_to_json(const std::map<std::string, ManualSpec>& manuals);

}  // namespace opskill
