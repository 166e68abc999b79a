#pragma once

// Transition-count task model built from a baseline of prototype experiences
// and grown by aligning further experiences against it.
//
// Alignment walks the experience's hotspot sequence over the model graph. For
// each element, from the last matched ("anchor") state:
//   repeat  cost 0  same observation as the previous element (self-transition)
//   match   cost 0  a direct successor of the anchor with that observation
//   skip    cost k  a state reached by passing k intermediate states
//   jump    cost 1  a same-observation state not reachable forward (backward
//                   or onto another branch)
//   new     cost 2  a fresh state; the anchor stays where it was
// The minimal-cost alignment is found by dynamic programming over (position,
// anchor, previous-was-new); ties prefer repeat > match > skip > jump > new,
// then the lower-numbered predecessor. Trailing model states are not charged.

#include "opskill/prototype.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace opskill {

struct TaskState {
    int id = 0;
    int observation = 0;  ///< hotspot id

    bool operator==(const TaskState&) const = default;
};

struct TaskModel {
    std::vector<TaskState> states;                    ///< state id == index
    std::vector<std::vector<long long>> transitions;  ///< [from][to] counts
    std::vector<long long> initial_counts;
    std::vector<long long> end_counts;  ///< transitions into the end pseudo-state
    int integrated_count = 0;           ///< experiences absorbed, baseline included

    [[nodiscard]] std::size_t size() const { return states.size(); }
    /// Outgoing count of a state, end transitions included.
    [[nodiscard]] long long out_total(int state) const;
    [[nodiscard]] double probability(int from, int to) const;
    [[nodiscard]] double end_probability(int state) const;
    [[nodiscard]] double initial_probability(int state) const;

    int add_state(int observation);
    bool operator==(const TaskModel&) const = default;
};

enum class AlignOp : std::uint8_t { Repeat, Match, Skip, Jump, New };

std::string_view to_string(AlignOp op);

struct AlignmentStep {
    std::size_t position = 0;
    AlignOp op = AlignOp::Match;
    std::optional<int> state;  ///< unset for New, and for Repeat right after New
    int skipped = 0;           ///< intermediate states passed by a Skip
    int cost = 0;
};

struct Alignment {
    std::vector<AlignmentStep> steps;  ///< one per sequence position
    int cost = 0;

    [[nodiscard]] int count(AlignOp op) const;
};

Alignment align(const TaskModel& model, std::span<const int> sequence);
Alignment align(const TaskModel& model, const Experience& e);

/// Applies the alignment: new states are created, counts are incremented
/// along the aligned path, one initial and one end transition are recorded.
TaskModel integrate(TaskModel model, std::span<const int> sequence);
TaskModel integrate(TaskModel model, const Experience& e);

/// The first prototype becomes a chain (consecutive repeats collapse into a
/// self-transition); the rest are integrated in order. Throws EmptyInputError.
TaskModel build_baseline(std::span<const Experience> prototypes);
TaskModel build_baseline(std::span<const std::vector<int>> prototypes);

struct NodeMass {
    double in = 0.0;   ///< initial probability plus incoming transition probabilities
    double out = 0.0;  ///< outgoing transition probabilities to real states
};

std::vector<NodeMass> node_mass(const TaskModel& model);

std::string model_to_dot(const TaskModel& model);
std::string model_to_json(const TaskModel& model);
/// Restores the counts written by model_to_json. Throws SchemaError.
TaskModel model_from_json(std::string_view document);

}  // namespace opskill
