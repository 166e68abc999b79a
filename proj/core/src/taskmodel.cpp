#include "opskill/taskmodel.hpp"

#include "opskill/error.hpp"
#include "opskill/text.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace opskill {

long long TaskModel::out_total(int state) const
{
    long long s = end_counts[state];
    for (long long c : transitions[state]) s += c;
    return s;
}

double TaskModel::probability(int from, int to) const
{
    const long long total = out_total(from);
    return total ? static_cast<double>(transitions[from][to]) / static_cast<double>(total) : 0.0;
}

double TaskModel::end_probability(int state) const
{
    const long long total = out_total(state);
    return total ? static_cast<double>(end_counts[state]) / static_cast<double>(total) : 0.0;
}

double TaskModel::initial_probability(int state) const
{
    long long total = 0;
    for (long long c : initial_counts) total += c;
    return total ? static_cast<double>(initial_counts[state]) / static_cast<double>(total) : 0.0;
}

int TaskModel::add_state(int observation)
{
    const int id = static_cast<int>(states.size());
    states.push_back({id, observation});
    for (auto& row : transitions) row.push_back(0);
    transitions.emplace_back(states.size(), 0);
    initial_counts.push_back(0);
    end_counts.push_back(0);
    return id;
}

std::string_view to_string(AlignOp op)
{
    switch (op) {
    case AlignOp::Repeat: return "repeat";
    case AlignOp::Match: return "match";
    case AlignOp::Skip: return "skip";
    case AlignOp::Jump: return "jump";
    case AlignOp::New: return "new";
    }
    return "?";
}

int Alignment::count(AlignOp op) const
{
    return static_cast<int>(std::count_if(steps.begin(), steps.end(),
                                          [op](const AlignmentStep& s) { return s.op == op; }));
}

// ---------------------------------------------------------------------------
// Alignment

namespace {

constexpr int kUnreachable = std::numeric_limits<int>::max();

// dist[a][x]: fewest transitions from anchor a to state x along edges with a
// nonzero count, at least one step. Anchor index 0 is the start pseudo-state,
// anchor s + 1 is state s.
std::vector<std::vector<int>> forward_distances(const TaskModel& m)
{
    const std::size_t S = m.size();
    std::vector<std::vector<int>> succ(S + 1);
    for (std::size_t s = 0; s < S; ++s)
        if (m.initial_counts[s] > 0) succ[0].push_back(static_cast<int>(s));
    for (std::size_t a = 0; a < S; ++a)
        for (std::size_t b = 0; b < S; ++b)
            if (m.transitions[a][b] > 0) succ[a + 1].push_back(static_cast<int>(b));

    std::vector<std::vector<int>> dist(S + 1, std::vector<int>(S, kUnreachable));
    for (std::size_t a = 0; a <= S; ++a) {
        std::deque<int> queue;
        for (int x : succ[a]) {
            if (dist[a][x] == kUnreachable) {
                dist[a][x] = 1;
                queue.push_back(x);
            }
        }
        while (!queue.empty()) {
            const int x = queue.front();
            queue.pop_front();
            for (int y : succ[x + 1]) {
                if (dist[a][y] == kUnreachable) {
                    dist[a][y] = dist[a][x] + 1;
                    queue.push_back(y);
                }
            }
        }
    }
    return dist;
}

struct Cell {
    int cost = kUnreachable;
    int prev = -1;  // predecessor cell index at the previous position
    AlignOp op = AlignOp::New;
    int state = -1;  // target state for Repeat/Match/Skip/Jump on existing states
    int skipped = 0;
    int step_cost = 0;
};

bool better(const Cell& cand, const Cell& cur)
{
    if (cand.cost != cur.cost) return cand.cost < cur.cost;
    if (cand.op != cur.op) return cand.op < cur.op;
    return cand.prev < cur.prev;
}

}  // namespace

Alignment align(const TaskModel& model, std::span<const int> seq)
{
    Alignment out;
    const std::size_t m = seq.size();
    if (m == 0) return out;

    const std::size_t S = model.size();
    const auto dist = forward_distances(model);
    // cell index = anchor * 2 + pending_new, anchor 0 = start
    const std::size_t n_cells = (S + 1) * 2;
    std::vector<std::vector<Cell>> dp(m + 1, std::vector<Cell>(n_cells));
    dp[0][0].cost = 0;

    auto relax = [&](std::size_t i, std::size_t cell, const Cell& cand) {
        if (better(cand, dp[i][cell])) dp[i][cell] = cand;
    };

    for (std::size_t i = 0; i < m; ++i) {
        const int sym = seq[i];
        const bool repeated = i > 0 && seq[i] == seq[i - 1];
        for (std::size_t c = 0; c < n_cells; ++c) {
            const Cell& from = dp[i][c];
            if (from.cost == kUnreachable) continue;
            const std::size_t anchor = c / 2;
            const bool pending = (c % 2) == 1;

            if (repeated) {
                if (pending) {
                    relax(i + 1, c, {from.cost, static_cast<int>(c), AlignOp::Repeat, -1, 0, 0});
                } else if (anchor > 0) {
                    relax(i + 1, c,
                          {from.cost, static_cast<int>(c), AlignOp::Repeat, static_cast<int>(anchor - 1), 0, 0});
                }
            }

            for (std::size_t x = 0; x < S; ++x) {
                if (model.states[x].observation != sym) continue;
                if (!pending && anchor == x + 1) continue;  // covered by Repeat
                const std::size_t target = (x + 1) * 2;
                const int d = dist[anchor][x];
                Cell cand{0, static_cast<int>(c), AlignOp::Jump, static_cast<int>(x), 0, 1};
                if (d != kUnreachable) {
                    cand.op = d == 1 ? AlignOp::Match : AlignOp::Skip;
                    cand.skipped = d - 1;
                    cand.step_cost = d - 1;
                }
                cand.cost = from.cost + cand.step_cost;
                relax(i + 1, target, cand);
            }

            relax(i + 1, anchor * 2 + 1, {from.cost + 2, static_cast<int>(c), AlignOp::New, -1, 0, 2});
        }
    }

    std::size_t best = 0;
    for (std::size_t c = 1; c < n_cells; ++c) {
        const Cell& a = dp[m][c];
        const Cell& b = dp[m][best];
        if (a.cost == kUnreachable) continue;
        if (b.cost == kUnreachable || a.cost < b.cost || (a.cost == b.cost && a.op < b.op)) best = c;
    }

    out.steps.resize(m);
    out.cost = dp[m][best].cost;
    std::size_t cell = best;
    for (std::size_t i = m; i-- > 0;) {
        const Cell& k = dp[i + 1][cell];
        AlignmentStep& step = out.steps[i];
        step.position = i;
        step.op = k.op;
        if (k.state >= 0) step.state = k.state;
        step.skipped = k.skipped;
        step.cost = k.step_cost;
        cell = static_cast<std::size_t>(k.prev);
    }
    return out;
}

Alignment align(const TaskModel& model, const Experience& e) { return align(model, e.hotspot_sequence); }

TaskModel integrate(TaskModel model, std::span<const int> sequence)
{
    if (sequence.empty()) throw EmptyInputError("cannot integrate an empty experience");
    const Alignment al = align(model, sequence);
    int prev = -1;
    for (const auto& step : al.steps) {
        int target = 0;
        switch (step.op) {
        case AlignOp::New: target = model.add_state(sequence[step.position]); break;
        case AlignOp::Repeat: target = step.state ? *step.state : prev; break;
        default: target = *step.state; break;
        }
        if (prev < 0) {
            ++model.initial_counts[target];
        } else {
            ++model.transitions[prev][target];
        }
        prev = target;
    }
    ++model.end_counts[prev];
    ++model.integrated_count;
    return model;
}

TaskModel integrate(TaskModel model, const Experience& e) { return integrate(std::move(model), e.hotspot_sequence); }

TaskModel build_baseline(std::span<const std::vector<int>> prototypes)
{
    if (prototypes.empty()) throw EmptyInputError("baseline needs at least one prototype");
    TaskModel model;
    for (const auto& p : prototypes) model = integrate(std::move(model), p);
    return model;
}

TaskModel build_baseline(std::span<const Experience> prototypes)
{
    std::vector<std::vector<int>> seqs;
    for (const auto& e : prototypes) seqs.push_back(e.hotspot_sequence);
    return build_baseline(seqs);
}

// ---------------------------------------------------------------------------
// Export

std::vector<NodeMass> node_mass(const TaskModel& model)
{
    const std::size_t S = model.size();
    std::vector<NodeMass> mass(S);
    for (std::size_t a = 0; a < S; ++a) {
        mass[a].in += model.initial_probability(static_cast<int>(a));
        for (std::size_t b = 0; b < S; ++b) {
            const double p = model.probability(static_cast<int>(a), static_cast<int>(b));
            mass[a].out += p;
            mass[b].in += p;
        }
    }
    return mass;
}

std::string model_to_dot(const TaskModel& model)
{
    const auto mass = node_mass(model);
    std::ostringstream os;
    os << "digraph task_model {\n";
    os << "  rankdir=LR;\n";
    os << "  node [shape=circle];\n";
    for (const auto& s : model.states) {
        const auto& m = mass[s.id];
        os << "  s" << s.id << " [label=\"" << s.observation << "\", mass=\"" << format_number(m.in + m.out)
           << "\", initial=\"" << format_number(model.initial_probability(s.id)) << "\", end=\""
           << format_number(model.end_probability(s.id)) << "\"];\n";
    }
    for (std::size_t a = 0; a < model.size(); ++a) {
        for (std::size_t b = 0; b < model.size(); ++b) {
            if (model.transitions[a][b] == 0) continue;
            const double p = model.probability(static_cast<int>(a), static_cast<int>(b));
            os << "  s" << a << " -> s" << b << " [label=\"" << format_number(p) << "\", count="
               << model.transitions[a][b] << "];\n";
        }
    }
    os << "}\n";
    return os.str();
}

std::string model_to_json(const TaskModel& model)
{
    using nlohmann::json;
    const auto mass = node_mass(model);
    json doc;
    doc["integrated_count"] = model.integrated_count;
    json states = json::array();
    for (const auto& s : model.states) {
        states.push_back({{"id", s.id},
                          {"observation", s.observation},
                          {"initial_count", model.initial_counts[s.id]},
                          {"end_count", model.end_counts[s.id]},
                          {"in_mass", mass[s.id].in},
                          {"out_mass", mass[s.id].out}});
    }
    doc["states"] = std::move(states);
    json edges = json::array();
    for (std::size_t a = 0; a < model.size(); ++a) {
        for (std::size_t b = 0; b < model.size(); ++b) {
            if (model.transitions[a][b] == 0) continue;
            edges.push_back({{"from", a},
                             {"to", b},
                             {"count", model.transitions[a][b]},
                             {"probability", model.probability(static_cast<int>(a), static_cast<int>(b))}});
        }
    }
    doc["edges"] = std::move(edges);
    return doc.dump(2);
}

TaskModel model_from_json(std::string_view document)
{
    using nlohmann::json;
    TaskModel model;
    try {
        const json doc = json::parse(document);
        const auto& states = doc.at("states");
        for (std::size_t i = 0; i < states.size(); ++i) {
            const auto& s = states[i];
            if (s.at("id").get<std::size_t>() != i) throw SchemaError("task model: state ids must be 0..n-1 in order");
            model.add_state(s.at("observation").get<int>());
            model.initial_counts[i] = s.at("initial_count").get<long long>();
            model.end_counts[i] = s.at("end_count").get<long long>();
        }
        for (const auto& e : doc.at("edges")) {
            const auto a = e.at("from").get<std::size_t>();
            const auto b = e.at("to").get<std::size_t>();
            if (a >= model.size() || b >= model.size()) throw SchemaError("task model: edge refers to unknown state");
            model.transitions[a][b] = e.at("count").get<long long>();
        }
        model.integrated_count = doc.at("integrated_count").get<int>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("task model: ") + e.what());
    }
    return model;
}

}  // namespace opskill
