#include "stresslab/mcts.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <utility>

namespace stresslab {

void MCTSParams::validate() const {
    if (!(c_explore >= 0.0) || !std::isfinite(c_explore))
        throw std::invalid_argument("c_explore must be finite and >= 0");
    if (!(k_dpw > 0.0) || !std::isfinite(k_dpw))
        throw std::invalid_argument("k_dpw must be finite and > 0");
    if (!(alpha_dpw > 0.0) || !(alpha_dpw < 1.0))
        throw std::invalid_argument("alpha_dpw must lie strictly inside (0, 1)");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
    if (granularity) {
        for (int i = 0; i < kActionDim; ++i) {
            if (!((*granularity)[i] > 0.0) || !std::isfinite((*granularity)[i]))
                throw std::invalid_argument("granularity components must be finite and > 0");
        }
    }
}

TreeEdge* TreeNode::find_edge(std::uint64_t key) {
    for (TreeEdge& e : edges) {
        if (e.key == key) return &e;
    }
    return nullptr;
}

std::uint64_t action_key(const ActionVector& action, const Vec6& granularity) {
    const Vec6 v = action.as_vec6();
    std::uint64_t h = splitmix64(0x6a09e667f3bcc909ull);
    for (int i = 0; i < kActionDim; ++i) {
        const auto bin = static_cast<std::int64_t>(std::floor(v[i] / granularity[i]));
        h = hash_combine(h, static_cast<std::uint64_t>(bin));
    }
    return h;
}

std::size_t ucb_select(const TreeNode& node, double c_explore) {
    if (node.edges.empty()) throw std::logic_error("ucb_select called on a node with no edges");
    for (std::size_t i = 0; i < node.edges.size(); ++i) {
        if (node.edges[i].n_sa == 0) return i;
    }
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node.edges.size(); ++i) {
        const TreeEdge& e = node.edges[i];
        const double bonus =
            c_explore * std::sqrt(std::log(static_cast<double>(node.n_s)) / e.n_sa);
        const double value = e.q + bonus;
        if (value > best_value) {
            best_value = value;
            best = i;
        }
    }
    return best;
}

bool dpw_allow_new_action(const TreeNode& node, const MCTSParams& params) {
    const double cap = params.k_dpw * std::pow(static_cast<double>(node.n_s), params.alpha_dpw);
    return static_cast<double>(node.edges.size()) < cap;
}

void backpropagate(std::span<PathEntry> path, double tail_return) {
    double g = tail_return;
    for (std::size_t i = path.size(); i-- > 0;) {
        PathEntry& entry = path[i];
        g += entry.step_reward;
        TreeEdge& edge = entry.node->edges[entry.edge];
        edge.n_sa += 1;
        edge.q += (g - edge.q) / edge.n_sa;
    }
}

nlohmann::json TreeStats::to_json() const {
    nlohmann::json j;
    j["nodes"] = nodes;
    j["edges"] = edges;
    j["max_depth"] = max_depth;
    j["nodes_per_depth"] = nodes_per_depth;
    return j;
}

TreeStats tree_stats(const TreeNode& root) {
    TreeStats stats;
    std::deque<std::pair<const TreeNode*, std::size_t>> queue;
    queue.emplace_back(&root, 0);
    while (!queue.empty()) {
        const auto [node, depth] = queue.front();
        queue.pop_front();
        stats.nodes += 1;
        stats.max_depth = std::max(stats.max_depth, depth);
        if (stats.nodes_per_depth.size() <= depth) stats.nodes_per_depth.resize(depth + 1, 0);
        stats.nodes_per_depth[depth] += 1;
        for (const TreeEdge& e : node->edges) {
            stats.edges += 1;
            if (e.child) queue.emplace_back(e.child.get(), depth + 1);
        }
    }
    return stats;
}

namespace {

struct SimulationOutcome {
    Trajectory trajectory;
};

// One selection + expansion + rollout pass. Node visit counts are bumped on
// entry, before the widening test, so a fresh node immediately admits its
// first edge. The walk stops at the first edge whose child has not been
// created yet; the remainder of the episode is a uniform-action rollout.
Trajectory run_simulation(const Simulator& sim, TreeNode& root, const MCTSParams& params,
                          const Vec6& granularity, int depth_cap, Rng rng) {
    const ActionBounds& bounds = sim.action_bounds();
    const RewardSpec& spec = sim.reward_spec();

    auto handle = sim.reset();
    Trajectory traj;
    traj.scenario_id = sim.scenario_id();
    std::vector<PathEntry> path;

    TreeNode* node = &root;
    int depth = 0;
    while (!sim.is_terminal(*handle) && depth < depth_cap) {
        node->n_s += 1;
        if (dpw_allow_new_action(*node, params)) {
            const ActionVector a = bounds.sample_uniform(rng);
            const std::uint64_t key = action_key(a, granularity);
            if (node->find_edge(key) == nullptr) {
                TreeEdge edge;
                edge.key = key;
                edge.raw_action = a;
                node->edges.push_back(std::move(edge));
            }
        }
        const std::size_t idx = ucb_select(*node, params.c_explore);
        TreeEdge& edge = node->edges[idx];
        const StepOutcome outcome = sim.step(*handle, edge.raw_action);
        traj.append(edge.raw_action, outcome, reward(outcome, spec));
        path.push_back({node, idx, traj.steps.back().reward});
        if (outcome.terminal) break;
        if (!edge.child) {
            edge.child = std::make_unique<TreeNode>();
            break;
        }
        node = edge.child.get();
        depth += 1;
    }

    double tail = 0.0;
    while (!sim.is_terminal(*handle)) {
        const ActionVector a = bounds.sample_uniform(rng);
        const StepOutcome outcome = sim.step(*handle, a);
        const double r = reward(outcome, spec);
        traj.append(a, outcome, r);
        tail += r;
    }

    backpropagate(path, tail);
    return traj;
}

}  // namespace

MCTSResult search(const Simulator& sim, const MCTSParams& params, Rng& rng) {
    params.validate();
    MCTSParams effective = params;
    if (!effective.granularity) {
        effective.granularity = sim.action_model().component_sigma();
        effective.validate();
    }
    const Vec6 gran = *effective.granularity;

    const int horizon = sim.reward_spec().horizon;
    const int depth_cap =
        effective.max_depth > 0 ? std::min(effective.max_depth, horizon) : horizon;

    MCTSResult result;
    result.tree = std::make_shared<TreeNode>();

    for (int iter = 0; iter < effective.iterations; ++iter) {
        const auto iter_start = std::chrono::steady_clock::now();
        for (int b = 0; b < effective.batch_size; ++b) {
            const std::uint64_t stream =
                static_cast<std::uint64_t>(iter) * effective.batch_size + b + 1;
            Trajectory traj = run_simulation(sim, *result.tree, effective, gran, depth_cap,
                                             rng.derive(stream));
            result.rollouts += 1;
            if (traj.ends_in_failure) {
                if (!result.best_failure ||
                    traj.total_reward > result.best_failure->total_reward ||
                    (traj.total_reward == result.best_failure->total_reward &&
                     traj.length() < result.best_failure->length())) {
                    result.best_failure = std::move(traj);
                }
            }
        }
        IterationRecord record;
        record.iteration = iter + 1;
        record.found_failure = result.best_failure.has_value();
        record.best_reward = record.found_failure ? result.best_failure->total_reward
                                                  : -std::numeric_limits<double>::infinity();
        record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - iter_start)
                             .count();
        result.log.push_back(record);
    }
    return result;
}

}  // namespace stresslab
