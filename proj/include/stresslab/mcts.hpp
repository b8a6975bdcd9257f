#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "stresslab/rng.hpp"
#include "stresslab/search_log.hpp"
#include "stresslab/simulator.hpp"

namespace stresslab {

struct MCTSParams {
    double c_explore = 100.0;
    double k_dpw = 0.5;
    double alpha_dpw = 0.5;
    std::optional<Vec6> granularity;  // action bin widths; defaults to one sigma per component
    int batch_size = 100;
    int iterations = 30;
    int max_depth = 0;  // 0 means no cap below the episode horizon

    void validate() const;
};

struct TreeNode;

// One action edge out of a node. Edges are keyed by the discretized action so
// near-identical samples share statistics, but replay uses the raw action that
// first created the edge.
struct TreeEdge {
    std::uint64_t key = 0;
    ActionVector raw_action;
    int n_sa = 0;
    double q = 0.0;
    std::unique_ptr<TreeNode> child;
};

struct TreeNode {
    int n_s = 0;
    std::vector<TreeEdge> edges;  // insertion order preserved

    TreeEdge* find_edge(std::uint64_t key);
};

// Hash of the per-component bin indices of an action. Same binning convention
// as the explorer's cell keys, minus the time component.
std::uint64_t action_key(const ActionVector& action, const Vec6& granularity);

// Index of the edge to follow: the first unvisited edge in insertion order if
// any, otherwise argmax of q + c * sqrt(ln(n_s) / n_sa) with ties broken by
// insertion order. Calling this on a node with no edges is a usage error.
std::size_t ucb_select(const TreeNode& node, double c_explore);

// Progressive widening test: a new action may be added while
// |edges| < k * n_s^alpha.
bool dpw_allow_new_action(const TreeNode& node, const MCTSParams& params);

// One entry of the in-tree path walked by a simulation, with the immediate
// reward its step produced.
struct PathEntry {
    TreeNode* node = nullptr;
    std::size_t edge = 0;
    double step_reward = 0.0;
};

// Credits a finished simulation to the edges it traversed, leaf to root. Each
// edge's q becomes the running mean of the returns observed from that edge
// onward (its step reward plus everything after). Visit counts on nodes are
// incremented at entry during descent, not here, so n_s == sum of edge n_sa
// holds after every backup.
void backpropagate(std::span<PathEntry> path, double tail_return);

struct TreeStats {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t max_depth = 0;
    std::vector<std::size_t> nodes_per_depth;

    nlohmann::json to_json() const;
};

TreeStats tree_stats(const TreeNode& root);

struct MCTSResult {
    std::optional<Trajectory> best_failure;
    std::vector<IterationRecord> log;
    std::shared_ptr<TreeNode> tree;
    std::uint64_t rollouts = 0;
};

MCTSResult search(const Simulator& sim, const MCTSParams& params, Rng& rng);

}  // namespace stresslab
