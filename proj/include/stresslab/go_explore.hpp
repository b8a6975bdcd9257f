#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stresslab/rng.hpp"
#include "stresslab/search_log.hpp"
#include "stresslab/simulator.hpp"

namespace stresslab {

struct GEParams {
    std::array<double, 3> w = {0.1, 0.0, 0.3};  // times_chosen, since_improvement, times_seen
    double p = 0.5;
    double eps1 = 0.001;
    double eps2 = 1e-5;
    double gamma = 0.99;
    double tau = 100.0;
    std::optional<Vec6> granularity;  // bin widths; defaults to one sigma per component
    int batch_size = 100;
    int iterations = 30;

    void validate() const;
};

inline constexpr std::uint64_t kRootCellIndex = 0xd1b54a32d192ed03ull;

std::uint64_t cell_index(int t, const ActionVector& a, const Vec6& granularity);

struct Cell {
    std::uint64_t index = 0;
    std::shared_ptr<const std::vector<ActionVector>> history;
    std::size_t history_len = 0;
    double cumulative_return = 0.0;
    double value_est = 0.0;
    double reward_sum = 0.0;
    int times_chosen = 0;
    int times_chosen_since_improvement = 0;
    int times_seen = 0;
    std::optional<std::uint64_t> parent_index;
    std::set<std::uint64_t> child_indices;
    bool is_failure = false;

    std::size_t traj_len() const { return history_len; }
    std::span<const ActionVector> action_history() const {
        return history ? std::span(history->data(), history_len)
                       : std::span<const ActionVector>();
    }
};

// Eq-style fitness pieces: attribute 0 = times_chosen, 1 = times chosen since
// improvement, 2 = times_seen.
double count_subscore(const Cell& cell, int attribute, const GEParams& params);
double cell_score(const Cell& cell, const GEParams& params);

enum class InsertResult { kInserted, kReplaced, kIgnored };

class CellPool {
  public:
    explicit CellPool(double gamma = 0.99);

    std::size_t size() const { return cells_.size(); }
    double gamma() const { return gamma_; }
    void set_gamma(double gamma) { gamma_ = gamma; }
    bool contains(std::uint64_t index) const { return cells_.count(index) > 0; }
    const Cell& at(std::uint64_t index) const;
    Cell& at(std::uint64_t index);
    const std::map<std::uint64_t, Cell>& cells() const { return cells_; }

    // Callers follow every visit with a value credit (update_value or
    // update_path); value estimates are guaranteed consistent at those points.
    InsertResult insert_or_update(Cell candidate);

    // Credits one observed reward at the cell, then refreshes the value
    // estimates of the cell and every ancestor.
    void update_value(std::uint64_t index, double r);

    // Batched form of update_value for one rollout: path runs root-first,
    // rewards align with path entries. Refreshes each path cell once,
    // deepest first; the result matches per-step update_value calls.
    void update_path(const std::vector<std::uint64_t>& path,
                     const std::vector<double>& rewards);

    // Selection probabilities in ascending index order.
    std::vector<double> normalized_scores(const GEParams& params) const;
    std::uint64_t select_cell(const GEParams& params, Rng& rng);

    nlohmann::json to_json() const;
    static CellPool from_json(const nlohmann::json& j);

  private:
    void refresh_value(Cell& cell);
    void refresh_ancestors(std::uint64_t index);
    double gamma_;
    std::map<std::uint64_t, Cell> cells_;
};

struct GEResult {
    std::optional<Trajectory> best_failure;
    std::vector<IterationRecord> log;
    CellPool pool;
    std::uint64_t rollouts = 0;
};

GEResult explore(const Simulator& sim, const GEParams& params, Rng& rng,
                 CellPool initial_pool = CellPool());

}  // namespace stresslab
