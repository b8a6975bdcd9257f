#include "stresslab/go_explore.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stresslab {

void GEParams::validate() const {
    if (eps1 <= 0.0 || eps2 <= 0.0) {
        throw std::invalid_argument("ge.eps1/eps2: must be > 0");
    }
    if (gamma <= 0.0 || gamma > 1.0) {
        throw std::invalid_argument("ge.gamma: must be in (0, 1]");
    }
    if (tau <= 0.0) {
        throw std::invalid_argument("ge.tau: must be > 0");
    }
    if (granularity) {
        for (int i = 0; i < kActionDim; ++i) {
            if (!((*granularity)[i] > 0.0)) {
                throw std::invalid_argument("ge.granularity: components must be > 0");
            }
        }
    }
    if (batch_size < 1 || iterations < 0) {
        throw std::invalid_argument("ge.batch_size/iterations: must be positive");
    }
}

std::uint64_t cell_index(int t, const ActionVector& a, const Vec6& granularity) {
    const Vec6 v = a.as_vec6();
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(t) + 0x51ed270b0f4d2d9cull);
    for (int i = 0; i < kActionDim; ++i) {
        const auto bin = static_cast<std::int64_t>(std::floor(v[i] / granularity[i]));
        h = hash_combine(h, static_cast<std::uint64_t>(bin));
    }
    return h;
}

double count_subscore(const Cell& cell, int attribute, const GEParams& params) {
    int v = 0;
    switch (attribute) {
        case 0: v = cell.times_chosen; break;
        case 1: v = cell.times_chosen_since_improvement; break;
        case 2: v = cell.times_seen; break;
        default: throw std::invalid_argument("count_subscore: attribute must be 0, 1, or 2");
    }
    return params.w[attribute] * std::pow(1.0 / (v + params.eps1), params.p) + params.eps2;
}

double cell_score(const Cell& cell, const GEParams& params) {
    double cnt = 0.0;
    for (int a = 0; a < 3; ++a) {
        cnt += count_subscore(cell, a, params);
    }
    const double exponent = std::max(cell.value_est / params.tau, -700.0);
    return std::exp(exponent) * (1.0 + cnt);
}

CellPool::CellPool(double gamma) : gamma_(gamma) {
    Cell root;
    root.index = kRootCellIndex;
    root.times_seen = 1;
    cells_.emplace(root.index, std::move(root));
}

const Cell& CellPool::at(std::uint64_t index) const {
    auto it = cells_.find(index);
    if (it == cells_.end()) {
        throw std::out_of_range("cell_pool: unknown cell index");
    }
    return it->second;
}

Cell& CellPool::at(std::uint64_t index) {
    auto it = cells_.find(index);
    if (it == cells_.end()) {
        throw std::out_of_range("cell_pool: unknown cell index");
    }
    return it->second;
}

InsertResult CellPool::insert_or_update(Cell candidate) {
    auto it = cells_.find(candidate.index);
    if (it == cells_.end()) {
        candidate.times_seen = 1;
        if (candidate.parent_index) {
            at(*candidate.parent_index).child_indices.insert(candidate.index);
        }
        cells_.emplace(candidate.index, std::move(candidate));
        return InsertResult::kInserted;
    }

    Cell& current = it->second;
    current.times_seen += 1;
    const bool better =
        candidate.cumulative_return > current.cumulative_return ||
        (candidate.cumulative_return == current.cumulative_return &&
         candidate.history_len < current.history_len);
    if (!better) {
        return InsertResult::kIgnored;
    }
    const auto old_parent = current.parent_index;
    const bool reparented = old_parent != candidate.parent_index;
    if (reparented) {
        if (old_parent && contains(*old_parent)) {
            at(*old_parent).child_indices.erase(current.index);
        }
        if (candidate.parent_index) {
            at(*candidate.parent_index).child_indices.insert(current.index);
        }
    }
    current.history = std::move(candidate.history);
    current.history_len = candidate.history_len;
    current.cumulative_return = candidate.cumulative_return;
    current.parent_index = candidate.parent_index;
    current.is_failure = candidate.is_failure;
    if (reparented) {
        if (old_parent && contains(*old_parent)) {
            refresh_ancestors(*old_parent);
        }
        if (current.parent_index) {
            refresh_ancestors(*current.parent_index);
        }
    }
    return InsertResult::kReplaced;
}

void CellPool::refresh_value(Cell& cell) {
    double best_child = 0.0;
    bool has_child = false;
    for (const std::uint64_t child : cell.child_indices) {
        auto it = cells_.find(child);
        if (it == cells_.end()) {
            continue;
        }
        if (!has_child || it->second.value_est > best_child) {
            best_child = it->second.value_est;
            has_child = true;
        }
    }
    const double mean_reward = cell.times_seen > 0 ? cell.reward_sum / cell.times_seen : 0.0;
    cell.value_est = mean_reward + gamma_ * (has_child ? best_child : 0.0);
}

void CellPool::update_value(std::uint64_t index, double r) {
    at(index).reward_sum += r;
    refresh_ancestors(index);
}

void CellPool::refresh_ancestors(std::uint64_t index) {
    Cell* cell = &at(index);
    while (true) {
        refresh_value(*cell);
        if (!cell->parent_index) {
            break;
        }
        cell = &at(*cell->parent_index);
    }
}

void CellPool::update_path(const std::vector<std::uint64_t>& path,
                           const std::vector<double>& rewards) {
    if (path.size() != rewards.size()) {
        throw std::invalid_argument("cell_pool: path and rewards lengths differ");
    }
    for (std::size_t i = 0; i < path.size(); ++i) {
        at(path[i]).reward_sum += rewards[i];
    }
    // Values propagate along stored parent edges, which can differ from the
    // visit path for cells whose stored history came from another rollout.
    std::set<std::uint64_t> dirty;
    for (const std::uint64_t start : path) {
        const Cell* cell = &at(start);
        while (dirty.insert(cell->index).second && cell->parent_index) {
            cell = &at(*cell->parent_index);
        }
    }
    std::vector<Cell*> order;
    order.reserve(dirty.size());
    for (const std::uint64_t index : dirty) {
        order.push_back(&at(index));
    }
    std::sort(order.begin(), order.end(), [](const Cell* a, const Cell* b) {
        return a->history_len > b->history_len;
    });
    for (Cell* cell : order) {
        refresh_value(*cell);
    }
}

std::vector<double> CellPool::normalized_scores(const GEParams& params) const {
    double vmax = -std::numeric_limits<double>::infinity();
    for (const auto& [index, cell] : cells_) {
        vmax = std::max(vmax, cell.value_est);
    }
    std::vector<double> scores;
    scores.reserve(cells_.size());
    double total = 0.0;
    for (const auto& [index, cell] : cells_) {
        double cnt = 0.0;
        for (int a = 0; a < 3; ++a) {
            cnt += count_subscore(cell, a, params);
        }
        const double exponent = std::max((cell.value_est - vmax) / params.tau, -700.0);
        const double s = std::exp(exponent) * (1.0 + cnt);
        scores.push_back(s);
        total += s;
    }
    for (double& s : scores) {
        s /= total;
    }
    return scores;
}

std::uint64_t CellPool::select_cell(const GEParams& params, Rng& rng) {
    if (cells_.empty()) {
        throw std::logic_error("cell_pool: select from empty pool");
    }
    const std::vector<double> probs = normalized_scores(params);
    const double u = rng.uniform01();
    double acc = 0.0;
    std::size_t i = 0;
    auto it = cells_.begin();
    for (; it != cells_.end(); ++it, ++i) {
        acc += probs[i];
        if (u < acc || std::next(it) == cells_.end()) {
            break;
        }
    }
    Cell& chosen = it->second;
    chosen.times_chosen += 1;
    chosen.times_chosen_since_improvement += 1;
    return chosen.index;
}

nlohmann::json CellPool::to_json() const {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [index, cell] : cells_) {
        nlohmann::json c;
        c["index"] = index;
        nlohmann::json hist = nlohmann::json::array();
        for (const ActionVector& a : cell.action_history()) {
            const Vec6 v = a.as_vec6();
            hist.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
        }
        c["history"] = std::move(hist);
        c["cumulative_return"] = cell.cumulative_return;
        c["value_est"] = cell.value_est;
        c["reward_sum"] = cell.reward_sum;
        c["times_chosen"] = cell.times_chosen;
        c["times_chosen_since_improvement"] = cell.times_chosen_since_improvement;
        c["times_seen"] = cell.times_seen;
        if (cell.parent_index) {
            c["parent_index"] = *cell.parent_index;
        }
        c["children"] = cell.child_indices;
        c["is_failure"] = cell.is_failure;
        cells.push_back(std::move(c));
    }
    nlohmann::json j;
    j["gamma"] = gamma_;
    j["cells"] = std::move(cells);
    return j;
}

CellPool CellPool::from_json(const nlohmann::json& j) {
    CellPool pool(j.value("gamma", 0.99));
    pool.cells_.clear();
    for (const auto& c : j.at("cells")) {
        Cell cell;
        cell.index = c.at("index").get<std::uint64_t>();
        auto buffer = std::make_shared<std::vector<ActionVector>>();
        for (const auto& av : c.at("history")) {
            Vec6 v;
            for (int i = 0; i < kActionDim; ++i) {
                v[i] = av.at(i).get<double>();
            }
            buffer->push_back(ActionVector::from_vec6(v));
        }
        cell.history_len = buffer->size();
        cell.history = std::move(buffer);
        cell.cumulative_return = c.at("cumulative_return").get<double>();
        cell.value_est = c.at("value_est").get<double>();
        cell.reward_sum = c.at("reward_sum").get<double>();
        cell.times_chosen = c.at("times_chosen").get<int>();
        cell.times_chosen_since_improvement =
            c.at("times_chosen_since_improvement").get<int>();
        cell.times_seen = c.at("times_seen").get<int>();
        if (c.contains("parent_index")) {
            cell.parent_index = c.at("parent_index").get<std::uint64_t>();
        }
        for (const auto& child : c.at("children")) {
            cell.child_indices.insert(child.get<std::uint64_t>());
        }
        cell.is_failure = c.at("is_failure").get<bool>();
        pool.cells_.emplace(cell.index, std::move(cell));
    }
    if (!pool.contains(kRootCellIndex)) {
        throw std::invalid_argument("cell_pool: checkpoint is missing the root cell");
    }
    return pool;
}

namespace {

struct RolloutOutcome {
    std::uint64_t selected = 0;
    Trajectory traj;
};

RolloutOutcome run_rollout(const Simulator& sim, const CellPool& pool,
                           const std::vector<std::uint64_t>& order,
                           const std::vector<double>& cumulative, Rng rng) {
    RolloutOutcome out;
    const double u = rng.uniform01();
    std::size_t pick = std::lower_bound(cumulative.begin(), cumulative.end(), u) -
                       cumulative.begin();
    pick = std::min(pick, order.size() - 1);
    out.selected = order[pick];
    const Cell& cell = pool.at(out.selected);

    out.traj.scenario_id = sim.scenario_id();
    const RewardSpec& spec = sim.reward_spec();
    auto handle = sim.reset();
    for (const ActionVector& a : cell.action_history()) {
        const StepOutcome step = sim.step(*handle, a);
        out.traj.append(a, step, reward(step, spec));
        if (step.terminal) {
            break;
        }
    }
    while (!sim.is_terminal(*handle)) {
        const ActionVector a = sim.action_bounds().sample_uniform(rng);
        const StepOutcome step = sim.step(*handle, a);
        out.traj.append(a, step, reward(step, spec));
    }
    return out;
}

}  // namespace

GEResult explore(const Simulator& sim, const GEParams& params, Rng& rng,
                 CellPool initial_pool) {
    params.validate();
    GEParams effective = params;
    if (!effective.granularity) {
        effective.granularity = sim.action_model().component_sigma();
        effective.validate();
    }
    const Vec6 gran = *effective.granularity;

    GEResult result;
    result.pool = std::move(initial_pool);
    CellPool& pool = result.pool;
    pool.set_gamma(effective.gamma);

    double best_failure_reward = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < effective.iterations; ++iter) {
        const auto iter_start = std::chrono::steady_clock::now();
        // Frozen selection distribution per iteration so results do not depend
        // on rollout completion order.
        std::vector<std::uint64_t> order;
        order.reserve(pool.size());
        for (const auto& [index, cell] : pool.cells()) {
            order.push_back(index);
        }
        const std::vector<double> probs = pool.normalized_scores(effective);
        std::vector<double> cumulative(probs.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            cumulative[i] = acc;
        }
        cumulative.back() = 1.0;

        std::vector<RolloutOutcome> outcomes;
        outcomes.reserve(effective.batch_size);
        for (int b = 0; b < effective.batch_size; ++b) {
            const std::uint64_t stream =
                static_cast<std::uint64_t>(iter) * effective.batch_size + b + 1;
            outcomes.push_back(run_rollout(sim, pool, order, cumulative, rng.derive(stream)));
        }

        for (RolloutOutcome& out : outcomes) {
            result.rollouts += 1;
            Cell& selected = pool.at(out.selected);
            selected.times_chosen += 1;
            selected.times_chosen_since_improvement += 1;

            auto buffer = std::make_shared<std::vector<ActionVector>>(
                out.traj.action_sequence());
            bool improved = false;
            double cumulative_return = 0.0;
            std::uint64_t parent = kRootCellIndex;
            std::vector<std::uint64_t> path{kRootCellIndex};
            std::vector<double> credits{0.0};
            pool.at(kRootCellIndex).times_seen += 1;
            for (std::size_t t = 0; t < out.traj.length(); ++t) {
                const TrajectoryStep& step = out.traj.steps[t];
                cumulative_return += step.reward;
                const std::uint64_t index = cell_index(static_cast<int>(t), step.action, gran);
                Cell candidate;
                candidate.index = index;
                candidate.history = buffer;
                candidate.history_len = t + 1;
                candidate.cumulative_return = cumulative_return;
                candidate.parent_index = parent;
                candidate.is_failure = step.outcome.event;
                const InsertResult res = pool.insert_or_update(std::move(candidate));
                improved |= res != InsertResult::kIgnored;
                path.push_back(index);
                credits.push_back(step.reward);
                parent = index;
            }
            pool.update_path(path, credits);
            if (improved) {
                pool.at(out.selected).times_chosen_since_improvement = 0;
            }
            if (out.traj.ends_in_failure && out.traj.total_reward > best_failure_reward) {
                best_failure_reward = out.traj.total_reward;
                result.best_failure = std::move(out.traj);
            }
        }

        IterationRecord record;
        record.iteration = iter + 1;
        record.found_failure = result.best_failure.has_value();
        record.best_reward = record.found_failure
                                 ? best_failure_reward
                                 : -std::numeric_limits<double>::infinity();
        record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - iter_start)
                             .count();
        result.log.push_back(record);
    }
    return result;
}

}  // namespace stresslab
