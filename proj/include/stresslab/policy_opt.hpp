#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stresslab/policy.hpp"
#include "stresslab/rng.hpp"
#include "stresslab/search_log.hpp"
#include "stresslab/simulator.hpp"

namespace stresslab {

// One policy-controlled episode as collected: everything the update needs to
// recompute ratios and advantages against the generating parameters.
struct Episode {
    std::vector<std::vector<double>> observations;
    std::vector<Vec6> actions;
    std::vector<double> rewards;
    std::vector<double> log_probs;
    std::vector<Vec6> old_means;
    std::vector<Vec6> old_log_stds;
    std::vector<double> values;

    std::size_t length() const { return actions.size(); }
};

struct OptimConfig {
    double clip_range = 1.0;
    double kl_coef = 1.0;
    double gamma = 0.99;
    double lambda = 1.0;
    double learning_rate = 3e-4;
    int epochs_per_update = 1;
    double entropy_coef = 0.0;
    double value_coef = 0.5;

    void validate() const;
};

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);
std::vector<double> gae_advantages(std::span<const double> rewards,
                                   std::span<const double> values, double gamma, double lambda);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;

    void step(std::vector<double>& params, std::span<const double> grad, double lr);
};

struct PPODiagnostics {
    double loss = 0.0;
    double mean_kl = 0.0;
    double clip_fraction = 0.0;
    bool aborted = false;
    int abort_step = -1;  // index into the flattened step sequence
};

// Scalar training loss (minimized): negative clipped surrogate plus KL
// penalty, value-head squared error, and optional entropy bonus, averaged over
// all steps in the batch. Fills grad_out with dLoss/dParams when non-null.
PPODiagnostics ppo_loss(Policy& policy, const std::vector<Episode>& batch,
                        const OptimConfig& config, std::vector<double>* grad_out);

// Runs epochs_per_update gradient steps on the batch. A non-finite loss or
// gradient aborts the remaining epochs without applying that step.
PPODiagnostics ppo_update(Policy& policy, const std::vector<Episode>& batch,
                          const OptimConfig& config, AdamState& adam);

struct CollectedEpisode {
    Episode episode;       // policy-controlled steps only
    Trajectory trajectory; // full episode including any replayed prefix
};

// Replays prefix_actions verbatim, then lets the policy finish the episode.
// The prefix terminating early is a usage error.
CollectedEpisode collect_episode(const Simulator& sim, Policy& policy, Rng& rng,
                                 std::span<const ActionVector> prefix_actions = {});

struct DRLParams {
    OptimConfig optim;
    int iterations = 30;
    int batch_size = 100;
    int hidden = 64;
    bool peephole = false;

    void validate() const;
};

struct DRLResult {
    std::optional<Trajectory> best_failure;
    std::vector<IterationRecord> log;
    std::shared_ptr<RecurrentGaussianPolicy> policy;
    std::uint64_t rollouts = 0;
};

DRLResult drl_solve(const Simulator& sim, const DRLParams& params, Rng& rng);

struct BAConfig {
    OptimConfig optim;
    int iterations = 20;
    int batch_size = 500;
    // When unset, the start index walks the expert evenly across the budget;
    // when set, each index is trained for exactly this many iterations and
    // iterations >= expert length * epochs_per_step is required.
    std::optional<int> epochs_per_step;
    int hidden = 64;
    bool peephole = false;

    void validate(std::size_t expert_len) const;
};

// Start index for iteration k (0-based): how many expert actions are replayed
// before the policy takes over. Walks monotonically down to 0 by the last
// iteration.
int ba_start_index(std::size_t expert_len, const BAConfig& config, int k);

struct BAResult {
    Trajectory robustified;
    std::vector<IterationRecord> log;
    std::shared_ptr<RecurrentGaussianPolicy> policy;
    std::uint64_t rollouts = 0;
};

// Robustification: trains a policy on rollouts that replay a shrinking prefix
// of the expert failure and returns the best failure trajectory seen anywhere
// in training, never worse than the expert itself.
BAResult backwards_algorithm(const Simulator& sim, const Trajectory& expert,
                             const BAConfig& config, Rng& rng);

}  // namespace stresslab
