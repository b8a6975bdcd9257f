#include "stresslab/simulator.hpp"

namespace stresslab {

Trajectory replay(const Simulator& sim, std::span<const ActionVector> actions) {
    Trajectory traj;
    traj.scenario_id = sim.scenario_id();
    const RewardSpec& spec = sim.reward_spec();
    auto handle = sim.reset();
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const StepOutcome outcome = sim.step(*handle, actions[i]);
        traj.append(actions[i], outcome, reward(outcome, spec));
        if (outcome.event || outcome.terminal) {
            traj.truncated = i + 1 < actions.size();
            break;
        }
    }
    return traj;
}

double rollout_return(const Simulator& sim, std::span<const ActionVector> actions) {
    return replay(sim, actions).total_reward;
}

}  // namespace stresslab
