#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stresslab/actions.hpp"
#include "stresslab/trajectory.hpp"

namespace stresslab {

// Opaque episode state owned by a Simulator. Solvers only ever hold a handle;
// they drive the system exclusively through reset/step with action vectors.
class SimHandle {
  public:
    virtual ~SimHandle() = default;
    virtual std::unique_ptr<SimHandle> clone() const = 0;
};

class Simulator {
  public:
    virtual ~Simulator() = default;

    virtual std::string scenario_id() const = 0;
    virtual const RewardSpec& reward_spec() const = 0;
    virtual const ActionBounds& action_bounds() const = 0;
    virtual const ActionModel& action_model() const = 0;

    // Scaled features of the fixed initial conditions, exposed so learned
    // policies can condition on the scenario. May be empty.
    virtual std::vector<double> initial_conditions() const { return {}; }

    virtual std::unique_ptr<SimHandle> reset() const = 0;

    virtual bool is_terminal(const SimHandle& handle) const = 0;

    // Advances one step. The likelihood term is evaluated on the raw action,
    // clamping to bounds happens inside before the dynamics update. Stepping a
    // terminal handle is a usage error and throws.
    virtual StepOutcome step(SimHandle& handle, const ActionVector& action) const = 0;
};

// Runs an action sequence from reset, accumulating per-step rewards. Actions
// past the first terminal outcome are dropped and the result is marked
// truncated.
Trajectory replay(const Simulator& sim, std::span<const ActionVector> actions);

// Convenience scalar: total reward of a sequence.
double rollout_return(const Simulator& sim, std::span<const ActionVector> actions);

}  // namespace stresslab
