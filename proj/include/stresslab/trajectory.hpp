#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "stresslab/actions.hpp"

namespace stresslab {

// Deterministic round-trip text form for doubles, used by every CSV writer.
std::string format_double(double v);

struct TrajectoryStep {
    ActionVector action;
    StepOutcome outcome;
    double reward = 0.0;
};

struct Trajectory {
    std::string scenario_id;
    std::vector<TrajectoryStep> steps;
    double total_reward = 0.0;
    bool ends_in_failure = false;
    bool truncated = false;

    std::size_t length() const { return steps.size(); }

    void append(const ActionVector& action, const StepOutcome& outcome, double step_reward);

    std::vector<ActionVector> action_sequence() const;

    std::string to_csv() const;
    nlohmann::json to_json() const;
    static Trajectory from_json(const nlohmann::json& j);
};

}  // namespace stresslab
